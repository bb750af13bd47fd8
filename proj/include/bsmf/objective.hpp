// MAP objective for determinant-regularized structured factorization.
//
//   J(H, S) = ||Y - H S||_F^2 + lambda * log det((H^T H + Psi) / beta)
//
// with beta = M + r + phi + 1 and lambda = beta * sigma_v2. This is
// 2*sigma_v2 times the negative log posterior after Sigma_h has been
// profiled out at its stationary value (H^T H + Psi) / beta.
#pragma once

#include "bsmf/core.hpp"
#include "bsmf/domains.hpp"

namespace bsmf {

class ObjectiveParams {
 public:
  /// lambda follows the prescription beta * sigma_v2.
  ObjectiveParams(double sigma_v2, Matrix Psi, double phi, int M);

  /// Manual regularization weight. The implied noise variance lambda/beta is
  /// what the posterior terms then assume.
  static ObjectiveParams with_lambda(double lambda, Matrix Psi, double phi, int M);

  double sigma_v2() const noexcept { return sigma_v2_; }
  const Matrix& Psi() const noexcept { return Psi_; }
  double phi() const noexcept { return phi_; }
  int M() const noexcept { return M_; }
  int r() const noexcept { return static_cast<int>(Psi_.rows()); }
  double beta() const noexcept { return beta_; }
  double lambda() const noexcept { return lambda_; }

 private:
  double sigma_v2_;
  Matrix Psi_;
  double phi_;
  int M_;
  double beta_;
  double lambda_;
};

/// Sigma-hat = mu * (H^T H / M) + (1 - mu) * Psi / (phi + r + 1).
struct CovarianceBlend {
  Matrix sample_cov;
  Matrix prior_mode;
  double mu;
  Matrix blended;
};

/// The four variable pieces of log f(H, S, Sigma | Y), up to -log f_Y(Y).
struct LogPosteriorTerms {
  double data;         // -||Y - HS||^2 / (2 sigma_v2) + c1
  double source;       // 0 inside the domain, -inf outside
  double conditional;  // log f(H | Sigma)
  double prior;        // log IW(Sigma; Psi, phi)

  double total() const noexcept { return data + source + conditional + prior; }
};

/// 2 * sum(log(diag(chol(A)))). Throws NumericalError with diagnostics when A
/// is not numerically positive definite.
double logdet_spd(const Matrix& A);

double evaluate(const ObjectiveParams& params, const Matrix& Y, const Matrix& H, const Matrix& S);

/// -2 (Y - HS) S^T + 2 lambda H (H^T H + Psi)^{-1}.
Matrix grad_H(const ObjectiveParams& params, const Matrix& Y, const Matrix& H, const Matrix& S);

/// -2 H^T (Y - HS).
Matrix grad_S(const ObjectiveParams& params, const Matrix& Y, const Matrix& H, const Matrix& S);

/// (H^T H + Psi) / (M + r + phi + 1).
Matrix sigma_stationary(const Matrix& H, const Matrix& Psi, double phi, int M);

LogPosteriorTerms log_posterior_terms(const Matrix& H, const Matrix& S, const Matrix& Sigma,
                                      const ObjectiveParams& params, const Matrix& Y,
                                      const DomainSpec& domain);

CovarianceBlend covariance_blend(const Matrix& H, const Matrix& Psi, double phi, int M);

/// log of the multivariate gamma function Gamma_r(a).
double log_multivariate_gamma(int r, double a);

}  // namespace bsmf
