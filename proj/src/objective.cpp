#include "bsmf/objective.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

namespace bsmf {

namespace {

void check_shapes(const ObjectiveParams& p, const Matrix& Y, const Matrix& H, const Matrix& S) {
  const auto r = p.r();
  if (H.cols() != r || S.rows() != r || Y.rows() != H.rows() || Y.cols() != S.cols() ||
      H.rows() != p.M()) {
    std::ostringstream os;
    os << "shape mismatch: Y " << Y.rows() << "x" << Y.cols() << ", H " << H.rows() << "x"
       << H.cols() << ", S " << S.rows() << "x" << S.cols() << ", expected M=" << p.M()
       << " r=" << r;
    throw InvalidArgument(os.str());
  }
}

Eigen::LLT<Matrix> checked_llt(const Matrix& A, const char* what) {
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success || !llt.matrixLLT().diagonal().allFinite()) {
    std::ostringstream os;
    os << what << " is not numerically positive definite";
    if (A.allFinite()) {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(A, Eigen::EigenvaluesOnly);
      const auto& ev = eig.eigenvalues();
      os << " (eigenvalues in [" << ev.minCoeff() << ", " << ev.maxCoeff() << "]";
      if (ev.minCoeff() > 0.0) os << ", condition " << ev.maxCoeff() / ev.minCoeff();
      os << ")";
    } else {
      os << " (non-finite entries)";
    }
    throw NumericalError(os.str());
  }
  return llt;
}

double logdet_from(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

void check_params(double sigma_v2, const Matrix& Psi, double phi, int M) {
  if (!(sigma_v2 > 0.0) || !std::isfinite(sigma_v2))
    throw InvalidArgument("objective needs a positive finite sigma_v2");
  if (M < 1) throw InvalidArgument("M must be positive");
  if (Psi.rows() != Psi.cols() || Psi.rows() == 0) throw InvalidArgument("Psi must be square");
  if (!Psi.allFinite() || Eigen::LLT<Matrix>(Psi).info() != Eigen::Success)
    throw InvalidArgument("Psi must be symmetric positive definite");
  if (!(M + Psi.rows() + phi + 1.0 > 0.0)) throw InvalidArgument("M + r + phi + 1 must be positive");
}

}  // namespace

ObjectiveParams::ObjectiveParams(double sigma_v2, Matrix Psi, double phi, int M)
    : sigma_v2_(sigma_v2), Psi_(std::move(Psi)), phi_(phi), M_(M) {
  check_params(sigma_v2_, Psi_, phi_, M_);
  beta_ = M_ + static_cast<double>(Psi_.rows()) + phi_ + 1.0;
  lambda_ = beta_ * sigma_v2_;
}

ObjectiveParams ObjectiveParams::with_lambda(double lambda, Matrix Psi, double phi, int M) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be positive");
  const double beta = M + static_cast<double>(Psi.rows()) + phi + 1.0;
  if (!(beta > 0.0)) throw InvalidArgument("M + r + phi + 1 must be positive");
  ObjectiveParams p(lambda / beta, std::move(Psi), phi, M);
  p.lambda_ = lambda;
  return p;
}

double logdet_spd(const Matrix& A) { return logdet_from(checked_llt(A, "matrix")); }

double evaluate(const ObjectiveParams& params, const Matrix& Y, const Matrix& H, const Matrix& S) {
  check_shapes(params, Y, H, S);
  const double fit = (Y - H * S).squaredNorm();
  const Matrix A = (H.transpose() * H + params.Psi()) / params.beta();
  return fit + params.lambda() * logdet_from(checked_llt(A, "(H^T H + Psi)/beta"));
}

Matrix grad_H(const ObjectiveParams& params, const Matrix& Y, const Matrix& H, const Matrix& S) {
  check_shapes(params, Y, H, S);
  const Matrix A = H.transpose() * H + params.Psi();
  const auto llt = checked_llt(A, "H^T H + Psi");
  // H A^{-1} = (A^{-1} H^T)^T since A is symmetric.
  const Matrix HAinv = llt.solve(H.transpose()).transpose();
  return -2.0 * (Y - H * S) * S.transpose() + 2.0 * params.lambda() * HAinv;
}

Matrix grad_S(const ObjectiveParams& params, const Matrix& Y, const Matrix& H, const Matrix& S) {
  check_shapes(params, Y, H, S);
  return -2.0 * H.transpose() * (Y - H * S);
}

Matrix sigma_stationary(const Matrix& H, const Matrix& Psi, double phi, int M) {
  if (Psi.rows() != Psi.cols() || H.cols() != Psi.rows())
    throw InvalidArgument("sigma_stationary: H columns must match Psi size");
  const double beta = M + static_cast<double>(Psi.rows()) + phi + 1.0;
  if (!(beta > 0.0)) throw InvalidArgument("M + r + phi + 1 must be positive");
  return (H.transpose() * H + Psi) / beta;
}

CovarianceBlend covariance_blend(const Matrix& H, const Matrix& Psi, double phi, int M) {
  if (Psi.rows() != Psi.cols() || H.cols() != Psi.rows())
    throw InvalidArgument("covariance_blend: H columns must match Psi size");
  if (M < 1) throw InvalidArgument("M must be positive");
  const double r = static_cast<double>(Psi.rows());
  const double prior_dof = phi + r + 1.0;
  if (!(prior_dof > 0.0)) throw InvalidArgument("phi + r + 1 must be positive");
  CovarianceBlend b;
  b.sample_cov = H.transpose() * H / static_cast<double>(M);
  b.prior_mode = Psi / prior_dof;
  b.mu = M / (M + prior_dof);
  b.blended = b.mu * b.sample_cov + (1.0 - b.mu) * b.prior_mode;
  return b;
}

double log_multivariate_gamma(int r, double a) {
  if (r < 1) throw InvalidArgument("multivariate gamma needs r >= 1");
  if (!(a > 0.5 * (r - 1))) throw InvalidArgument("multivariate gamma needs a > (r - 1)/2");
  double s = 0.25 * r * (r - 1) * std::log(std::numbers::pi);
  for (int j = 1; j <= r; ++j) s += std::lgamma(a + 0.5 * (1 - j));
  return s;
}

LogPosteriorTerms log_posterior_terms(const Matrix& H, const Matrix& S, const Matrix& Sigma,
                                      const ObjectiveParams& params, const Matrix& Y,
                                      const DomainSpec& domain) {
  if (H.cols() != S.rows() || Y.rows() != H.rows() || Y.cols() != S.cols())
    throw InvalidArgument("log_posterior_terms: incompatible shapes");
  const int M = static_cast<int>(H.rows());
  const int N = static_cast<int>(S.cols());
  const int r = static_cast<int>(H.cols());
  if (Sigma.rows() != r || Sigma.cols() != r || params.r() != r)
    throw InvalidArgument("log_posterior_terms: Sigma and Psi must be r x r");
  if (domain.dim() != r) throw InvalidArgument("log_posterior_terms: domain dimension differs from r");
  const double phi = params.phi();
  if (!(phi > r - 1.0)) throw InvalidArgument("inverse-Wishart prior needs phi > r - 1");

  const double log2pi = std::log(2.0 * std::numbers::pi);
  const double s2 = params.sigma_v2();

  LogPosteriorTerms t{};
  const double c1 = -static_cast<double>(M) * N * 0.5 * (log2pi + std::log(s2));
  t.data = -(Y - H * S).squaredNorm() / (2.0 * s2) + c1;
  t.source = contains_columns(domain, S) ? 0.0 : -std::numeric_limits<double>::infinity();

  const auto sig = checked_llt(Sigma, "Sigma");
  const double logdet_sigma = logdet_from(sig);
  const double tr_h = sig.solve(H.transpose() * H).trace();
  t.conditional = -0.5 * M * logdet_sigma - 0.5 * tr_h - 0.5 * M * r * log2pi;

  const double logdet_psi = logdet_from(checked_llt(params.Psi(), "Psi"));
  const double tr_psi = sig.solve(params.Psi()).trace();
  t.prior = 0.5 * phi * logdet_psi - 0.5 * (r + phi + 1.0) * logdet_sigma -
            0.5 * r * phi * std::log(2.0) - log_multivariate_gamma(r, 0.5 * phi) - 0.5 * tr_psi;
  return t;
}

}  // namespace bsmf
