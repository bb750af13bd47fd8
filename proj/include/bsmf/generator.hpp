// Synthetic data from the Bayesian structured-factorization model:
//   Y = H_g S_g + V_g,  rows of H_g ~ N(0, Sigma_h),  Sigma_h ~ IW(Psi, phi),
//   columns of S_g uniform over the domain,  V_g entries ~ N(0, sigma_v2).
#pragma once

#include "bsmf/core.hpp"
#include "bsmf/domains.hpp"
#include "bsmf/rng.hpp"

#include <optional>

namespace bsmf {

enum class HRowCovarianceMode { Identity, SampleInverseWishart, Explicit };

struct ModelParams {
  int M = 20;
  int r = 5;
  int N = 1000;
  double sigma_v2 = 0.01;
  Matrix Psi = Matrix::Identity(5, 5);
  double phi = 6.0;
  DomainSpec domain = DomainSpec::linf_ball(5);
  HRowCovarianceMode h_row_covariance_mode = HRowCovarianceMode::Identity;
  /// Used only with HRowCovarianceMode::Explicit.
  std::optional<Matrix> explicit_sigma_h;

  /// Throws InvalidArgument when any model invariant is violated.
  void validate() const;
};

struct GeneratedData {
  Matrix Y;
  Matrix H_g;
  Matrix S_g;
  Matrix Sigma_h;
  Matrix V_g;
};

/// One draw from the inverse-Wishart law IW(Psi, phi) (Bartlett construction).
Matrix sample_inverse_wishart(const Matrix& Psi, double phi, Rng& rng);

/// One draw from the Wishart law W(scale, dof) (Bartlett construction).
Matrix sample_wishart(const Matrix& scale, double dof, Rng& rng);

GeneratedData generate(const ModelParams& p, Rng& rng);

/// Psi = rho * (phi + r + 1) * I, so that the prior mode Psi/(phi+r+1) is rho*I.
Matrix psi_from_rho(double rho, double phi, int r);

/// Throws InvalidArgument unless A is square, symmetric and Cholesky-factorizable.
void require_spd(const Matrix& A, const char* what);

}  // namespace bsmf
