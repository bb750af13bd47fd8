#include "bsmf/generator.hpp"

#include <cmath>
#include <string>

namespace bsmf {

namespace {

// Lower-triangular Bartlett factor: sqrt(chi2(dof - i)) on the diagonal
// (0-based i), standard normals below it.
Matrix bartlett_factor(int r, double dof, Rng& rng) {
  Matrix A = Matrix::Zero(r, r);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < r; ++i) {
    std::chi_squared_distribution<double> chi2(dof - i);
    A(i, i) = std::sqrt(chi2(rng));
    for (int j = 0; j < i; ++j) A(i, j) = normal(rng);
  }
  return A;
}

void check_wishart_args(const Matrix& scale, double dof, const char* what) {
  require_spd(scale, what);
  const auto r = static_cast<double>(scale.rows());
  if (!(dof > r - 1.0))
    throw InvalidArgument(std::string("degrees of freedom must exceed r - 1, got ") +
                          std::to_string(dof));
}

}  // namespace

void require_spd(const Matrix& A, const char* what) {
  if (A.rows() != A.cols() || A.rows() == 0)
    throw InvalidArgument(std::string(what) + " must be a nonempty square matrix");
  if (!A.allFinite()) throw InvalidArgument(std::string(what) + " has non-finite entries");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InvalidArgument(std::string(what) + " is not symmetric");
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success)
    throw InvalidArgument(std::string(what) + " is not positive definite");
}

void ModelParams::validate() const {
  if (M < 1 || r < 1 || N < 1) throw InvalidArgument("M, r and N must be positive");
  if (r > M || r > N)
    throw InvalidArgument("latent dimension r=" + std::to_string(r) +
                          " must not exceed min(M, N)=" + std::to_string(std::min(M, N)));
  if (!(sigma_v2 >= 0.0) || !std::isfinite(sigma_v2))
    throw InvalidArgument("sigma_v2 must be a finite nonnegative number");
  if (domain.dim() != r) throw InvalidArgument("domain dimension differs from r");
  if (Psi.rows() != r) throw InvalidArgument("Psi must be r x r");
  require_spd(Psi, "Psi");
  if (h_row_covariance_mode == HRowCovarianceMode::SampleInverseWishart && !(phi > r - 1.0))
    throw InvalidArgument("phi must exceed r - 1 to sample the inverse-Wishart covariance");
  if (h_row_covariance_mode == HRowCovarianceMode::Explicit) {
    if (!explicit_sigma_h) throw InvalidArgument("explicit covariance mode needs a covariance");
    if (explicit_sigma_h->rows() != r) throw InvalidArgument("explicit covariance must be r x r");
    require_spd(*explicit_sigma_h, "explicit H-row covariance");
  }
  if (domain.kind() == DomainKind::NonnegativeOrthant)
    throw UnsupportedDomain("sources cannot be drawn uniformly from the nonnegative orthant");
}

Matrix sample_wishart(const Matrix& scale, double dof, Rng& rng) {
  check_wishart_args(scale, dof, "Wishart scale");
  const Matrix L = Eigen::LLT<Matrix>(scale).matrixL();
  const Matrix LA = L * bartlett_factor(static_cast<int>(scale.rows()), dof, rng);
  return LA * LA.transpose();
}

Matrix sample_inverse_wishart(const Matrix& Psi, double phi, Rng& rng) {
  check_wishart_args(Psi, phi, "Psi");
  // With Psi = C C^T and W = C^{-T} A A^T C^{-1} ~ W(Psi^{-1}, phi),
  // W^{-1} = (C A^{-T})(C A^{-T})^T.
  const int r = static_cast<int>(Psi.rows());
  const Matrix C = Eigen::LLT<Matrix>(Psi).matrixL();
  const Matrix A = bartlett_factor(r, phi, rng);
  // X = C A^{-T}  <=>  X^T = A^{-1} C^T.
  const Matrix Xt = A.triangularView<Eigen::Lower>().solve(C.transpose());
  Matrix sigma = Xt.transpose() * Xt;
  sigma = 0.5 * (sigma + sigma.transpose());
  return sigma;
}

GeneratedData generate(const ModelParams& p, Rng& rng) {
  p.validate();
  GeneratedData g;
  switch (p.h_row_covariance_mode) {
    case HRowCovarianceMode::Identity: g.Sigma_h = Matrix::Identity(p.r, p.r); break;
    case HRowCovarianceMode::SampleInverseWishart:
      g.Sigma_h = sample_inverse_wishart(p.Psi, p.phi, rng);
      break;
    case HRowCovarianceMode::Explicit: g.Sigma_h = *p.explicit_sigma_h; break;
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  const Matrix L = Eigen::LLT<Matrix>(g.Sigma_h).matrixL();
  Matrix Z(p.M, p.r);
  for (int i = 0; i < p.M; ++i)
    for (int j = 0; j < p.r; ++j) Z(i, j) = normal(rng);
  // Row i of H is (L z_i)^T.
  g.H_g = Z * L.transpose();

  g.S_g = sample_uniform(p.domain, p.N, rng);

  const double sd = std::sqrt(p.sigma_v2);
  g.V_g.resize(p.M, p.N);
  for (int j = 0; j < p.N; ++j)
    for (int i = 0; i < p.M; ++i) g.V_g(i, j) = sd * normal(rng);

  g.Y = g.H_g * g.S_g + g.V_g;
  return g;
}

Matrix psi_from_rho(double rho, double phi, int r) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidArgument("rho must be positive");
  if (r < 1) throw InvalidArgument("r must be positive");
  if (!(phi + r + 1.0 > 0.0)) throw InvalidArgument("phi + r + 1 must be positive");
  return rho * (phi + r + 1.0) * Matrix::Identity(r, r);
}

}  // namespace bsmf
