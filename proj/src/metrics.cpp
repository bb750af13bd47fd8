#include "bsmf/metrics.hpp"

#include "bsmf/hungarian.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace bsmf {

Alignment Alignment::identity(int r) {
  Alignment a;
  a.perm.resize(r);
  std::iota(a.perm.begin(), a.perm.end(), 0);
  a.signs.assign(r, 1);
  return a;
}

bool Alignment::is_identity() const {
  for (std::size_t i = 0; i < perm.size(); ++i)
    if (perm[i] != static_cast<int>(i) || signs[i] != 1) return false;
  return !gain.has_value();
}

Alignment align(const Matrix& S_ref, const Matrix& S_est, const DomainSpec& domain) {
  if (S_ref.rows() != S_est.rows() || S_ref.cols() != S_est.cols())
    throw InvalidArgument("align: reference and estimate shapes differ");
  if (S_ref.rows() != domain.dim()) throw InvalidArgument("align: row count differs from domain dim");
  const auto r = S_ref.rows();

  Alignment a;
  auto centered = [&a](const Matrix& S) {
    Matrix C = S.colwise() - S.rowwise().mean();
    for (Eigen::Index i = 0; i < C.rows(); ++i) {
      const double n = C.row(i).norm();
      if (n > 0.0) {
        C.row(i) /= n;
      } else {
        a.degenerate_rows = true;
        C.row(i).setZero();
      }
    }
    return C;
  };
  const Matrix corr = centered(S_ref) * centered(S_est).transpose();

  a.perm = solve_assignment(-corr.cwiseAbs());
  a.signs.assign(r, 1);
  if (domain.kind() == DomainKind::LinfBall) {
    for (Eigen::Index i = 0; i < r; ++i)
      if (corr(i, a.perm[i]) < 0.0) a.signs[i] = -1;
  }
  return a;
}

Matrix apply_alignment(const Alignment& a, const Matrix& S_est) {
  if (static_cast<Eigen::Index>(a.perm.size()) != S_est.rows() || a.signs.size() != a.perm.size())
    throw InvalidArgument("alignment size differs from estimate row count");
  Matrix out(S_est.rows(), S_est.cols());
  for (std::size_t i = 0; i < a.perm.size(); ++i) {
    out.row(i) = a.signs[i] * S_est.row(a.perm[i]);
    if (a.gain) out.row(i) *= (*a.gain)(i);
  }
  return out;
}

double sinr_db(const Matrix& S_ref, const Matrix& S_est_aligned) {
  if (S_ref.rows() != S_est_aligned.rows() || S_ref.cols() != S_est_aligned.cols())
    throw InvalidArgument("sinr_db: shapes differ");
  const double signal = S_ref.squaredNorm();
  if (!(signal > 0.0)) throw InvalidArgument("sinr_db: reference is all zero");
  const double err = (S_ref - S_est_aligned).squaredNorm();
  if (err == 0.0) return kSinrCapDb;
  return std::min(kSinrCapDb, 10.0 * std::log10(signal / err));
}

SourceMoments uniform_source_moments(const DomainSpec& domain) {
  const int r = domain.dim();
  switch (domain.kind()) {
    case DomainKind::LinfBall:
      return {Vector::Zero(r), Matrix::Identity(r, r) / 3.0};
    case DomainKind::Simplex: {
      const double rr = r;
      Matrix cov = (Matrix::Identity(r, r) / rr - Matrix::Constant(r, r, 1.0 / (rr * rr))) / (rr + 1.0);
      return {Vector::Constant(r, 1.0 / rr), cov};
    }
    case DomainKind::NonnegativeOrthant:
      break;
  }
  throw UnsupportedDomain("the nonnegative orthant has no uniform source law");
}

Matrix lmmse_estimate(const Matrix& Y, const Matrix& H_g, double sigma_v2, const DomainSpec& domain) {
  if (Y.rows() != H_g.rows()) throw InvalidArgument("lmmse_estimate: Y and H_g row counts differ");
  if (H_g.cols() != domain.dim()) throw InvalidArgument("lmmse_estimate: H_g columns differ from domain dim");
  if (!(sigma_v2 >= 0.0) || !std::isfinite(sigma_v2))
    throw InvalidArgument("lmmse_estimate: sigma_v2 must be finite and nonnegative");
  const auto [mean, cov] = uniform_source_moments(domain);
  const Matrix innovation_data = Y.colwise() - H_g * mean;

  if (domain.kind() == DomainKind::LinfBall) {
    // Push-through form: (H^T H + sigma^2 cov^{-1})^{-1} H^T Y, an r x r solve.
    const Matrix K = H_g.transpose() * H_g + sigma_v2 * cov.inverse();
    Eigen::LLT<Matrix> llt(K);
    if (llt.info() != Eigen::Success)
      throw NumericalError("lmmse_estimate: singular system (H_g rank deficient?)");
    return (llt.solve(H_g.transpose() * innovation_data)).colwise() + mean;
  }

  // Simplex: cov is rank deficient, so work with the M x M innovation matrix.
  const auto M = H_g.rows();
  const Matrix R = H_g * cov * H_g.transpose() + sigma_v2 * Matrix::Identity(M, M);
  Matrix gain;
  if (sigma_v2 > 0.0) {
    Eigen::LLT<Matrix> llt(R);
    if (llt.info() != Eigen::Success) throw NumericalError("lmmse_estimate: innovation matrix is singular");
    gain = llt.solve(H_g * cov).transpose();
  } else {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(R);
    gain = cod.solve(H_g * cov).transpose();
  }
  return (gain * innovation_data).colwise() + mean;
}

}  // namespace bsmf
