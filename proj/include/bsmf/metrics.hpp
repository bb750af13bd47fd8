// Recovery metrics: signed-permutation alignment, SINR and the LMMSE benchmark.
#pragma once

#include "bsmf/core.hpp"
#include "bsmf/domains.hpp"

#include <optional>
#include <vector>

namespace bsmf {

inline constexpr double kSinrCapDb = 200.0;

/// Row i of the aligned estimate is signs[i] * (row perm[i] of the estimate).
struct Alignment {
  std::vector<int> perm;
  std::vector<int> signs;
  std::optional<Vector> gain;
  /// Reference or estimate rows with zero variance (their correlations were set to 0).
  bool degenerate_rows = false;

  static Alignment identity(int r);
  bool is_identity() const;
};

/// Signed permutation maximizing the summed |correlation| between matched rows.
/// Sign flips are only allowed on the l-infinity ball.
Alignment align(const Matrix& S_ref, const Matrix& S_est, const DomainSpec& domain);

Matrix apply_alignment(const Alignment& a, const Matrix& S_est);

/// 10 log10(||S_ref||^2 / ||S_ref - S_est||^2); kSinrCapDb when the error is zero.
double sinr_db(const Matrix& S_ref, const Matrix& S_est_aligned);

/// Mean and covariance of the uniform law on the domain.
struct SourceMoments {
  Vector mean;
  Matrix cov;
};
SourceMoments uniform_source_moments(const DomainSpec& domain);

/// Linear MMSE estimate of S from Y = H_g S + V with known H_g and sigma_v2.
Matrix lmmse_estimate(const Matrix& Y, const Matrix& H_g, double sigma_v2, const DomainSpec& domain);

}  // namespace bsmf
