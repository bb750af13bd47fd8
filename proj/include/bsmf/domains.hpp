// Latent-vector domains: the unit simplex, the l-infinity ball and the
// nonnegative orthant. Each supports exact Euclidean projection and a
// membership test; the two bounded ones also support uniform sampling.
#pragma once

#include "bsmf/core.hpp"
#include "bsmf/rng.hpp"

#include <string>
#include <string_view>

namespace bsmf {

enum class DomainKind { Simplex, LinfBall, NonnegativeOrthant };

inline constexpr double kDefaultMembershipTol = 1e-9;

class DomainSpec {
 public:
  DomainSpec(DomainKind kind, int dim);

  static DomainSpec simplex(int dim) { return {DomainKind::Simplex, dim}; }
  static DomainSpec linf_ball(int dim) { return {DomainKind::LinfBall, dim}; }
  static DomainSpec nonneg(int dim) { return {DomainKind::NonnegativeOrthant, dim}; }

  /// Parses a config token ("simplex", "linf_ball", "nonneg").
  static DomainSpec from_token(std::string_view token, int dim);

  DomainKind kind() const noexcept { return kind_; }
  int dim() const noexcept { return dim_; }
  std::string token() const;

  friend bool operator==(const DomainSpec&, const DomainSpec&) = default;

 private:
  DomainKind kind_;
  int dim_;
};

/// Euclidean projection of x onto the domain.
Vector project(const DomainSpec& d, const Vector& x);

/// Projects every column of X in place.
void project_columns(const DomainSpec& d, Matrix& X);

/// n i.i.d. uniform draws, one per column. Throws UnsupportedDomain for the orthant.
Matrix sample_uniform(const DomainSpec& d, int n, Rng& rng);

bool contains(const DomainSpec& d, const Vector& x, double tol = kDefaultMembershipTol);

/// True when every column of X is in the domain.
bool contains_columns(const DomainSpec& d, const Matrix& X, double tol = kDefaultMembershipTol);

}  // namespace bsmf
