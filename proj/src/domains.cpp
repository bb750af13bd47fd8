#include "bsmf/domains.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace bsmf {

namespace {

// Points already on the simplex to within this slack are returned untouched,
// which makes the projection exactly idempotent.
constexpr double kSimplexSumSlack = 1e-12;

void check_dim(const DomainSpec& d, Eigen::Index n) {
  if (n != d.dim())
    throw InvalidArgument("domain " + d.token() + " has dim " + std::to_string(d.dim()) +
                          ", got vector of length " + std::to_string(n));
}

bool on_simplex(const Vector& x, double tol) {
  return x.minCoeff() >= -tol && std::abs(x.sum() - 1.0) <= std::max(tol, 0.0);
}

// Sort-based thresholding: find the largest k such that the k-th largest
// entry stays positive after subtracting the shared threshold.
Vector project_simplex(const Vector& x) {
  if (x.minCoeff() >= 0.0 && std::abs(x.sum() - 1.0) <= kSimplexSumSlack) return x;
  const auto n = x.size();
  std::vector<double> u(x.data(), x.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumsum += u[j];
    const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  return (x.array() - theta).max(0.0).matrix();
}

}  // namespace

DomainSpec::DomainSpec(DomainKind kind, int dim) : kind_(kind), dim_(dim) {
  if (dim < 1) throw InvalidArgument("domain dimension must be >= 1, got " + std::to_string(dim));
}

DomainSpec DomainSpec::from_token(std::string_view token, int dim) {
  if (token == "simplex") return simplex(dim);
  if (token == "linf_ball") return linf_ball(dim);
  if (token == "nonneg") return nonneg(dim);
  throw InvalidArgument("unknown domain token '" + std::string(token) +
                        "' (expected simplex, linf_ball or nonneg)");
}

std::string DomainSpec::token() const {
  switch (kind_) {
    case DomainKind::Simplex: return "simplex";
    case DomainKind::LinfBall: return "linf_ball";
    case DomainKind::NonnegativeOrthant: return "nonneg";
  }
  return "?";
}

Vector project(const DomainSpec& d, const Vector& x) {
  check_dim(d, x.size());
  switch (d.kind()) {
    case DomainKind::Simplex: return project_simplex(x);
    case DomainKind::LinfBall: return x.cwiseMax(-1.0).cwiseMin(1.0);
    case DomainKind::NonnegativeOrthant: return x.cwiseMax(0.0);
  }
  return x;
}

void project_columns(const DomainSpec& d, Matrix& X) {
  check_dim(d, X.rows());
  switch (d.kind()) {
    case DomainKind::LinfBall:
      X = X.cwiseMax(-1.0).cwiseMin(1.0);
      return;
    case DomainKind::NonnegativeOrthant:
      X = X.cwiseMax(0.0);
      return;
    case DomainKind::Simplex:
      for (Eigen::Index j = 0; j < X.cols(); ++j) X.col(j) = project_simplex(X.col(j));
      return;
  }
}

Matrix sample_uniform(const DomainSpec& d, int n, Rng& rng) {
  if (n < 1) throw InvalidArgument("sample count must be >= 1");
  const int r = d.dim();
  Matrix out(r, n);
  switch (d.kind()) {
    case DomainKind::LinfBall: {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < r; ++i) out(i, j) = u(rng);
      return out;
    }
    case DomainKind::Simplex: {
      // Normalized standard exponentials are flat-Dirichlet distributed.
      std::exponential_distribution<double> e(1.0);
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < r; ++i) out(i, j) = e(rng);
        out.col(j) /= out.col(j).sum();
      }
      return out;
    }
    case DomainKind::NonnegativeOrthant:
      break;
  }
  throw UnsupportedDomain("no uniform distribution over the nonnegative orthant");
}

bool contains(const DomainSpec& d, const Vector& x, double tol) {
  check_dim(d, x.size());
  if (tol < 0.0) throw InvalidArgument("membership tolerance must be nonnegative");
  switch (d.kind()) {
    case DomainKind::Simplex: return on_simplex(x, tol);
    case DomainKind::LinfBall: return x.cwiseAbs().maxCoeff() <= 1.0 + tol;
    case DomainKind::NonnegativeOrthant: return x.minCoeff() >= -tol;
  }
  return false;
}

bool contains_columns(const DomainSpec& d, const Matrix& X, double tol) {
  check_dim(d, X.rows());
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    if (!contains(d, X.col(j), tol)) return false;
  return true;
}

}  // namespace bsmf
