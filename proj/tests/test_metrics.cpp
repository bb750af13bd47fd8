#include "bsmf/metrics.hpp"
#include "bsmf/rng.hpp"

#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

using namespace bsmf;

namespace {

Matrix randn(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n;
  return Matrix::NullaryExpr(rows, cols, [&] { return n(rng); });
}

double pearson(const Vector& a, const Vector& b) {
  const Vector ca = a.array() - a.mean();
  const Vector cb = b.array() - b.mean();
  return ca.dot(cb) / (ca.norm() * cb.norm());
}

Matrix signed_permutation(const Matrix& S, const std::vector<int>& perm, const std::vector<int>& signs) {
  Matrix out(S.rows(), S.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) out.row(i) = signs[i] * S.row(perm[i]);
  return out;
}

}  // namespace

TEST_CASE("swapped and negated rows are undone") {
  Rng rng(1);
  const DomainSpec d = DomainSpec::linf_ball(3);
  const Matrix S = sample_uniform(d, 200, rng);
  Matrix est = S;
  est.row(0) = S.row(1);
  est.row(1) = -S.row(0);
  const auto a = align(S, est, d);
  CHECK(a.perm == std::vector<int>{1, 0, 2});
  CHECK(a.signs == std::vector<int>{-1, 1, 1});
  CHECK(apply_alignment(a, est) == S);
  CHECK(sinr_db(S, apply_alignment(a, est)) == kSinrCapDb);
}

TEST_CASE("identical estimate gives the identity alignment") {
  Rng rng(2);
  for (auto d : {DomainSpec::linf_ball(4), DomainSpec::simplex(4)}) {
    const Matrix S = sample_uniform(d, 100, rng);
    const auto a = align(S, S, d);
    CHECK(a.is_identity());
    CHECK_FALSE(a.degenerate_rows);
  }
}

TEST_CASE("alignment matches exhaustive search over signed permutations") {
  Rng rng(3);
  const DomainSpec d = DomainSpec::linf_ball(3);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix S = sample_uniform(d, 60, rng);
    // A random mixture of the rows plus noise, so correlations are ambiguous.
    const Matrix est = (Matrix::Identity(3, 3) + 0.6 * randn(3, 3, rng)) * S + 0.3 * randn(3, 60, rng);

    double best = -1.0;
    std::vector<int> best_perm, best_signs;
    std::vector<int> perm{0, 1, 2};
    do {
      for (int mask = 0; mask < 8; ++mask) {
        std::vector<int> signs(3);
        double score = 0.0;
        for (int i = 0; i < 3; ++i) {
          signs[i] = (mask >> i & 1) ? -1 : 1;
          score += signs[i] * pearson(S.row(i).transpose(), est.row(perm[i]).transpose());
        }
        if (score > best) {
          best = score;
          best_perm = perm;
          best_signs = signs;
        }
      }
    } while (std::next_permutation(perm.begin(), perm.end()));

    const auto a = align(S, est, d);
    CAPTURE(trial);
    CHECK(a.perm == best_perm);
    CHECK(a.signs == best_signs);
  }
}

TEST_CASE("simplex alignment never flips signs") {
  Rng rng(4);
  const DomainSpec d = DomainSpec::simplex(3);
  const Matrix S = sample_uniform(d, 100, rng);
  Matrix est(3, 100);
  est.row(0) = S.row(2);
  est.row(1) = S.row(0);
  est.row(2) = S.row(1);
  const auto a = align(S, est, d);
  CHECK(a.perm == std::vector<int>{1, 2, 0});
  CHECK(a.signs == std::vector<int>{1, 1, 1});
  // An anti-correlated row is matched by magnitude but kept unflipped.
  const Matrix neg = -S;
  const auto b = align(S, neg, d);
  CHECK(b.signs == std::vector<int>{1, 1, 1});
}

TEST_CASE("zero-variance rows are flagged") {
  Rng rng(5);
  const DomainSpec d = DomainSpec::linf_ball(2);
  const Matrix S = sample_uniform(d, 50, rng);
  Matrix est = S;
  est.row(1).setConstant(0.3);
  const auto a = align(S, est, d);
  CHECK(a.degenerate_rows);
  CHECK(a.perm == std::vector<int>{0, 1});
}

TEST_CASE("SINR examples") {
  const Matrix ref = (Matrix(1, 2) << 1.0, -1.0).finished();
  CHECK(sinr_db(ref, ref) == kSinrCapDb);
  CHECK(sinr_db(ref, Matrix::Zero(1, 2)) == doctest::Approx(0.0));

  Rng rng(6);
  const Matrix S = randn(4, 30, rng);
  Matrix e = randn(4, 30, rng);
  e *= std::sqrt(0.01 * S.squaredNorm() / e.squaredNorm());
  CHECK(sinr_db(S, S + e) == doctest::Approx(20.0).epsilon(1e-12));

  CHECK_THROWS_AS(sinr_db(Matrix::Zero(2, 3), Matrix::Ones(2, 3)), InvalidArgument);
  CHECK_THROWS_AS(sinr_db(S, S.leftCols(3)), InvalidArgument);
}

TEST_CASE("SINR is invariant to a common signed permutation") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix S = randn(4, 20, rng);
    const Matrix est = S + 0.2 * randn(4, 20, rng);
    std::vector<int> perm(4);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> signs(4);
    for (auto& s : signs) s = rng() % 2 ? 1 : -1;
    CHECK(sinr_db(signed_permutation(S, perm, signs), signed_permutation(est, perm, signs)) ==
          doctest::Approx(sinr_db(S, est)).epsilon(1e-12));
  }
}

TEST_CASE("aligning an aligned estimate is the identity") {
  Rng rng(8);
  const DomainSpec d = DomainSpec::linf_ball(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix S = sample_uniform(d, 80, rng);
    const Matrix est = (Matrix::Identity(4, 4) + 0.3 * randn(4, 4, rng)) * S;
    const Matrix once = apply_alignment(align(S, est, d), est);
    CHECK(align(S, once, d).is_identity());
  }
}

TEST_CASE("source moments of the uniform laws") {
  const auto b = uniform_source_moments(DomainSpec::linf_ball(3));
  CHECK(b.mean.isZero(0.0));
  CHECK(b.cov.isApprox(Matrix::Identity(3, 3) / 3.0));
  const auto s = uniform_source_moments(DomainSpec::simplex(4));
  CHECK(s.mean.isApprox(Vector::Constant(4, 0.25)));
  // Flat Dirichlet: var = (r-1)/(r^2 (r+1)), cov = -1/(r^2 (r+1)).
  CHECK(s.cov(0, 0) == doctest::Approx(3.0 / 80.0));
  CHECK(s.cov(0, 1) == doctest::Approx(-1.0 / 80.0));
  CHECK_THROWS_AS(uniform_source_moments(DomainSpec::nonneg(2)), UnsupportedDomain);
}

TEST_CASE("LMMSE limits") {
  const Matrix H = Matrix::Ones(1, 1);
  const Matrix Y = (Matrix(1, 3) << 0.5, -0.2, 0.9).finished();
  const DomainSpec b1 = DomainSpec::linf_ball(1);
  CHECK(lmmse_estimate(Y, H, 1e-12, b1).isApprox(Y, 1e-10));
  CHECK(lmmse_estimate(Y, H, 0.0, b1).isApprox(Y, 1e-14));
  CHECK(lmmse_estimate(Y, H, 1e12, b1).cwiseAbs().maxCoeff() <= 1e-11);

  Rng rng(9);
  const DomainSpec s3 = DomainSpec::simplex(3);
  const Matrix Hs = randn(5, 3, rng);
  const Matrix S = sample_uniform(s3, 20, rng);
  const Matrix Ys = Hs * S;
  CHECK(lmmse_estimate(Ys, Hs, 0.0, s3).isApprox(S, 1e-9));
  const Matrix far = lmmse_estimate(Ys, Hs, 1e12, s3);
  CHECK((far.array() - 1.0 / 3.0).abs().maxCoeff() <= 1e-9);

  CHECK_THROWS_AS(lmmse_estimate(Y, H, -1.0, b1), InvalidArgument);
  CHECK_THROWS_AS(lmmse_estimate(Y, Matrix::Ones(2, 1), 0.1, b1), InvalidArgument);
}

TEST_CASE("LMMSE matches the empirical best linear estimator") {
  // Fit the affine estimator minimizing Monte-Carlo MSE by least squares on a
  // training sample, then compare test MSEs.
  Rng rng(10);
  for (auto d : {DomainSpec::linf_ball(2), DomainSpec::simplex(2)}) {
    const int M = 3;
    const double s2 = 0.2;
    const Matrix H = randn(M, 2, rng);
    auto draw = [&](int n, Matrix& S, Matrix& Y) {
      S = sample_uniform(d, n, rng);
      Y = H * S + std::sqrt(s2) * randn(M, n, rng);
    };
    Matrix S_train, Y_train, S_test, Y_test;
    draw(200000, S_train, Y_train);
    draw(200000, S_test, Y_test);
    Matrix X(M + 1, Y_train.cols());
    X << Y_train, Matrix::Ones(1, Y_train.cols());
    const Matrix W = (X * X.transpose()).ldlt().solve(X * S_train.transpose()).transpose();
    Matrix Xt(M + 1, Y_test.cols());
    Xt << Y_test, Matrix::Ones(1, Y_test.cols());
    const double mse_oracle = (W * Xt - S_test).squaredNorm();
    const double mse_lmmse = (lmmse_estimate(Y_test, H, s2, d) - S_test).squaredNorm();
    CAPTURE(d.token());
    CHECK(std::abs(mse_lmmse - mse_oracle) <= 0.02 * mse_oracle);
  }
}
