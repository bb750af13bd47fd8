#include "bsmf/objective.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <numbers>

using namespace bsmf;

namespace {

Matrix randn(Eigen::Index rows, Eigen::Index cols, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  return Matrix::NullaryExpr(rows, cols, [&] { return n(rng); });
}

Matrix random_spd(int r, Rng& rng) {
  const Matrix A = randn(r, r, rng);
  return A * A.transpose() + 0.5 * Matrix::Identity(r, r);
}

Matrix random_symmetric_unit(int r, Rng& rng) {
  const Matrix A = randn(r, r, rng);
  Matrix E = A + A.transpose();
  return E / E.norm();
}

struct Instance {
  ObjectiveParams params;
  Matrix Y, H, S;
};

Instance random_instance(Rng& rng, int M, int r, int N) {
  std::uniform_real_distribution<double> u(0.05, 2.0);
  std::uniform_real_distribution<double> phi(r, r + 10.0);
  ObjectiveParams p(u(rng), random_spd(r, rng), phi(rng), M);
  return {p, randn(M, N, rng), randn(M, r, rng), randn(r, N, rng)};
}

// Written directly from the MAP problem: ||Y-HS||^2/(2 s2) + (beta/2) log det((H^T H + Psi)/beta).
double map_form(const Instance& in) {
  const double beta = in.params.beta();
  const Matrix A = (in.H.transpose() * in.H + in.params.Psi()) / beta;
  return (in.Y - in.H * in.S).squaredNorm() / (2.0 * in.params.sigma_v2()) +
         0.5 * beta * std::log(A.determinant());
}

}  // namespace

TEST_CASE("ObjectiveParams derived quantities") {
  const ObjectiveParams p(0.01, 12.0 * Matrix::Identity(5, 5), 6.0, 20);
  CHECK(p.beta() == 32.0);
  CHECK(p.lambda() == doctest::Approx(0.32).epsilon(1e-15));
  CHECK(p.lambda() / p.beta() == doctest::Approx(p.sigma_v2()).epsilon(1e-15));
  const auto q = ObjectiveParams::with_lambda(0.64, 12.0 * Matrix::Identity(5, 5), 6.0, 20);
  CHECK(q.lambda() == 0.64);
  CHECK(q.lambda() / q.beta() == doctest::Approx(q.sigma_v2()).epsilon(1e-15));
  CHECK_THROWS_AS(ObjectiveParams(0.0, Matrix::Identity(2, 2), 1.0, 3), InvalidArgument);
  CHECK_THROWS_AS(ObjectiveParams(1.0, -Matrix::Identity(2, 2), 1.0, 3), InvalidArgument);
  CHECK_THROWS_AS(ObjectiveParams(1.0, Matrix::Identity(2, 2), -10.0, 3), InvalidArgument);
}

TEST_CASE("evaluate: scalar example") {
  const ObjectiveParams p(1.0, Matrix::Ones(1, 1), 1.0, 1);
  CHECK(p.beta() == 4.0);
  CHECK(p.lambda() == 4.0);
  const Matrix Y = Matrix::Constant(1, 1, 2.0), H = Matrix::Ones(1, 1), S = Matrix::Ones(1, 1);
  const double expected = 1.0 + 4.0 * std::log(0.5);
  CHECK(evaluate(p, Y, H, S) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(evaluate(p, Y, H, S) == doctest::Approx(-1.7725887222).epsilon(1e-9));
}

TEST_CASE("evaluate: H = 0 reduces to ||Y||^2 + lambda log det(Psi/beta)") {
  Rng rng(1);
  const auto in = random_instance(rng, 6, 3, 7);
  const Matrix H0 = Matrix::Zero(6, 3);
  const double expected =
      in.Y.squaredNorm() + in.params.lambda() * std::log((in.params.Psi() / in.params.beta()).determinant());
  CHECK(evaluate(in.params, in.Y, H0, in.S) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("evaluate is 2 sigma_v2 times the MAP-form objective") {
  Rng rng(2);
  for (int k = 0; k < 100; ++k) {
    const auto in = random_instance(rng, 5, 2, 6);
    const double ratio = evaluate(in.params, in.Y, in.H, in.S) / (2.0 * in.params.sigma_v2());
    CHECK(std::abs(ratio - map_form(in)) <= 1e-9 * (1.0 + std::abs(ratio)));
  }
}

TEST_CASE("evaluate: shape and numerical errors") {
  const ObjectiveParams p(1.0, Matrix::Identity(2, 2), 2.0, 3);
  CHECK_THROWS_AS(evaluate(p, Matrix::Zero(3, 4), Matrix::Zero(3, 2), Matrix::Zero(2, 5)), InvalidArgument);
  CHECK_THROWS_AS(evaluate(p, Matrix::Zero(4, 4), Matrix::Zero(4, 2), Matrix::Zero(2, 4)), InvalidArgument);
  CHECK_THROWS_AS(grad_S(p, Matrix::Zero(3, 4), Matrix::Zero(3, 3), Matrix::Zero(2, 4)), InvalidArgument);
  const Matrix huge = Matrix::Constant(3, 2, 1e200);
  CHECK_THROWS_AS(evaluate(p, Matrix::Zero(3, 4), huge, Matrix::Zero(2, 4)), NumericalError);
  CHECK_THROWS_AS(logdet_spd(-Matrix::Identity(2, 2)), NumericalError);
}

TEST_CASE("gradients match central finite differences on 50 random instances") {
  Rng rng(3);
  std::uniform_int_distribution<int> dim(1, 8);
  double worst_h = 0.0, worst_s = 0.0;
  for (int k = 0; k < 50; ++k) {
    const int r = 1 + k % 4;
    const int M = std::max(r, dim(rng));
    const int N = std::max(r, 1 + dim(rng) % 10);
    const auto in = random_instance(rng, M, r, N);
    const auto fH = [&](const Matrix& H) { return evaluate(in.params, in.Y, H, in.S); };
    const auto fS = [&](const Matrix& S) { return evaluate(in.params, in.Y, in.H, S); };
    worst_h = std::max(worst_h, oracle::relative_error(grad_H(in.params, in.Y, in.H, in.S),
                                                       oracle::fd_gradient(fH, in.H)));
    worst_s = std::max(worst_s, oracle::relative_error(grad_S(in.params, in.Y, in.H, in.S),
                                                       oracle::fd_gradient(fS, in.S)));
  }
  CHECK(worst_h <= 1e-5);
  CHECK(worst_s <= 1e-6);
}

TEST_CASE("grad_H special cases") {
  Rng rng(4);
  const auto in = random_instance(rng, 4, 2, 6);
  const Matrix H0 = Matrix::Zero(4, 2);
  const Matrix g0 = grad_H(in.params, in.Y, H0, in.S);
  CHECK((g0 - (-2.0 * in.Y * in.S.transpose())).norm() <= 1e-12 * g0.norm());

  // Doubling lambda doubles the log-det part of the gradient.
  const auto p2 = ObjectiveParams::with_lambda(2.0 * in.params.lambda(), in.params.Psi(), in.params.phi(), 4);
  const Matrix data_part = -2.0 * (in.Y - in.H * in.S) * in.S.transpose();
  const Matrix ld1 = grad_H(in.params, in.Y, in.H, in.S) - data_part;
  const Matrix ld2 = grad_H(p2, in.Y, in.H, in.S) - data_part;
  CHECK((ld2 - 2.0 * ld1).norm() <= 1e-10 * ld1.norm());
}

TEST_CASE("grad_S special cases") {
  Rng rng(5);
  const auto in = random_instance(rng, 5, 3, 4);
  const Matrix Y = in.H * in.S;
  CHECK(grad_S(in.params, Y, in.H, in.S).norm() <= 1e-12);
  const Matrix Q = Eigen::HouseholderQR<Matrix>(randn(5, 3, rng)).householderQ() * Matrix::Identity(5, 3);
  const Matrix g = grad_S(in.params, in.Y, Q, Matrix::Zero(3, 4));
  CHECK((g - (-2.0 * Q.transpose() * in.Y)).norm() <= 1e-12);
}

TEST_CASE("sigma_stationary and covariance_blend") {
  CHECK(sigma_stationary(Matrix::Ones(1, 1), Matrix::Ones(1, 1), 1.0, 1)(0, 0) == 0.5);
  const Matrix Psi = 12.0 * Matrix::Identity(5, 5);
  CHECK(sigma_stationary(Matrix::Zero(20, 5), Psi, 6.0, 20) == Psi / 32.0);

  CHECK(covariance_blend(Matrix::Zero(20, 5), Psi, 6.0, 20).mu == 0.625);
  const auto big = covariance_blend(Matrix::Zero(3200, 5), Matrix::Identity(5, 5), 26.0, 3200);
  CHECK(big.mu >= 0.99);
  CHECK(big.mu == doctest::Approx(3200.0 / 3232.0).epsilon(1e-15));
  const auto zero = covariance_blend(Matrix::Zero(20, 5), Psi, 6.0, 20);
  CHECK((zero.blended - (1.0 - zero.mu) * Psi / 12.0).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(zero.mu > 0.0);
  CHECK(zero.mu < 1.0);

  Rng rng(6);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int r = 1 + k % 5, M = r + k % 7;
    const Matrix H = randn(M, r, rng, 3.0);
    const Matrix P = random_spd(r, rng);
    const double phi = r + 0.5 * k;
    const Matrix a = sigma_stationary(H, P, phi, M);
    const Matrix b = covariance_blend(H, P, phi, M).blended;
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff() / a.cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("log posterior: conditional term at Sigma=1, H=0") {
  const ObjectiveParams p(1.0, Matrix::Ones(1, 1), 1.0, 1);
  const auto t = log_posterior_terms(Matrix::Zero(1, 1), Matrix::Zero(1, 1), Matrix::Ones(1, 1), p,
                                     Matrix::Zero(1, 1), DomainSpec::linf_ball(1));
  CHECK(t.conditional == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-15));
  CHECK(t.source == 0.0);
}

TEST_CASE("log posterior: r=1 prior term is the inverse-gamma log density") {
  // IW(psi, phi) in one dimension is InvGamma(phi/2, psi/2).
  const double psi = 1.7, phi = 3.4, x = 0.8;
  const ObjectiveParams p(0.3, Matrix::Constant(1, 1, psi), phi, 2);
  const auto t = log_posterior_terms(Matrix::Zero(2, 1), Matrix::Zero(1, 3), Matrix::Constant(1, 1, x), p,
                                     Matrix::Zero(2, 3), DomainSpec::linf_ball(1));
  const double a = phi / 2, b = psi / 2;
  const double expected = a * std::log(b) - std::lgamma(a) - (a + 1) * std::log(x) - b / x;
  CHECK(t.prior == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("log posterior: data term and source indicator") {
  Rng rng(8);
  const auto in = random_instance(rng, 3, 2, 4);
  const DomainSpec d = DomainSpec::linf_ball(2);
  const Matrix Sin = in.S.cwiseMax(-1.0).cwiseMin(1.0);
  const Matrix Sig = Matrix::Identity(2, 2);
  const auto t = log_posterior_terms(in.H, Sin, Sig, in.params, in.Y, d);
  const double s2 = in.params.sigma_v2();
  const double expected = -(in.Y - in.H * Sin).squaredNorm() / (2 * s2) -
                          12.0 * std::log(std::sqrt(2 * std::numbers::pi * s2));
  CHECK(t.data == doctest::Approx(expected).epsilon(1e-13));
  Matrix Sout = Sin;
  Sout(0, 0) = 1.5;
  CHECK(std::isinf(log_posterior_terms(in.H, Sout, Sig, in.params, in.Y, d).source));
  CHECK_THROWS_AS(log_posterior_terms(in.H, Sin, -Sig, in.params, in.Y, d), NumericalError);
}

TEST_CASE("log posterior: Sigma-gradient vanishes at the stationary covariance") {
  Rng rng(9);
  for (int k = 0; k < 10; ++k) {
    const int r = 1 + k % 4, M = r + 3;
    const auto in = random_instance(rng, M, r, 5);
    const DomainSpec d = DomainSpec::linf_ball(r);
    const Matrix star = sigma_stationary(in.H, in.params.Psi(), in.params.phi(), M);
    const auto f = [&](const Matrix& Sig) {
      const auto t = log_posterior_terms(in.H, in.S.cwiseMax(-1.0).cwiseMin(1.0), Sig, in.params, in.Y, d);
      return t.conditional + t.prior;
    };
    const double eps = 1e-5 * star.norm();
    double worst = 0.0, scale = 0.0;
    for (int dir = 0; dir < 20; ++dir) {
      const Matrix E = random_symmetric_unit(r, rng);
      worst = std::max(worst, std::abs(f(star + eps * E) - f(star - eps * E)) / (2 * eps));
      // The same derivative away from the optimum is clearly nonzero.
      scale = std::max(scale, std::abs(f(2.0 * star + eps * E) - f(2.0 * star - eps * E)) / (2 * eps));
    }
    CHECK(worst <= 1e-6);
    CHECK(scale > 1e-3);
  }
}

TEST_CASE("log posterior with profiled Sigma equals evaluate up to a constant") {
  Rng rng(10);
  const int M = 6, r = 3, N = 8;
  const ObjectiveParams p(0.2, random_spd(r, rng), 7.0, M);
  const Matrix Y = randn(M, N, rng);
  const DomainSpec d = DomainSpec::linf_ball(r);
  std::vector<double> J, lp, diff;
  for (int k = 0; k < 100; ++k) {
    const Matrix H = randn(M, r, rng, 0.5 + 0.02 * k);
    Matrix S = randn(r, N, rng);
    project_columns(d, S);
    const auto t = log_posterior_terms(H, S, sigma_stationary(H, p.Psi(), p.phi(), M), p, Y, d);
    const double logpost = t.data + t.conditional + t.prior;
    J.push_back(evaluate(p, Y, H, S));
    lp.push_back(logpost);
    diff.push_back(J.back() + 2.0 * p.sigma_v2() * logpost);
  }
  double spread = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < diff.size(); ++i) {
    spread = std::max(spread, std::abs(diff[i] - diff[0]));
    scale = std::max(scale, std::abs(J[i]));
  }
  CHECK(spread <= 1e-8 * std::max(std::abs(diff[0]), scale));
  std::vector<double> neg_lp;
  for (double v : lp) neg_lp.push_back(-v);
  CHECK(oracle::spearman(J, neg_lp) == 1.0);
}

TEST_CASE("log multivariate gamma") {
  CHECK(log_multivariate_gamma(1, 2.5) == doctest::Approx(std::lgamma(2.5)).epsilon(1e-15));
  const double expected = 0.5 * std::log(std::numbers::pi) + std::lgamma(3.0) + std::lgamma(2.5);
  CHECK(log_multivariate_gamma(2, 3.0) == doctest::Approx(expected).epsilon(1e-15));
  CHECK_THROWS_AS(log_multivariate_gamma(3, 0.9), InvalidArgument);
}
