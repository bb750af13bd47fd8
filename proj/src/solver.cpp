#include "bsmf/solver.hpp"

#include "bsmf/rng.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace bsmf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double lambda_max_sym(const Matrix& A) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

double lambda_min_sym(const Matrix& A) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

void initialize(const Matrix& Y, const DomainSpec& domain, const SolverConfig& cfg, Matrix& H,
                Matrix& S) {
  const auto M = Y.rows();
  const auto N = Y.cols();
  const int r = domain.dim();
  if (const auto* g = std::get_if<RandomGaussianInit>(&cfg.init)) {
    Rng rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, g->scale);
    H.resize(M, r);
    for (Eigen::Index j = 0; j < r; ++j)
      for (Eigen::Index i = 0; i < M; ++i) H(i, j) = normal(rng);
    if (domain.kind() == DomainKind::NonnegativeOrthant) {
      S = Matrix::NullaryExpr(r, N, [&] { return std::abs(normal(rng)); });
    } else {
      S = sample_uniform(domain, static_cast<int>(N), rng);
    }
    return;
  }
  if (const auto* p = std::get_if<ProvidedInit>(&cfg.init)) {
    if (p->H0.rows() != M || p->H0.cols() != r || p->S0.rows() != r || p->S0.cols() != N)
      throw InvalidArgument("provided initial factors have the wrong shape");
    H = p->H0;
    S = p->S0;
    project_columns(domain, S);
    return;
  }
  // Truncated SVD warm start.
  Eigen::BDCSVD<Matrix> svd(Y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  H = svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal();
  S = svd.matrixV().leftCols(r).transpose();
  if (domain.kind() == DomainKind::LinfBall) {
    // Stretch each latent row to fill [-1, 1]; H absorbs the inverse scale so
    // the product H S is unchanged.
    for (int i = 0; i < r; ++i) {
      const double peak = S.row(i).cwiseAbs().maxCoeff();
      if (peak > 0.0) {
        S.row(i) /= peak;
        H.col(i) *= peak;
      }
    }
  }
  project_columns(domain, S);
}

struct Stationarity {
  double s;
  double h;
};

Stationarity measure(const ObjectiveParams& params, const Matrix& Y, const Matrix& H,
                     const Matrix& S, const DomainSpec& domain) {
  return {stationarity_S(Y, H, S, domain), grad_H(params, Y, H, S).norm()};
}

// Basis of the directions in which column s may move without leaving the
// face of the domain it currently lies on.
Matrix free_basis(const DomainSpec& domain, const Eigen::Ref<const Vector>& s, std::string& key) {
  const int r = domain.dim();
  constexpr double tol = 1e-12;
  key.assign(static_cast<std::size_t>(r), '0');
  std::vector<int> fr;
  for (int i = 0; i < r; ++i) {
    const bool active = domain.kind() == DomainKind::LinfBall ? std::abs(s(i)) >= 1.0 - tol : s(i) <= tol;
    if (!active) {
      fr.push_back(i);
      key[static_cast<std::size_t>(i)] = '1';
    }
  }
  const auto k = static_cast<Eigen::Index>(fr.size());
  if (domain.kind() == DomainKind::Simplex) {
    Matrix B = Matrix::Zero(r, k > 0 ? k - 1 : 0);
    for (Eigen::Index a = 1; a < k; ++a) {
      B(fr[0], a - 1) = 1.0;
      B(fr[static_cast<std::size_t>(a)], a - 1) = -1.0;
    }
    return B;
  }
  Matrix B = Matrix::Zero(r, k);
  for (Eigen::Index a = 0; a < k; ++a) B(fr[static_cast<std::size_t>(a)], a) = 1.0;
  return B;
}

Matrix solve_S(const Matrix& Y, double y2, const Matrix& H, const Matrix& S0, const DomainSpec& domain,
               const SolverConfig& cfg) {
  const double step = step_size_S(H);
  if (!std::isfinite(step)) return S0;
  const Matrix G = H.transpose() * H;
  const Matrix B = H.transpose() * Y;
  SmoothProblem sp;
  sp.grad = [&](const Matrix& X) -> Matrix { return 2.0 * (G * X - B); };
  sp.value = [&](const Matrix& X) {
    return y2 - 2.0 * (X.array() * B.array()).sum() + (X.array() * (G * X).array()).sum();
  };
  sp.project = [&](Matrix& X) { project_columns(domain, X); };
  NesterovOptions o{cfg.step_rule, step, cfg.inner_iters_S, {}};
  return nesterov_loop(S0, sp, o).x;
}

Matrix accelerated_H(const Matrix& Y, double y2, const Matrix& H, const Matrix& S,
                     const ObjectiveParams& params, const SolverConfig& cfg) {
  const double lambda = params.lambda();
  const double beta = params.beta();
  const Matrix& Psi = params.Psi();
  const Matrix C = S * S.transpose();
  const Matrix E = Y * S.transpose();
  SmoothProblem hp;
  hp.value = [&](const Matrix& X) {
    const Matrix A = (X.transpose() * X + Psi) / beta;
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success) return kInf;
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return y2 - 2.0 * (X.array() * E.array()).sum() + ((X.transpose() * X).array() * C.array()).sum() +
           lambda * logdet;
  };
  hp.grad = [&](const Matrix& X) -> Matrix {
    Eigen::LLT<Matrix> llt(X.transpose() * X + Psi);
    if (llt.info() != Eigen::Success) throw NumericalError("H^T H + Psi lost definiteness");
    return 2.0 * (X * C - E) + 2.0 * lambda * llt.solve(X.transpose()).transpose();
  };
  const double a_min = lambda_min_sym(H.transpose() * H + Psi);
  const double L = 2.0 * lambda_max_sym(C) + 6.0 * lambda / a_min;
  if (!(L > 0.0) || !std::isfinite(L)) throw NumericalError("H-block Lipschitz estimate is not finite");
  NesterovOptions o{cfg.step_rule, 1.0 / L, cfg.inner_iters_H, {}};
  return nesterov_loop(H, hp, o).x;
}

// Gauss-Newton model of the reduced objective around (H, S): S compensates a
// change dH on its free coordinates, so column j contributes
// (s_j s_j^T) kron (I - P_j), with P_j the projector onto H times the free
// directions of s_j. The log-det term contributes its convex upper bound.
Matrix reduced_curvature(const Matrix& H, const Matrix& S, const DomainSpec& domain,
                         const ObjectiveParams& params) {
  const auto M = H.rows();
  const auto r = H.cols();
  std::map<std::string, std::pair<Matrix, Matrix>> groups;  // key -> (basis, sum s s^T)
  std::string key;
  for (Eigen::Index j = 0; j < S.cols(); ++j) {
    Matrix B = free_basis(domain, S.col(j), key);
    auto it = groups.find(key);
    if (it == groups.end()) it = groups.emplace(key, std::make_pair(std::move(B), Matrix::Zero(r, r))).first;
    it->second.second.noalias() += S.col(j) * S.col(j).transpose();
  }
  Matrix K = Matrix::Zero(M * r, M * r);
  for (const auto& [k, g] : groups) {
    Matrix Q = Matrix::Identity(M, M);
    if (g.first.cols() > 0) {
      const Matrix HB = H * g.first;
      Eigen::CompleteOrthogonalDecomposition<Matrix> cod(HB);
      Q -= HB * cod.pseudoInverse();
    }
    for (Eigen::Index a = 0; a < r; ++a)
      for (Eigen::Index b = 0; b < r; ++b) K.block(a * M, b * M, M, M) += 2.0 * g.second(a, b) * Q;
  }
  const Matrix Ainv = (H.transpose() * H + params.Psi()).inverse();
  for (Eigen::Index a = 0; a < r; ++a)
    for (Eigen::Index b = 0; b < r; ++b)
      K.block(a * M, b * M, M, M).diagonal().array() += 2.0 * params.lambda() * Ainv(a, b);
  return K;
}

}  // namespace

void SolverConfig::validate() const {
  if (max_outer_iters < 1) throw InvalidArgument("max_outer_iters must be >= 1");
  if (inner_iters_H < 1 || inner_iters_S < 1) throw InvalidArgument("inner iteration counts must be >= 1");
  if (!(rel_obj_tol > 0.0)) throw InvalidArgument("rel_obj_tol must be positive");
  if (step_rule.kind == StepRuleKind::Backtracking) {
    if (!(step_rule.shrink > 0.0 && step_rule.shrink < 1.0))
      throw InvalidArgument("backtracking shrink factor must lie in (0, 1)");
    if (step_rule.max_tries < 1) throw InvalidArgument("backtracking needs max_tries >= 1");
  }
  if (const auto* g = std::get_if<RandomGaussianInit>(&init); g && !(g->scale > 0.0))
    throw InvalidArgument("random init scale must be positive");
}

double step_size_S(const Matrix& H) {
  const double top = lambda_max_sym(H.transpose() * H);
  if (!(top > 0.0)) return kInf;
  return 1.0 / (2.0 * top);
}

double stationarity_S(const Matrix& Y, const Matrix& H, const Matrix& S, const DomainSpec& domain) {
  const double step = step_size_S(H);
  if (std::isinf(step)) return 0.0;
  const Matrix g = -2.0 * H.transpose() * (Y - H * S);
  Matrix z = S - step * g;
  project_columns(domain, z);
  return (S - z).norm() / step;
}

static FitResult descend(const Matrix& Y, const DomainSpec& domain, const ObjectiveParams& params,
                  const SolverConfig& cfg, Matrix H, Matrix S) {
  const int r = params.r();
  FitResult res;
  auto fail = [&](const std::string& what) {
    res.H_hat = H;
    res.S_hat = S;
    return FitFailure(what, res);
  };
  auto objective_or_fail = [&](const Matrix& Hc, const Matrix& Sc) {
    double J = kInf;
    try {
      J = evaluate(params, Y, Hc, Sc);
    } catch (const NumericalError& e) {
      throw fail(std::string("objective evaluation failed: ") + e.what());
    }
    if (!std::isfinite(J)) throw fail("objective is not finite");
    return J;
  };
  auto objective_or_inf = [&](const Matrix& Hc, const Matrix& Sc) {
    try {
      const double J = evaluate(params, Y, Hc, Sc);
      return std::isfinite(J) ? J : kInf;
    } catch (const NumericalError&) {
      return kInf;
    }
  };

  double J = objective_or_fail(H, S);
  res.initial_objective = J;
  res.H_hat = H;
  res.S_hat = S;

  const double y2 = Y.squaredNorm();
  const auto MR = Y.rows() * r;
  double damping = 1e-3;

  for (int outer = 1; outer <= cfg.max_outer_iters; ++outer) {
    S = solve_S(Y, y2, H, S, domain, cfg);

    bool moved = false;
    if (cfg.h_update == HUpdate::VariableProjection) {
      const double J_s = objective_or_fail(H, S);
      const Matrix g = grad_H(params, Y, H, S);
      const Matrix K = reduced_curvature(H, S, domain, params);
      const double scale = K.diagonal().mean();
      const Eigen::Map<const Vector> gv(g.data(), MR);
      for (int attempt = 0; attempt < 20 && !moved; ++attempt) {
        Matrix Km = K;
        Km.diagonal().array() += damping * scale;
        Eigen::LLT<Matrix> llt(Km);
        if (llt.info() == Eigen::Success) {
          const Vector x = -llt.solve(gv);
          const Matrix dH = Eigen::Map<const Matrix>(x.data(), Y.rows(), r);
          const Matrix Hn = H + dH;
          Matrix Sn = S - (Hn.transpose() * Hn).ldlt().solve(Hn.transpose() * (dH * S));
          if (!Sn.allFinite()) Sn = S;
          project_columns(domain, Sn);
          Sn = solve_S(Y, y2, Hn, Sn, domain, cfg);
          if (objective_or_inf(Hn, Sn) < J_s) {
            H = Hn;
            S = Sn;
            damping = std::max(damping / 3.0, 1e-12);
            moved = true;
            break;
          }
        }
        damping *= 4.0;
      }
      if (!moved) damping = 1e-3;
    }
    if (!moved) {
      try {
        H = accelerated_H(Y, y2, H, S, params, cfg);
      } catch (const NumericalError& e) {
        throw fail(std::string("H-block failed: ") + e.what());
      }
    }

    const double J_new = objective_or_fail(H, S);
    if (J_new > J) {
      // Rounding-level increase: keep the previous iterate and stop.
      H = res.H_hat;
      S = res.S_hat;
      break;
    }
    res.objective_trace.push_back(J_new);
    res.outer_iters_used = outer;
    res.H_hat = H;
    res.S_hat = S;
    const double change = (J - J_new) / (1.0 + std::abs(J));
    J = J_new;
    if (change == 0.0) break;
    if (change < cfg.rel_obj_tol) {
      const auto st = measure(params, Y, H, S, domain);
      const double bound = 10.0 * cfg.rel_obj_tol * (1.0 + std::abs(J));
      if (st.s <= bound && st.h <= bound) break;
    }
  }

  const auto st = measure(params, Y, res.H_hat, res.S_hat, domain);
  res.stationarity_S = st.s;
  res.stationarity_H = st.h;
  const double bound = 10.0 * cfg.rel_obj_tol * (1.0 + std::abs(res.final_objective()));
  res.converged = st.s <= bound && st.h <= bound;
  return res;
}


FitResult fit(const Matrix& Y, const DomainSpec& domain, const ObjectiveParams& params,
              const SolverConfig& cfg) {
  cfg.validate();
  const int r = params.r();
  if (Y.rows() != params.M())
    throw InvalidArgument("Y has " + std::to_string(Y.rows()) + " rows but the objective expects M=" +
                          std::to_string(params.M()));
  if (domain.dim() != r) throw InvalidArgument("domain dimension differs from r");
  if (r > Y.rows() || r > Y.cols()) throw InvalidArgument("r must not exceed min(M, N)");
  if (!Y.allFinite()) throw InvalidArgument("Y has non-finite entries");

  Matrix H, S;
  initialize(Y, domain, cfg, H, S);

  if (cfg.continuation) {
    // Fits at lambda * 100^k, k = K..1, warm-start the final fit. The
    // largest stage sits at the weight a noise level of 1% of the mean
    // entry power of Y would receive.
    const double lambda_start = params.beta() * 1e-2 * Y.squaredNorm() / static_cast<double>(Y.size());
    int stages = 0;
    while (stages < 6 && params.lambda() * std::pow(100.0, stages + 1) <= lambda_start) ++stages;
    for (int k = stages; k >= 1; --k) {
      const auto staged = ObjectiveParams::with_lambda(params.lambda() * std::pow(100.0, k), params.Psi(),
                                                       params.phi(), params.M());
      FitResult f = descend(Y, domain, staged, cfg, H, S);
      H = std::move(f.H_hat);
      S = std::move(f.S_hat);
    }
  }
  return descend(Y, domain, params, cfg, std::move(H), std::move(S));
}

}  // namespace bsmf
