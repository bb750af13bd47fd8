// Alternating minimization of the MAP objective over (H, S). The S-subproblem
// is solved by accelerated projected gradient. The H-update is either a
// Levenberg-Marquardt step on the reduced objective min_S J(H, S), where S
// re-solves after every trial step, or an accelerated gradient pass on the
// H-subproblem with S held fixed.
#pragma once

#include "bsmf/core.hpp"
#include "bsmf/domains.hpp"
#include "bsmf/nesterov.hpp"
#include "bsmf/objective.hpp"

#include <cstdint>
#include <variant>
#include <vector>

namespace bsmf {

struct RandomGaussianInit {
  double scale = 1.0;
};
/// Truncated SVD of Y: H0 = U_r diag(s_r), S0 from the right singular vectors.
struct SvdWarmStartInit {};
struct ProvidedInit {
  Matrix H0;
  Matrix S0;
};
using SolverInit = std::variant<RandomGaussianInit, SvdWarmStartInit, ProvidedInit>;

enum class HUpdate { VariableProjection, Accelerated };

struct SolverConfig {
  int max_outer_iters = 500;
  int inner_iters_H = 50;
  int inner_iters_S = 50;
  double rel_obj_tol = 1e-8;
  StepRule step_rule = StepRule::backtracking();
  SolverInit init = SvdWarmStartInit{};
  HUpdate h_update = HUpdate::VariableProjection;
  // Warm-start with fits at geometrically larger lambda when the noise
  // weight is small relative to the data power.
  bool continuation = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct FitResult {
  Matrix H_hat;
  Matrix S_hat;
  std::vector<double> objective_trace;  // one entry per completed outer iteration
  bool converged = false;
  int outer_iters_used = 0;
  double initial_objective = 0.0;
  double stationarity_S = 0.0;  // projected-gradient norm at the returned point
  double stationarity_H = 0.0;  // gradient norm at the returned point

  double final_objective() const {
    return objective_trace.empty() ? initial_objective : objective_trace.back();
  }
};

/// Thrown when the objective stops being finite. Carries the last finite iterate.
class FitFailure : public NumericalError {
 public:
  FitFailure(const std::string& what, FitResult last)
      : NumericalError(what), last_(std::move(last)) {}
  const FitResult& last_valid() const noexcept { return last_; }

 private:
  FitResult last_;
};

FitResult fit(const Matrix& Y, const DomainSpec& domain, const ObjectiveParams& params,
              const SolverConfig& cfg);

/// 1 / (2 * lambda_max(H^T H)); +inf when H is zero.
double step_size_S(const Matrix& H);

/// Projected-gradient norm of the S-subproblem at (H, S).
double stationarity_S(const Matrix& Y, const Matrix& H, const Matrix& S, const DomainSpec& domain);

}  // namespace bsmf
