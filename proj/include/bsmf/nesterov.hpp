// Accelerated projected gradient (Nesterov / FISTA momentum) with optional
// backtracking and function-value restart.
#pragma once

#include "bsmf/core.hpp"

#include <functional>

namespace bsmf {

enum class StepRuleKind { LipschitzEstimate, Backtracking };

struct StepRule {
  StepRuleKind kind = StepRuleKind::Backtracking;
  double shrink = 0.5;
  int max_tries = 60;

  static StepRule lipschitz() { return {StepRuleKind::LipschitzEstimate, 0.5, 0}; }
  static StepRule backtracking(double shrink = 0.5, int max_tries = 60) {
    return {StepRuleKind::Backtracking, shrink, max_tries};
  }
};

/// Backtracking gives up once the step falls below this.
inline constexpr double kMinStep = 1e-18;

struct SmoothProblem {
  std::function<Matrix(const Matrix&)> grad;
  /// Needed for backtracking and restart. Returning +inf rejects a point.
  std::function<double(const Matrix&)> value;
  /// In-place projection onto the feasible set; empty means unconstrained.
  std::function<void(Matrix&)> project;
};

struct NesterovOptions {
  StepRule rule;
  /// Fixed step for LipschitzEstimate, initial step for Backtracking.
  double step = 1.0;
  int iters = 50;
  /// Called after every accepted iterate; returning true stops the loop.
  std::function<bool(int iter, const Matrix& x)> stop;
};

struct NesterovResult {
  Matrix x;
  double value = 0.0;  // NaN when no value function was given
  int iters = 0;
  int restarts = 0;
  double step = 0.0;   // last step used
  bool stalled = false;  // no descent possible from x
};

/// Runs `iters` accelerated steps from x0 (projected first). With a value
/// function, accepted values never increase: an increase resets the momentum
/// and retries a plain projected-gradient step from the current point.
NesterovResult nesterov_loop(const Matrix& x0, const SmoothProblem& problem,
                             const NesterovOptions& opts);

}  // namespace bsmf
