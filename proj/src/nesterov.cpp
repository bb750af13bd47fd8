#include "bsmf/nesterov.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace bsmf {

namespace {

struct Step {
  Matrix z;
  double fz;
};

class Stepper {
 public:
  Stepper(const SmoothProblem& p, const NesterovOptions& o) : p_(p), o_(o), step_(o.step) {}

  double step() const noexcept { return step_; }

  // Projected gradient step from y. fy is value(y) when a value function exists.
  Step from(const Matrix& y, double fy) {
    const Matrix g = p_.grad(y);
    if (!g.allFinite()) throw NumericalError("gradient is not finite");
    for (int tries = 0;; ++tries) {
      Matrix z = y - step_ * g;
      if (p_.project) p_.project(z);
      if (!p_.value) return {std::move(z), std::numeric_limits<double>::quiet_NaN()};
      const double fz = p_.value(z);
      if (o_.rule.kind == StepRuleKind::LipschitzEstimate) return {std::move(z), fz};
      const Matrix d = z - y;
      const double model = fy + (g.array() * d.array()).sum() + d.squaredNorm() / (2.0 * step_);
      if (fz <= model) return {std::move(z), fz};
      if (tries >= o_.rule.max_tries)
        throw NumericalError("backtracking exhausted " + std::to_string(tries) + " tries");
      step_ *= o_.rule.shrink;
      if (step_ < kMinStep) throw NumericalError("backtracking step collapsed below 1e-18");
    }
  }

 private:
  const SmoothProblem& p_;
  const NesterovOptions& o_;
  double step_;
};

}  // namespace

NesterovResult nesterov_loop(const Matrix& x0, const SmoothProblem& problem,
                             const NesterovOptions& opts) {
  if (opts.iters < 1) throw InvalidArgument("nesterov_loop needs iters >= 1");
  if (!problem.grad) throw InvalidArgument("nesterov_loop needs a gradient");
  if (!(opts.step > 0.0) || !std::isfinite(opts.step))
    throw InvalidArgument("nesterov_loop needs a positive finite step");
  if (opts.rule.kind == StepRuleKind::Backtracking) {
    if (!problem.value) throw InvalidArgument("backtracking needs a value function");
    if (!(opts.rule.shrink > 0.0 && opts.rule.shrink < 1.0))
      throw InvalidArgument("backtracking shrink factor must lie in (0, 1)");
  }

  const bool has_value = static_cast<bool>(problem.value);
  NesterovResult res;
  res.x = x0;
  if (problem.project) problem.project(res.x);
  double fx = has_value ? problem.value(res.x) : std::numeric_limits<double>::quiet_NaN();
  if (has_value && !std::isfinite(fx)) throw NumericalError("starting point has non-finite value");

  Stepper stepper(problem, opts);
  Matrix x_prev = res.x;
  double t = 1.0;
  for (int k = 1; k <= opts.iters; ++k) {
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const Matrix y = res.x + ((t - 1.0) / t_next) * (res.x - x_prev);
    double fy = fx;
    if (has_value && t > 1.0) fy = problem.value(y);
    if (has_value && !std::isfinite(fy)) fy = std::numeric_limits<double>::infinity();

    Step s{Matrix(), std::numeric_limits<double>::infinity()};
    bool restarted = false;
    if (std::isfinite(fy) || !has_value) s = stepper.from(y, fy);
    if (has_value && !(s.fz <= fx)) {
      // Momentum overshoot: drop it and step from the current point.
      restarted = true;
      ++res.restarts;
      s = stepper.from(res.x, fx);
      if (!(s.fz <= fx)) {
        res.stalled = true;
        res.iters = k - 1;
        break;
      }
    }
    x_prev = std::move(res.x);
    res.x = std::move(s.z);
    fx = s.fz;
    t = restarted ? 1.0 : t_next;
    res.iters = k;
    if (res.x == x_prev) {
      res.stalled = true;
      break;
    }
    if (opts.stop && opts.stop(k, res.x)) break;
  }
  res.value = fx;
  res.step = stepper.step();
  return res;
}

}  // namespace bsmf
