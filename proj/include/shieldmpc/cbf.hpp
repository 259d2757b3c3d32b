#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "shieldmpc/environment.hpp"
#include "shieldmpc/types.hpp"

namespace shieldmpc {

// Track heuristics use the avoid-positive sign convention: a value > 0 means
// the state is in the avoid set.

// e_y^2 - w_I^2.
double h0_track(const State& x, double half_width);

// h0 shifted by -0.3 inside the track (|e_y| <= w_I), +0.2 in the collision
// band (w_I < |e_y| < w_O) and held at 2.8 from the crash width outwards.
// Same avoid set as h0_track, with a jump of 0.5 across its boundary.
double h_modified(const State& x, double half_width, double crash_width);

// Evaluable B(x) with a linear class-kappa slope a in (0, 1).
class BarrierFunction {
 public:
  enum class Source { kHeuristic, kLearned, kPolicyValueOracle };

  using ScalarFn = std::function<double(const State&)>;
  // Evaluates every row of `states` into `out`.
  using BatchFn =
      std::function<void(const Trajectory& states, Eigen::VectorXd& out)>;

  BarrierFunction(ScalarFn fn, double a, Source source, BatchFn batch = {});

  double operator()(const State& x) const { return fn_(x); }
  Eigen::VectorXd evaluate_rows(const Trajectory& states) const;

  double a() const { return a_; }
  Source source() const { return source_; }

 private:
  ScalarFn fn_;
  BatchFn batch_;
  double a_;
  Source source_;
};

std::string to_string(BarrierFunction::Source source);

// B(x_next) - B(x) + a B(x); <= 0 means the descent condition holds.
double descent_residual(double b, double b_next, double a);
double descent_residual(const State& x, const State& x_next,
                        const BarrierFunction& barrier);

enum class HeuristicKind { kBase, kModified };

// Heuristic barrier for an environment. kModified is only meaningful for the
// vehicle; other environments fall back to their avoid heuristic.
BarrierFunction make_heuristic_barrier(std::shared_ptr<const Environment> env,
                                       HeuristicKind kind, double a);

// Heuristic function h used to supervise value-function training.
std::function<double(const State&)> make_heuristic(
    std::shared_ptr<const Environment> env, HeuristicKind kind);

struct InvarianceReport {
  std::vector<double> values;     // B(x_k), k = 0..K
  std::vector<double> bound;      // (1 - a)^k B(x_0)
  std::vector<double> residuals;  // residual of transition k -> k+1
  int first_violation = -1;       // first k with residual > 0, or -1
  bool stays_nonpositive = true;  // B(x_k) <= 0 for all k
  bool bound_holds = true;        // B(x_k) <= bound_k + slack for all k
};

// Rolls the closed loop for `steps` steps and checks the geometric bound
// B(x_k) <= (1 - a)^k B(x_0) that follows from per-step descent.
InvarianceReport check_forward_invariance(const State& x0, const Policy& policy,
                                          const BarrierFunction& barrier,
                                          const Environment& env, int steps,
                                          double slack = 1e-12);

}  // namespace shieldmpc
