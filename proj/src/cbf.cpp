#include "shieldmpc/cbf.hpp"

#include <algorithm>
#include <cmath>

namespace shieldmpc {

double h0_track(const State& x, double half_width) {
  const double e_y = x[vehicle::kEy];
  return e_y * e_y - half_width * half_width;
}

double h_modified(const State& x, double half_width, double crash_width) {
  const double dev = std::abs(x[vehicle::kEy]);
  if (dev >= crash_width) return 2.8;
  const double h0 = h0_track(x, half_width);
  if (dev <= half_width) return h0 - 0.3;
  return h0 + 0.2;
}

BarrierFunction::BarrierFunction(ScalarFn fn, double a, Source source,
                                 BatchFn batch)
    : fn_(std::move(fn)), batch_(std::move(batch)), a_(a), source_(source) {
  if (!(a > 0.0 && a < 1.0)) {
    throw ConfigError("barrier class-kappa slope a must lie in (0, 1)");
  }
  if (!fn_) throw ConfigError("barrier function is empty");
}

Eigen::VectorXd BarrierFunction::evaluate_rows(const Trajectory& states) const {
  Eigen::VectorXd out(states.rows());
  if (batch_) {
    batch_(states, out);
    return out;
  }
  for (Eigen::Index i = 0; i < states.rows(); ++i) {
    out[i] = fn_(states.row(i).transpose());
  }
  return out;
}

std::string to_string(BarrierFunction::Source source) {
  switch (source) {
    case BarrierFunction::Source::kHeuristic: return "heuristic";
    case BarrierFunction::Source::kLearned: return "learned";
    case BarrierFunction::Source::kPolicyValueOracle: return "policy-value-oracle";
  }
  return "unknown";
}

double descent_residual(double b, double b_next, double a) {
  return b_next - b + a * b;
}

double descent_residual(const State& x, const State& x_next,
                        const BarrierFunction& barrier) {
  return descent_residual(barrier(x), barrier(x_next), barrier.a());
}

std::function<double(const State&)> make_heuristic(
    std::shared_ptr<const Environment> env, HeuristicKind kind) {
  auto vehicle = std::dynamic_pointer_cast<const VehicleEnv>(env);
  if (kind == HeuristicKind::kModified && vehicle) {
    return [vehicle](const State& x) {
      const auto& track = vehicle->track();
      double h = h_modified(x, track.half_width(), track.crash_width());
      if (!vehicle->obstacles().empty()) {
        const double obs = vehicle->obstacle_heuristic(x);
        h = std::max(h, obs > 0.0 ? obs + 0.2 : obs - 0.3);
      }
      return h;
    };
  }
  return [env](const State& x) { return env->avoid_heuristic(x); };
}

BarrierFunction make_heuristic_barrier(std::shared_ptr<const Environment> env,
                                       HeuristicKind kind, double a) {
  return BarrierFunction(make_heuristic(std::move(env), kind), a,
                         BarrierFunction::Source::kHeuristic);
}

InvarianceReport check_forward_invariance(const State& x0, const Policy& policy,
                                          const BarrierFunction& barrier,
                                          const Environment& env, int steps,
                                          double slack) {
  const Trajectory traj = closed_loop(env, x0, policy, steps);
  InvarianceReport report;
  const double a = barrier.a();
  const double b0 = barrier(x0);
  for (int k = 0; k <= steps; ++k) {
    const double b = barrier(traj.row(k).transpose());
    report.values.push_back(b);
    report.bound.push_back(std::pow(1.0 - a, k) * b0);
    if (b > 0.0) report.stays_nonpositive = false;
    if (b > report.bound.back() + slack) report.bound_holds = false;
    if (k > 0) {
      const double r = descent_residual(report.values[k - 1], b, a);
      report.residuals.push_back(r);
      if (r > 0.0 && report.first_violation < 0) report.first_violation = k - 1;
    }
  }
  return report;
}

}  // namespace shieldmpc
