#include "shieldmpc/cost.hpp"

#include <algorithm>
#include <vector>

namespace shieldmpc {

void QuadraticCostSpec::validate(int state_dim) const {
  if (weights.size() != state_dim || target.size() != state_dim) {
    throw ConfigError("cost: Q and target must have " +
                      std::to_string(state_dim) + " entries");
  }
  if ((weights.array() < 0.0).any()) {
    throw ConfigError("cost: Q entries must be non-negative");
  }
}

void PenaltySpec::validate() const {
  if (!(collision_weight > 0.0) || !(cbf_weight > 0.0)) {
    throw ConfigError("cost: C_obs and C_cbf must be positive");
  }
}

double stage_cost(const State& x, const QuadraticCostSpec& spec) {
  if (x.size() != spec.weights.size() || x.size() != spec.target.size()) {
    throw ConfigError("stage_cost: dimension mismatch");
  }
  const Eigen::VectorXd d = x - spec.target;
  return (spec.weights.array() * d.array().square()).sum();
}

double collision_cost(const State& x, const Environment& env,
                      double collision_weight) {
  return env.in_avoid_set(x) ? collision_weight : 0.0;
}

double cbf_penalty(std::span<const double> b, double a, double cbf_weight,
                   PenaltyMode mode) {
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < b.size(); ++k) {
    const double r = descent_residual(b[k], b[k + 1], a);
    if (r <= 0.0) continue;
    if (mode != PenaltyMode::kIndicator) sum += r;
    if (mode != PenaltyMode::kHinge) sum += 1.0;
  }
  return cbf_weight * sum;
}

double cbf_penalty(const Trajectory& traj, const BarrierFunction& barrier,
                   double cbf_weight, PenaltyMode mode) {
  const Eigen::VectorXd values = barrier.evaluate_rows(traj);
  return cbf_penalty(std::span<const double>(values.data(), values.size()),
                     barrier.a(), cbf_weight, mode);
}

double total_cost(const Trajectory& traj, const CostSpec& spec,
                  const Environment& env, std::span<const double> barrier_values,
                  double a) {
  double cost = 0.0;
  for (Eigen::Index k = 1; k < traj.rows(); ++k) {
    const State x = traj.row(k).transpose();
    cost += stage_cost(x, spec.quadratic);
    if (spec.collision) {
      const double c = collision_cost(x, env, spec.penalty.collision_weight);
      cost += spec.adversarial ? -c : c;
    }
  }
  if (spec.cbf) {
    if (barrier_values.size() != static_cast<std::size_t>(traj.rows())) {
      throw ConfigError("total_cost: barrier values missing for cbf penalty");
    }
    cost += cbf_penalty(barrier_values, a, spec.penalty.cbf_weight,
                        spec.penalty.mode);
  }
  return cost;
}

double total_cost(const Trajectory& traj, const CostSpec& spec,
                  const Environment& env, const BarrierFunction* barrier) {
  if (!spec.cbf) return total_cost(traj, spec, env);
  if (barrier == nullptr) {
    throw ConfigError("total_cost: cbf penalty requested without a barrier");
  }
  const Eigen::VectorXd values = barrier->evaluate_rows(traj);
  return total_cost(traj, spec, env,
                    std::span<const double>(values.data(), values.size()),
                    barrier->a());
}

}  // namespace shieldmpc
