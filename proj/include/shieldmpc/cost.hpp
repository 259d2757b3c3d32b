#pragma once

#include <span>

#include "shieldmpc/cbf.hpp"
#include "shieldmpc/environment.hpp"
#include "shieldmpc/types.hpp"

namespace shieldmpc {

// q(x) = (x - x_g)^T diag(Q) (x - x_g).
struct QuadraticCostSpec {
  Eigen::VectorXd weights;
  State target;

  void validate(int state_dim) const;
};

enum class PenaltyMode { kIndicator, kHinge, kBoth };

struct PenaltySpec {
  double collision_weight = 1e4;  // C_obs
  double cbf_weight = 1e3;        // C_cbf
  PenaltyMode mode = PenaltyMode::kHinge;

  void validate() const;
};

// Which terms make up J_new. The quadratic term is always present.
struct CostSpec {
  QuadraticCostSpec quadratic;
  PenaltySpec penalty;
  bool collision = false;    // C_obs * 1{x_k in A}
  bool adversarial = false;  // negate the collision term (rewards A)
  bool cbf = false;          // DCBF descent penalty
};

double stage_cost(const State& x, const QuadraticCostSpec& spec);

// 0 outside the avoid set, C_obs inside.
double collision_cost(const State& x, const Environment& env,
                      double collision_weight);

// Sum over transitions k -> k+1 of C_cbf * [residual]_+ (hinge),
// C_cbf * 1{residual > 0} (indicator) or both.
double cbf_penalty(std::span<const double> barrier_values, double a,
                   double cbf_weight, PenaltyMode mode);
double cbf_penalty(const Trajectory& traj, const BarrierFunction& barrier,
                   double cbf_weight, PenaltyMode mode);

// J_new = sum_{k=1..K} [ q(x_k) + collision(x_k) ]
//       + sum_{k=0..K-1} cbf(x_k -> x_{k+1}).
// `barrier_values` (B(x_k) for every row) is required when spec.cbf is set.
double total_cost(const Trajectory& traj, const CostSpec& spec,
                  const Environment& env,
                  std::span<const double> barrier_values = {}, double a = 0.0);
double total_cost(const Trajectory& traj, const CostSpec& spec,
                  const Environment& env, const BarrierFunction* barrier);

}  // namespace shieldmpc
