#include "shieldmpc/controller.hpp"

#include <cmath>
#include <limits>

#include "shieldmpc/random.hpp"

namespace shieldmpc {

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kMppi: return "mppi";
    case Algorithm::kCem: return "cem";
    case Algorithm::kShieldMppi: return "shield-mppi";
    case Algorithm::kNsMppi: return "ns-mppi";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "mppi") return Algorithm::kMppi;
  if (name == "cem") return Algorithm::kCem;
  if (name == "shield-mppi" || name == "s-mppi") return Algorithm::kShieldMppi;
  if (name == "ns-mppi") return Algorithm::kNsMppi;
  throw ConfigError("unknown algorithm '" + name + "'");
}

void ControllerSpec::validate(int control_dim) const {
  if (horizon < 1) throw ConfigError("controller: horizon must be >= 1");
  if (samples < 1) throw ConfigError("controller: samples must be >= 1");
  if (algorithm == Algorithm::kCem && (cem_elite_k < 1 || cem_elite_k > samples)) {
    throw ConfigError("controller: cem_elite_k must lie in [1, samples]");
  }
  if (!(lambda > 0.0)) throw ConfigError("controller: lambda must be > 0");
  if (!(control_cost_weight >= 0.0)) {
    throw ConfigError("controller: control_cost_weight must be >= 0");
  }
  if (noise_std.size() != control_dim || (noise_std.array() <= 0.0).any()) {
    throw ConfigError("controller: noise_std needs one positive entry per control");
  }
  if (nominal.size() != 0 && nominal.size() != control_dim) {
    throw ConfigError("controller: nominal control has wrong dimension");
  }
}

CostSpec default_cost_terms(Algorithm algorithm, CostSpec base) {
  const bool shielded =
      algorithm == Algorithm::kShieldMppi || algorithm == Algorithm::kNsMppi;
  base.collision = !shielded;
  base.cbf = shielded;
  return base;
}

ControllerOutput controller_step(const Environment& env, const State& x0,
                                 const GaussianPolicy& policy,
                                 const ControllerSpec& spec,
                                 const CostSpec& cost,
                                 const BarrierFunction* barrier,
                                 std::uint64_t call_index,
                                 WeightedEnsemble* ensemble_out) {
  if (!x0.allFinite()) throw DynamicsError("controller_step: non-finite state");
  if (cost.cbf && barrier == nullptr) {
    throw ConfigError("controller_step: DCBF penalty requires a barrier");
  }
  const std::uint64_t seed = mix64(spec.seed ^ mix64(call_index + 1));
  auto samples = sample_controls(policy, spec.samples, seed, env.lower_bounds(),
                                 env.upper_bounds());

  SafetySpec safety;
  if (spec.rbr && spec.rbr_predicate != RbrPredicate::kAvoidSet) {
    if (barrier == nullptr) throw ConfigError("controller_step: barrier RBR requires a barrier");
    safety.kind = SafetySpec::Kind::kBarrier;
    safety.barrier = barrier;
    safety.check_residual = spec.rbr_predicate == RbrPredicate::kBarrierResidual;
  }
  WeightedEnsemble ens = rollout_rbr(env, x0, samples, safety, seed, spec.rbr);

  const int n = ens.size();
  const int rows = spec.horizon + 1;
  Eigen::VectorXd barrier_values;
  if (cost.cbf) {
    Trajectory all(n * rows, env.state_dim());
    for (int i = 0; i < n; ++i) all.middleRows(i * rows, rows) = ens.trajectories[i];
    barrier_values = barrier->evaluate_rows(all);
  }
  ens.costs.resize(n);
  for (int i = 0; i < n; ++i) {
    if (ens.failed[i]) {
      ens.costs[i] = std::numeric_limits<double>::infinity();
      continue;
    }
    std::span<const double> bv;
    if (cost.cbf) bv = std::span<const double>(barrier_values.data() + i * rows, rows);
    ens.costs[i] = total_cost(ens.trajectories[i], cost, env, bv,
                              cost.cbf ? barrier->a() : 0.0);
  }

  if (spec.algorithm == Algorithm::kCem) {
    ens.weights = cem_weights(ens.costs, spec.cem_elite_k);
  } else {
    ens.weights = mppi_weights(ens.controls, ens.costs, policy, spec.lambda,
                               spec.control_cost_weight);
  }

  ControllerOutput out;
  out.rewires = static_cast<int>(ens.rewires.size());
  out.degenerate_steps = ens.degenerate_steps;
  out.min_cost = ens.costs.minCoeff();
  ControlSequence v_hat;
  try {
    v_hat = snis_estimate(ens);
    out.ess = ess(ens.weights);
  } catch (const DegenerateEnsemble&) {
    v_hat = policy.mean;
    out.fallback = true;
  }

  out.action = env.clamp(v_hat.row(0).transpose());
  ControlSequence next(v_hat.rows(), v_hat.cols());
  next.topRows(v_hat.rows() - 1) = v_hat.bottomRows(v_hat.rows() - 1);
  if (spec.zero_fill_tail) {
    next.bottomRows(1).setZero();
  } else {
    next.bottomRows(1) = v_hat.bottomRows(1);
  }
  out.next_policy = GaussianPolicy(std::move(next), policy.variance);
  if (ensemble_out != nullptr) *ensemble_out = std::move(ens);
  return out;
}

Controller::Controller(std::shared_ptr<const Environment> env,
                       ControllerSpec spec, CostSpec cost,
                       std::shared_ptr<const BarrierFunction> barrier)
    : env_(std::move(env)), spec_(std::move(spec)), cost_(std::move(cost)),
      barrier_(std::move(barrier)) {
  if (!env_) throw ConfigError("controller: null environment");
  spec_.validate(env_->control_dim());
  if (cost_.cbf && !barrier_) throw ConfigError("controller: DCBF penalty requires a barrier");
  reset();
}

void Controller::reset() {
  ControlSequence mean(spec_.horizon, env_->control_dim());
  if (spec_.nominal.size() == 0) {
    mean.setZero();
  } else {
    for (int k = 0; k < spec_.horizon; ++k) mean.row(k) = spec_.nominal.transpose();
  }
  policy_ = GaussianPolicy(std::move(mean), spec_.noise_std.cwiseAbs2());
  calls_ = 0;
}

ControllerOutput Controller::step(const State& x) {
  ControllerOutput out = controller_step(*env_, x, policy_, spec_, cost_,
                                         barrier_.get(), calls_++);
  policy_ = out.next_policy;
  return out;
}

}  // namespace shieldmpc
