#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "shieldmpc/cbf.hpp"
#include "shieldmpc/cost.hpp"
#include "shieldmpc/environment.hpp"
#include "shieldmpc/sampler.hpp"

namespace shieldmpc {

enum class Algorithm { kMppi, kCem, kShieldMppi, kNsMppi };

std::string to_string(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& name);

enum class RbrPredicate { kAvoidSet, kBarrier, kBarrierResidual };

struct ControllerSpec {
  Algorithm algorithm = Algorithm::kMppi;
  bool rbr = false;
  RbrPredicate rbr_predicate = RbrPredicate::kBarrierResidual;
  int horizon = 20;
  int samples = 100;
  int cem_elite_k = 10;
  double lambda = 1.0;
  // Scale on the u^T Sigma^-1 v cross term in the MPPI weight; 1 is exact.
  double control_cost_weight = 1.0;
  Eigen::VectorXd noise_std;  // per control dimension
  Control nominal;            // initial mean; zeros when empty
  bool zero_fill_tail = false;
  std::uint64_t seed = 0;

  void validate(int control_dim) const;
};

// Cost terms each algorithm uses by default: MPPI and CEM use the collision
// indicator, the shielded variants use the DCBF penalty instead.
CostSpec default_cost_terms(Algorithm algorithm, CostSpec base);

struct ControllerOutput {
  Control action;
  GaussianPolicy next_policy;
  double ess = 0.0;        // effective sample size of the final weights
  int rewires = 0;
  int degenerate_steps = 0;
  bool fallback = false;   // degenerate ensemble, prior mean used
  double min_cost = 0.0;
};

// One sample -> rollout (plain or RBR) -> cost -> weights -> SNIS update.
// `call_index` keys the random streams so repeated calls stay reproducible.
// The barrier is needed for the DCBF penalty and barrier-based RBR.
ControllerOutput controller_step(const Environment& env, const State& x0,
                                 const GaussianPolicy& policy,
                                 const ControllerSpec& spec,
                                 const CostSpec& cost,
                                 const BarrierFunction* barrier,
                                 std::uint64_t call_index,
                                 WeightedEnsemble* ensemble_out = nullptr);

// Receding-horizon wrapper that owns the sampling distribution.
class Controller {
 public:
  Controller(std::shared_ptr<const Environment> env, ControllerSpec spec,
             CostSpec cost, std::shared_ptr<const BarrierFunction> barrier);

  ControllerOutput step(const State& x);
  void reset();

  const GaussianPolicy& policy() const { return policy_; }
  const ControllerSpec& spec() const { return spec_; }

 private:
  std::shared_ptr<const Environment> env_;
  ControllerSpec spec_;
  CostSpec cost_;
  std::shared_ptr<const BarrierFunction> barrier_;
  GaussianPolicy policy_;
  std::uint64_t calls_ = 0;
};

}  // namespace shieldmpc
