#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "shieldmpc/cbf.hpp"
#include "shieldmpc/environment.hpp"
#include "shieldmpc/types.hpp"

namespace shieldmpc {

// q_v: independent Gaussians N(v_k, diag(variance)) per step.
struct GaussianPolicy {
  ControlSequence mean;      // K x n_u
  Eigen::VectorXd variance;  // n_u, shared across steps

  GaussianPolicy() = default;
  GaussianPolicy(ControlSequence mean, Eigen::VectorXd variance);

  int horizon() const { return static_cast<int>(mean.rows()); }
  int control_dim() const { return static_cast<int>(mean.cols()); }
  void validate() const;
  // Log density of a full sequence.
  double log_density(const ControlSequence& u) const;
};

// eps^i ~ N(0, Sigma), drawn from the stream (seed, i).
std::vector<ControlSequence> sample_noise(const GaussianPolicy& policy, int n,
                                          std::uint64_t seed);
// u^i = clamp(v + eps^i). Empty bounds disable clamping.
std::vector<ControlSequence> sample_controls(const GaussianPolicy& policy,
                                             int n, std::uint64_t seed,
                                             const Control& lower = {},
                                             const Control& upper = {});

struct RewireEvent {
  int step;    // k at which the prefix x_0..x_k was replaced
  int target;  // particle that was rewired
  int source;  // safe particle whose prefix was copied
};

class DegenerateEnsemble : public std::runtime_error {
 public:
  DegenerateEnsemble() : std::runtime_error("degenerate ensemble: all weights are zero") {}
};

struct WeightedEnsemble {
  std::vector<ControlSequence> controls;  // realized controls after rewiring
  std::vector<Trajectory> trajectories;   // K+1 states per particle
  Eigen::VectorXd costs;
  Eigen::VectorXd weights;  // unnormalized omega
  // particle_weights(i, k) = w^i_k in {0, 1}, k = 0..K.
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> particle_weights;
  std::vector<RewireEvent> rewires;
  std::vector<int> safe_counts;  // per step k = 1..K
  std::vector<char> failed;      // particle hit a dynamics error
  int degenerate_steps = 0;      // steps with no safe particle

  int size() const { return static_cast<int>(controls.size()); }
  // omega / sum(omega); throws DegenerateEnsemble when all are zero.
  Eigen::VectorXd normalized_weights() const;
};

Eigen::VectorXd normalize_weights(const Eigen::VectorXd& weights);

// v_hat = sum_i omega~^i u^i.
ControlSequence snis_estimate(const WeightedEnsemble& ensemble);
ControlSequence snis_estimate(const std::vector<ControlSequence>& controls,
                              const Eigen::VectorXd& weights);

// exp(-(J/lambda + kappa sum_k u_k^T Sigma^-1 vbar_k)), min exponent
// subtracted. kappa = 1 is the exact MPPI-as-VI weight. Non-finite costs get
// weight 0.
Eigen::VectorXd mppi_weights(const std::vector<ControlSequence>& controls,
                             const Eigen::VectorXd& costs,
                             const GaussianPolicy& proposal, double lambda,
                             double kappa = 1.0);

// General VI importance weight exp(-J/lambda) p0(u) / r(u), in the log domain.
Eigen::VectorXd vi_weights(const std::vector<ControlSequence>& controls,
                           const Eigen::VectorXd& costs,
                           const GaussianPolicy& prior,
                           const GaussianPolicy& proposal, double lambda);

// 1 for the elite_k lowest costs (ties: lower index first), else 0.
Eigen::VectorXd cem_weights(const Eigen::VectorXd& costs, int elite_k);

// Which states count as unsafe during RBR.
struct SafetySpec {
  enum class Kind { kAvoidSet, kBarrier };
  Kind kind = Kind::kAvoidSet;
  const BarrierFunction* barrier = nullptr;
  // Under kBarrier, also mark steps whose descent residual is positive.
  bool check_residual = true;
};

// Steps all particles together. With `resample` set, after computing x_k for
// k = 1..K-1 every unsafe particle gets the state/control prefix of a safe
// particle chosen by systematic selection over the safe set (one uniform
// from the stream (seed, k)); its own remaining controls are kept. Steps
// with no safe particle are left alone. Costs and weights are not filled.
WeightedEnsemble rollout_rbr(const Environment& env, const State& x0,
                             const std::vector<ControlSequence>& samples,
                             const SafetySpec& safety, std::uint64_t seed,
                             bool resample = true);

// 1 / sum w^2 after normalizing. `was_normalized` reports whether the input
// already summed to one.
double ess(const Eigen::VectorXd& weights, bool* was_normalized = nullptr);

}  // namespace shieldmpc
