#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "shieldmpc/cbf.hpp"
#include "shieldmpc/environment.hpp"
#include "shieldmpc/mlp.hpp"

namespace shieldmpc {

using HeuristicFn = std::function<double(const State&)>;

struct TrainConfig {
  double gamma = 0.99;
  int unroll = 100;        // T, steps per data-collection episode
  int episodes = 200;
  double learning_rate = 1e-3;
  int batch_size = 256;
  int epochs = 50;
  int target_refresh = 200;  // R, updates between target-network copies
  std::vector<int> hidden = {64, 64};
  std::uint64_t seed = 1;

  void validate() const;
};

// Transitions (x_k, x_{k+1}) under a fixed policy, stored column-wise.
struct RolloutDataset {
  Eigen::MatrixXd states;       // n_x x M
  Eigen::MatrixXd next_states;  // n_x x M
  Eigen::VectorXd h;            // h(x_k)
  Eigen::VectorXd h_next;       // h(x_{k+1})
  std::vector<char> terminal;   // x_{k+1} crashed; the episode ended there
  int truncated_episodes = 0;   // episodes cut short by a dynamics error

  int size() const { return static_cast<int>(h.size()); }
};

// Fresh policy per episode, so stateful controllers do not leak across
// episodes.
using PolicyFactory = std::function<Policy(int episode)>;

// Episode e starts from env.sample_state(StreamRng(seed, e)), then the
// `extra_starts` in order. Episodes end early when the next state crashes.
RolloutDataset collect_rollouts(const Environment& env,
                                const PolicyFactory& policy,
                                const HeuristicFn& h, int n_episodes,
                                int unroll, std::uint64_t seed,
                                const std::vector<State>& extra_starts = {});
RolloutDataset collect_rollouts(const Environment& env, const Policy& policy,
                                const HeuristicFn& h, int n_episodes,
                                int unroll, std::uint64_t seed,
                                const std::vector<State>& extra_starts = {});

// max{h(x_k), (1 - gamma) h(x_k) + gamma V(x_{k+1})}.
double dp_target(double h, double v_next, double gamma);

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  Mlp net;
  std::vector<double> epoch_loss;  // mean minibatch loss per epoch
  long updates = 0;
  double final_loss() const {
    return epoch_loss.empty() ? 0.0 : epoch_loss.back();
  }
};

// Semi-gradient regression onto dp_target with a target network refreshed
// every cfg.target_refresh updates. Crashed next states bootstrap with
// their own h value (absorbing).
TrainResult train(const RolloutDataset& data, const TrainConfig& cfg,
                  const InputEncoding& encoding);

void write_training_curve(const std::string& path,
                          const std::vector<double>& epoch_loss);

// max{h(x), net(x)}.
BarrierFunction as_barrier(std::shared_ptr<const Mlp> net, HeuristicFn h,
                           double a);

// max_{0<=k<=K} h(x_k) along the closed loop from x0.
double policy_value_oracle(const State& x0, const Policy& policy,
                           const Environment& env, const HeuristicFn& h,
                           int horizon);

// Value function tabulated on a uniform 1-D grid, linearly interpolated and
// clamped at the ends.
struct GridValue {
  double lo = 0.0, hi = 0.0;
  Eigen::VectorXd values;
  int iterations = 0;
  double last_change = 0.0;

  double operator()(double x) const;
  double node(int i) const;
};

using ScalarMap = std::function<double(double)>;

// Iterates V <- max{h, (1 - gamma) h + gamma V(next(x))} to a fixed point
// (sup-norm change below tol).
GridValue discounted_value_grid(const ScalarMap& next, const ScalarMap& h,
                                double gamma, double lo, double hi, int nodes,
                                double tol = 1e-8, int max_iterations = 200000);

// Undiscounted multi-step form: V <- max{max_{0<=k<T} h(x_k), V(x_T)}.
GridValue multistep_value_grid(const ScalarMap& next, const ScalarMap& h,
                               int unroll, double lo, double hi, int nodes,
                               double tol = 1e-8, int max_iterations = 200000);

}  // namespace shieldmpc
