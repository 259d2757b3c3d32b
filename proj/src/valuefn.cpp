#include "shieldmpc/valuefn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace shieldmpc {

void TrainConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("train: gamma must lie in (0, 1)");
  if (unroll < 1) throw ConfigError("train: unroll must be >= 1");
  if (episodes < 1) throw ConfigError("train: episodes must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (target_refresh < 1) throw ConfigError("train: target_refresh must be >= 1");
  if (hidden.empty()) throw ConfigError("train: need at least one hidden layer");
}

RolloutDataset collect_rollouts(const Environment& env,
                                const PolicyFactory& policy,
                                const HeuristicFn& h, int n_episodes,
                                int unroll, std::uint64_t seed,
                                const std::vector<State>& extra_starts) {
  if (n_episodes < 0 || unroll < 1) throw ConfigError("collect_rollouts: bad sizes");
  const int n_x = env.state_dim();
  std::vector<State> xs, xns;
  std::vector<char> term;
  RolloutDataset data;

  const int total = n_episodes + static_cast<int>(extra_starts.size());
  for (int e = 0; e < total; ++e) {
    State x;
    if (e < n_episodes) {
      StreamRng rng(seed, e);
      x = env.sample_state(rng);
    } else {
      x = extra_starts[e - n_episodes];
    }
    if (x.size() != n_x) throw ConfigError("collect_rollouts: start state has wrong size");
    Policy pi = policy(e);
    for (int k = 0; k < unroll; ++k) {
      State xn;
      try {
        xn = env.step(x, pi(x));
      } catch (const DynamicsError&) {
        ++data.truncated_episodes;
        break;
      }
      const bool crashed = env.crashed(xn);
      xs.push_back(x);
      xns.push_back(xn);
      term.push_back(crashed ? 1 : 0);
      if (crashed) break;
      x = std::move(xn);
    }
  }

  const int m = static_cast<int>(xs.size());
  data.states.resize(n_x, m);
  data.next_states.resize(n_x, m);
  data.h.resize(m);
  data.h_next.resize(m);
  for (int i = 0; i < m; ++i) {
    data.states.col(i) = xs[i];
    data.next_states.col(i) = xns[i];
    data.h[i] = h(xs[i]);
    data.h_next[i] = h(xns[i]);
  }
  data.terminal = std::move(term);
  return data;
}

RolloutDataset collect_rollouts(const Environment& env, const Policy& policy,
                                const HeuristicFn& h, int n_episodes,
                                int unroll, std::uint64_t seed,
                                const std::vector<State>& extra_starts) {
  return collect_rollouts(env, [&policy](int) { return policy; }, h,
                          n_episodes, unroll, seed, extra_starts);
}

double dp_target(double h, double v_next, double gamma) {
  return std::max(h, (1.0 - gamma) * h + gamma * v_next);
}

TrainResult train(const RolloutDataset& data, const TrainConfig& cfg,
                  const InputEncoding& encoding) {
  cfg.validate();
  const int m = data.size();
  if (m == 0) throw ConfigError("train: empty dataset");
  if (data.states.rows() != encoding.state_dim) {
    throw ConfigError("train: dataset state dimension does not match encoding");
  }

  TrainResult result;
  result.net = Mlp(encoding, cfg.hidden, cfg.seed);
  result.net.fit_normalization(data.states);
  Mlp target = result.net;
  AdamOptimizer adam(result.net, cfg.learning_rate);

  StreamRng rng(cfg.seed, 0x747261696e);
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  const int batch = std::min(cfg.batch_size, m);
  const int n_x = encoding.state_dim;
  Eigen::MatrixXd xb(n_x, batch), xnb(n_x, batch);
  Eigen::VectorXd targets(batch);
  Mlp::Gradient grad;
  double last_finite = 0.0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the counter-based stream.
    for (int i = m - 1; i > 0; --i) {
      const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
      std::swap(order[i], order[j]);
    }
    double sum = 0.0;
    int batches = 0;
    for (int start = 0; start + batch <= m; start += batch) {
      for (int b = 0; b < batch; ++b) {
        const int idx = order[start + b];
        xb.col(b) = data.states.col(idx);
        xnb.col(b) = data.next_states.col(idx);
      }
      const Eigen::VectorXd v_next = target.evaluate_batch(xnb);
      for (int b = 0; b < batch; ++b) {
        const int idx = order[start + b];
        const double boot = data.terminal[idx] ? data.h_next[idx] : v_next[b];
        targets[b] = dp_target(data.h[idx], boot, cfg.gamma);
      }
      const double loss = result.net.loss_and_gradient(xb, targets, &grad);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch << ", update "
            << result.updates << " (last finite loss " << last_finite
            << ", learning rate " << cfg.learning_rate << ")";
        throw TrainingDiverged(msg.str());
      }
      last_finite = loss;
      adam.step(result.net, grad);
      ++result.updates;
      if (result.updates % cfg.target_refresh == 0) target = result.net;
      sum += loss;
      ++batches;
    }
    result.epoch_loss.push_back(sum / batches);
  }
  if (!result.net.parameters_finite()) {
    throw TrainingDiverged("training produced non-finite parameters");
  }
  return result;
}

void write_training_curve(const std::string& path,
                          const std::vector<double>& epoch_loss) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "epoch,loss\n";
  char buf[64];
  for (std::size_t e = 0; e < epoch_loss.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", e, epoch_loss[e]);
    out << buf;
  }
}

BarrierFunction as_barrier(std::shared_ptr<const Mlp> net, HeuristicFn h,
                           double a) {
  if (!net) throw ConfigError("as_barrier: null network");
  auto scalar = [net, h](const State& x) {
    return std::max(h(x), net->evaluate(x));
  };
  auto batch = [net, h](const Trajectory& states, Eigen::VectorXd& out) {
    const Eigen::MatrixXd cols = states.transpose();
    out = net->evaluate_batch(cols);
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      out[i] = std::max(out[i], h(states.row(i).transpose()));
    }
  };
  return BarrierFunction(scalar, a, BarrierFunction::Source::kLearned, batch);
}

double policy_value_oracle(const State& x0, const Policy& policy,
                           const Environment& env, const HeuristicFn& h,
                           int horizon) {
  State x = x0;
  double best = h(x);
  for (int k = 0; k < horizon; ++k) {
    x = env.step(x, policy(x));
    best = std::max(best, h(x));
  }
  return best;
}

double GridValue::node(int i) const {
  const int n = static_cast<int>(values.size());
  return lo + (hi - lo) * i / (n - 1);
}

double GridValue::operator()(double x) const {
  const int n = static_cast<int>(values.size());
  if (x <= lo) return values[0];
  if (x >= hi) return values[n - 1];
  const double pos = (x - lo) / (hi - lo) * (n - 1);
  const int i = std::min(static_cast<int>(pos), n - 2);
  const double t = pos - i;
  return (1.0 - t) * values[i] + t * values[i + 1];
}

namespace {

GridValue iterate_grid(double lo, double hi, int nodes, double tol,
                       int max_iterations, const ScalarMap& h,
                       const std::function<double(const GridValue&, int)>& update) {
  if (nodes < 2 || !(hi > lo)) throw ConfigError("value grid: bad domain");
  GridValue v;
  v.lo = lo;
  v.hi = hi;
  v.values.resize(nodes);
  for (int i = 0; i < nodes; ++i) v.values[i] = h(v.node(i));
  Eigen::VectorXd next(nodes);
  for (int it = 1; it <= max_iterations; ++it) {
    for (int i = 0; i < nodes; ++i) next[i] = update(v, i);
    v.last_change = (next - v.values).cwiseAbs().maxCoeff();
    v.values.swap(next);
    v.iterations = it;
    if (v.last_change < tol) break;
  }
  return v;
}

}  // namespace

GridValue discounted_value_grid(const ScalarMap& next, const ScalarMap& h,
                                double gamma, double lo, double hi, int nodes,
                                double tol, int max_iterations) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("value grid: gamma must lie in (0, 1)");
  // Successors and heuristic values are fixed per node; precompute them.
  std::vector<double> succ(nodes), hv(nodes);
  for (int i = 0; i < nodes; ++i) {
    const double x = lo + (hi - lo) * i / (nodes - 1);
    succ[i] = next(x);
    hv[i] = h(x);
  }
  return iterate_grid(lo, hi, nodes, tol, max_iterations, h,
                      [&](const GridValue& v, int i) {
                        return dp_target(hv[i], v(succ[i]), gamma);
                      });
}

GridValue multistep_value_grid(const ScalarMap& next, const ScalarMap& h,
                               int unroll, double lo, double hi, int nodes,
                               double tol, int max_iterations) {
  if (unroll < 1) throw ConfigError("value grid: unroll must be >= 1");
  std::vector<double> head(nodes), tail(nodes);
  for (int i = 0; i < nodes; ++i) {
    double x = lo + (hi - lo) * i / (nodes - 1);
    double best = h(x);
    for (int k = 1; k < unroll; ++k) {
      x = next(x);
      best = std::max(best, h(x));
    }
    head[i] = best;
    tail[i] = next(x);
  }
  return iterate_grid(lo, hi, nodes, tol, max_iterations, h,
                      [&](const GridValue& v, int i) {
                        return std::max(head[i], v(tail[i]));
                      });
}

}  // namespace shieldmpc
