#include "shieldmpc/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "shieldmpc/random.hpp"

namespace shieldmpc {
namespace {

constexpr std::uint64_t kNoiseSalt = 0x6e6f697365;
constexpr std::uint64_t kResampleSalt = 0x72627273;

}  // namespace

GaussianPolicy::GaussianPolicy(ControlSequence m, Eigen::VectorXd var)
    : mean(std::move(m)), variance(std::move(var)) {
  validate();
}

void GaussianPolicy::validate() const {
  if (mean.rows() < 1) throw ConfigError("policy horizon must be >= 1");
  if (variance.size() != mean.cols()) {
    throw ConfigError("policy variance has wrong dimension");
  }
  if ((variance.array() <= 0.0).any() || !variance.allFinite()) {
    throw ConfigError("policy variance entries must be positive");
  }
}

double GaussianPolicy::log_density(const ControlSequence& u) const {
  const Eigen::ArrayXd inv = variance.array().inverse();
  const double log_norm =
      -0.5 * (variance.array().log().sum() +
              mean.cols() * std::log(2.0 * std::numbers::pi));
  double total = mean.rows() * log_norm;
  for (Eigen::Index k = 0; k < mean.rows(); ++k) {
    const Eigen::ArrayXd d = (u.row(k) - mean.row(k)).transpose().array();
    total -= 0.5 * (d.square() * inv).sum();
  }
  return total;
}

std::vector<ControlSequence> sample_noise(const GaussianPolicy& policy, int n,
                                          std::uint64_t seed) {
  if (n < 1) throw ConfigError("sample count must be >= 1");
  policy.validate();
  const Eigen::VectorXd sd = policy.variance.cwiseSqrt();
  std::vector<ControlSequence> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    StreamRng rng(seed, kNoiseSalt, static_cast<std::uint64_t>(i));
    ControlSequence eps(policy.horizon(), policy.control_dim());
    for (int k = 0; k < policy.horizon(); ++k) {
      for (int j = 0; j < policy.control_dim(); ++j) eps(k, j) = sd[j] * rng.normal();
    }
    out.push_back(std::move(eps));
  }
  return out;
}

std::vector<ControlSequence> sample_controls(const GaussianPolicy& policy,
                                             int n, std::uint64_t seed,
                                             const Control& lower,
                                             const Control& upper) {
  auto samples = sample_noise(policy, n, seed);
  const bool clamp = lower.size() > 0 && upper.size() > 0;
  for (auto& u : samples) {
    u += policy.mean;
    if (clamp) {
      for (Eigen::Index k = 0; k < u.rows(); ++k) {
        u.row(k) = u.row(k).cwiseMax(lower.transpose()).cwiseMin(upper.transpose());
      }
    }
  }
  return samples;
}

Eigen::VectorXd normalize_weights(const Eigen::VectorXd& weights) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (std::isfinite(weights[i]) && weights[i] > 0.0) total += weights[i];
  }
  if (!(total > 0.0)) throw DegenerateEnsemble();
  Eigen::VectorXd out(weights.size());
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    out[i] = (std::isfinite(weights[i]) && weights[i] > 0.0) ? weights[i] / total : 0.0;
  }
  return out;
}

Eigen::VectorXd WeightedEnsemble::normalized_weights() const {
  return normalize_weights(weights);
}

ControlSequence snis_estimate(const std::vector<ControlSequence>& controls,
                              const Eigen::VectorXd& weights) {
  if (controls.empty() || weights.size() != static_cast<Eigen::Index>(controls.size())) {
    throw ConfigError("snis_estimate: weights and samples disagree in size");
  }
  const Eigen::VectorXd w = normalize_weights(weights);
  ControlSequence v = ControlSequence::Zero(controls[0].rows(), controls[0].cols());
  for (std::size_t i = 0; i < controls.size(); ++i) {
    if (w[i] > 0.0) v += w[i] * controls[i];
  }
  return v;
}

ControlSequence snis_estimate(const WeightedEnsemble& ensemble) {
  return snis_estimate(ensemble.controls, ensemble.weights);
}

namespace {

// exp(-(e_i - min e)), zero where e_i is not finite.
Eigen::VectorXd exp_neg_shifted(const Eigen::VectorXd& exponent) {
  double lo = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < exponent.size(); ++i) {
    if (std::isfinite(exponent[i])) lo = std::min(lo, exponent[i]);
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(exponent.size());
  if (!std::isfinite(lo)) return w;
  for (Eigen::Index i = 0; i < exponent.size(); ++i) {
    if (std::isfinite(exponent[i])) w[i] = std::exp(-(exponent[i] - lo));
  }
  return w;
}

}  // namespace

Eigen::VectorXd mppi_weights(const std::vector<ControlSequence>& controls,
                             const Eigen::VectorXd& costs,
                             const GaussianPolicy& proposal, double lambda,
                             double kappa) {
  if (!(lambda > 0.0)) throw ConfigError("mppi_weights: lambda must be > 0");
  if (costs.size() != static_cast<Eigen::Index>(controls.size())) {
    throw ConfigError("mppi_weights: cost count mismatch");
  }
  const Eigen::RowVectorXd inv = proposal.variance.cwiseInverse().transpose();
  Eigen::VectorXd exponent(costs.size());
  for (std::size_t i = 0; i < controls.size(); ++i) {
    const double cross =
        ((controls[i].array().rowwise() * inv.array()) * proposal.mean.array()).sum();
    exponent[i] = costs[i] / lambda + kappa * cross;
  }
  return exp_neg_shifted(exponent);
}

Eigen::VectorXd vi_weights(const std::vector<ControlSequence>& controls,
                           const Eigen::VectorXd& costs,
                           const GaussianPolicy& prior,
                           const GaussianPolicy& proposal, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("vi_weights: lambda must be > 0");
  Eigen::VectorXd exponent(costs.size());
  for (std::size_t i = 0; i < controls.size(); ++i) {
    exponent[i] = costs[i] / lambda - prior.log_density(controls[i]) +
                  proposal.log_density(controls[i]);
  }
  return exp_neg_shifted(exponent);
}

Eigen::VectorXd cem_weights(const Eigen::VectorXd& costs, int elite_k) {
  const int n = static_cast<int>(costs.size());
  if (elite_k < 1 || elite_k > n) throw ConfigError("cem_weights: elite_k must lie in [1, N]");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  auto key = [&](int i) {
    return std::isnan(costs[i]) ? std::numeric_limits<double>::infinity() : costs[i];
  };
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return key(a) < key(b); });
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < elite_k; ++j) {
    if (std::isfinite(costs[idx[j]])) w[idx[j]] = 1.0;
  }
  return w;
}

WeightedEnsemble rollout_rbr(const Environment& env, const State& x0,
                             const std::vector<ControlSequence>& samples,
                             const SafetySpec& safety, std::uint64_t seed,
                             bool resample) {
  const int n = static_cast<int>(samples.size());
  if (n < 1) throw ConfigError("rollout_rbr: need at least one particle");
  if (safety.kind == SafetySpec::Kind::kBarrier && safety.barrier == nullptr) {
    throw ConfigError("rollout_rbr: barrier safety requires a barrier");
  }
  const int horizon = static_cast<int>(samples[0].rows());
  const int n_x = env.state_dim();
  if (x0.size() != n_x) throw ConfigError("rollout_rbr: x0 has wrong dimension");

  WeightedEnsemble ens;
  ens.controls = samples;
  ens.trajectories.assign(n, Trajectory(horizon + 1, n_x));
  ens.particle_weights.setZero(n, horizon + 1);
  ens.failed.assign(n, 0);
  ens.safe_counts.reserve(horizon);

  Trajectory current(n, n_x);
  Eigen::VectorXd b_prev, b_cur;
  for (int i = 0; i < n; ++i) {
    ens.trajectories[i].row(0) = x0.transpose();
    current.row(i) = x0.transpose();
  }
  const bool use_barrier = safety.kind == SafetySpec::Kind::kBarrier;
  if (use_barrier) b_prev = safety.barrier->evaluate_rows(current);
  const bool safe0 = use_barrier ? !(b_prev[0] > 0.0) : !env.in_avoid_set(x0);
  ens.particle_weights.col(0).setConstant(safe0 ? 1 : 0);

  std::vector<char> unsafe(n);
  std::vector<int> safe_idx, unsafe_idx;
  for (int k = 1; k <= horizon; ++k) {
    for (int i = 0; i < n; ++i) {
      if (!ens.failed[i]) {
        try {
          State xn = env.step(current.row(i).transpose(),
                              ens.controls[i].row(k - 1).transpose());
          current.row(i) = xn.transpose();
        } catch (const DynamicsError&) {
          ens.failed[i] = 1;  // frozen at its last valid state
        }
      }
      ens.trajectories[i].row(k) = current.row(i);
    }

    if (use_barrier) b_cur = safety.barrier->evaluate_rows(current);
    safe_idx.clear();
    unsafe_idx.clear();
    for (int i = 0; i < n; ++i) {
      bool bad = ens.failed[i] != 0;
      if (!bad) {
        if (use_barrier) {
          bad = b_cur[i] > 0.0 ||
                (safety.check_residual &&
                 descent_residual(b_prev[i], b_cur[i], safety.barrier->a()) > 0.0);
        } else {
          bad = env.in_avoid_set(current.row(i).transpose());
        }
      }
      unsafe[i] = bad;
      ens.particle_weights(i, k) = (!bad && ens.particle_weights(i, k - 1)) ? 1 : 0;
      (bad ? unsafe_idx : safe_idx).push_back(i);
    }
    const int n_safe = static_cast<int>(safe_idx.size());
    const int n_unsafe = static_cast<int>(unsafe_idx.size());
    ens.safe_counts.push_back(n_safe);
    if (n_safe == 0) ++ens.degenerate_steps;

    if (resample && k < horizon && n_safe > 0 && n_unsafe > 0) {
      StreamRng rng(seed, kResampleSalt, static_cast<std::uint64_t>(k));
      const double u0 = rng.uniform();
      for (int j = 0; j < n_unsafe; ++j) {
        const int slot = std::min(
            n_safe - 1, static_cast<int>((u0 + j) / n_unsafe * n_safe));
        const int src = safe_idx[slot];
        const int dst = unsafe_idx[j];
        ens.trajectories[dst].topRows(k + 1) = ens.trajectories[src].topRows(k + 1);
        ens.controls[dst].topRows(k) = ens.controls[src].topRows(k);
        ens.particle_weights.row(dst).head(k + 1) = ens.particle_weights.row(src).head(k + 1);
        ens.failed[dst] = ens.failed[src];
        current.row(dst) = current.row(src);
        if (use_barrier) b_cur[dst] = b_cur[src];
        ens.rewires.push_back({k, dst, src});
      }
    }
    if (use_barrier) b_prev.swap(b_cur);
  }
  return ens;
}

double ess(const Eigen::VectorXd& weights, bool* was_normalized) {
  const double total = weights.sum();
  if (was_normalized != nullptr) *was_normalized = std::abs(total - 1.0) <= 1e-12;
  // Same zeroing as normalize_weights, but scaled by the largest weight so
  // uniform and one-hot inputs give exactly N and 1.
  Eigen::VectorXd w = weights.unaryExpr(
      [](double v) { return std::isfinite(v) && v > 0.0 ? v : 0.0; });
  const double top = w.maxCoeff();
  if (!(top > 0.0)) throw DegenerateEnsemble();
  w /= top;
  return w.sum() * w.sum() / w.squaredNorm();
}

}  // namespace shieldmpc
