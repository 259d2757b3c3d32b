#include "shieldmpc/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "shieldmpc/random.hpp"

namespace shieldmpc {
namespace {

constexpr std::uint64_t kPlantSalt = 0x706c616e74;
constexpr std::uint64_t kControllerSalt = 0x6374726c;

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

PreparedVariant prepare_variant(const ScenarioConfig& cfg,
                                const VariantConfig& variant) {
  PreparedVariant p;
  p.label = variant.label;
  auto env = make_environment(cfg);
  p.env = env;
  p.spec = make_controller_spec(cfg, variant, *env);
  p.cost = make_cost(cfg, *env, variant.algorithm);
  p.barrier = make_barrier(cfg, variant.algorithm, env);
  return p;
}

std::uint64_t trial_seed(std::uint64_t base, int t) {
  return mix64(base ^ mix64(static_cast<std::uint64_t>(t) + 1));
}

TrialResult run_trial(const PreparedVariant& prepared, int steps,
                      std::uint64_t seed, bool keep_path) {
  if (steps < 0) throw ConfigError("run_trial: steps must be >= 0");
  const Environment& env = *prepared.env;
  ControllerSpec spec = prepared.spec;
  spec.seed = mix64(seed ^ kControllerSalt);
  Controller controller(prepared.env, spec, prepared.cost, prepared.barrier);
  StreamRng plant(seed, kPlantSalt);

  TrialResult r;
  State x = env.initial_state();
  if (keep_path) r.path.push_back(x);
  double speed_sum = 0.0, seconds = 0.0;
  for (int k = 0; k < steps; ++k) {
    if (env.finished(x)) {
      r.finished = true;
      break;
    }
    ControllerOutput out;
    try {
      const auto t0 = std::chrono::steady_clock::now();
      out = controller.step(x);
      seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    } catch (const std::exception& e) {
      r.crash = true;
      r.cause = std::string("controller error: ") + e.what();
      break;
    }
    if (out.fallback) ++r.fallbacks;
    r.ess_trace.push_back(out.fallback ? 0.0 : out.ess / spec.samples);
    try {
      x = env.step_noisy(x, out.action, plant);
    } catch (const DynamicsError& e) {
      r.crash = true;
      r.cause = std::string("dynamics error: ") + e.what();
      break;
    }
    ++r.steps;
    speed_sum += env.speed(x);
    if (keep_path) r.path.push_back(x);
    if (env.collided(x)) r.collision = true;
    if (env.crashed(x)) {
      r.crash = true;
      r.cause = "crash";
      break;
    }
  }
  if (!r.crash && env.finished(x)) r.finished = true;
  // Reaching the crash set passes through the collision band.
  if (r.crash) r.collision = true;
  r.mean_velocity = r.steps > 0 ? speed_sum / r.steps : 0.0;
  r.seconds_per_update = r.ess_trace.empty() ? 0.0 : seconds / r.ess_trace.size();
  return r;
}

TrialResult run_trial(const ScenarioConfig& cfg, const VariantConfig& variant,
                      std::uint64_t seed, bool keep_path) {
  return run_trial(prepare_variant(cfg, variant), cfg.experiment.episode_steps,
                   seed, keep_path);
}

SweepSpec sweep_from_config(const ScenarioConfig& cfg) {
  SweepSpec s;
  s.parameter = cfg.experiment.sweep_parameter;
  s.values = cfg.experiment.sweep_values;
  s.trials = cfg.experiment.trials;
  s.base_seed = cfg.experiment.seed;
  s.variants = cfg.experiment.variants;
  s.threads = cfg.experiment.threads;
  return s;
}

ScenarioConfig apply_sweep_value(const ScenarioConfig& cfg,
                                 const std::string& parameter, double value,
                                 VariantConfig* variant) {
  ScenarioConfig out = cfg;
  if (parameter == "target_velocity") {
    auto env = make_environment(cfg);
    const CostSpec cost = make_cost(cfg, *env, Algorithm::kMppi);
    out.cost.weights.assign(cost.quadratic.weights.data(),
                            cost.quadratic.weights.data() + cost.quadratic.weights.size());
    out.cost.target.assign(cost.quadratic.target.data(),
                           cost.quadratic.target.data() + cost.quadratic.target.size());
    out.cost.target[speed_index(*env)] = value;
  } else if (parameter == "horizon") {
    if (variant) variant->horizon = static_cast<int>(value);
  } else if (parameter == "samples") {
    if (variant) variant->samples = static_cast<int>(value);
  } else if (parameter != "none") {
    throw ConfigError("unknown sweep parameter '" + parameter + "'");
  }
  return out;
}

SweepRow aggregate(double value, const std::string& label,
                   const std::vector<TrialResult>& trials) {
  SweepRow row;
  row.value = value;
  row.label = label;
  row.trials = static_cast<int>(trials.size());
  if (trials.empty()) return row;
  double v_sum = 0.0, v_sq = 0.0, ess_sum = 0.0;
  int ess_n = 0;
  for (const auto& t : trials) {
    row.crashes += t.crash;
    row.collisions += t.collision;
    if (t.cause.rfind("controller error", 0) == 0 || t.cause.rfind("dynamics error", 0) == 0) {
      ++row.errors;
    }
    v_sum += t.mean_velocity;
    v_sq += t.mean_velocity * t.mean_velocity;
    for (double e : t.ess_trace) ess_sum += e;
    ess_n += static_cast<int>(t.ess_trace.size());
  }
  const double n = row.trials;
  row.crash_rate = row.crashes / n;
  row.collision_rate = row.collisions / n;
  row.crash_se = std::sqrt(row.crash_rate * (1.0 - row.crash_rate) / n);
  row.collision_se = std::sqrt(row.collision_rate * (1.0 - row.collision_rate) / n);
  row.mean_velocity = v_sum / n;
  const double var = n > 1 ? std::max(0.0, (v_sq - n * row.mean_velocity * row.mean_velocity) / (n - 1)) : 0.0;
  row.velocity_se = std::sqrt(var / n);
  row.mean_ess = ess_n > 0 ? ess_sum / ess_n : 0.0;
  return row;
}

std::vector<SweepRow> run_sweep(const ScenarioConfig& cfg,
                                const SweepSpec& spec) {
  if (spec.trials < 1) throw ConfigError("sweep: trials must be >= 1");
  std::vector<double> values = spec.values;
  if (spec.parameter == "none") values = {0.0};
  if (values.empty()) throw ConfigError("sweep: value list is empty");

  std::vector<SweepRow> rows;
  for (double value : values) {
    for (const auto& base_variant : spec.variants) {
      VariantConfig variant = base_variant;
      const ScenarioConfig swept = apply_sweep_value(cfg, spec.parameter, value, &variant);
      const PreparedVariant prepared = prepare_variant(swept, variant);
      std::vector<TrialResult> results(spec.trials);
      std::atomic<int> next{0};
      auto worker = [&]() {
        for (int t = next++; t < spec.trials; t = next++) {
          results[t] = run_trial(prepared, swept.experiment.episode_steps,
                                 trial_seed(spec.base_seed, t));
        }
      };
      const int threads = std::max(1, std::min(spec.threads, spec.trials));
      if (threads == 1) {
        worker();
      } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
      }
      rows.push_back(aggregate(value, variant.label, results));
    }
  }
  return rows;
}

std::vector<double> unit_histogram(const std::vector<double>& values, int bins) {
  if (bins < 2) throw ConfigError("histogram: bins must be >= 2");
  std::vector<double> mass(bins, 0.0);
  if (values.empty()) return mass;
  for (double v : values) {
    const int b = std::clamp(static_cast<int>(std::floor(v * bins)), 0, bins - 1);
    mass[b] += 1.0;
  }
  for (double& m : mass) m /= static_cast<double>(values.size());
  return mass;
}

std::vector<EssHistogram> ess_histogram(const ScenarioConfig& cfg, int n_steps,
                                        int bins, std::uint64_t seed) {
  std::vector<EssHistogram> out;
  for (const auto& v : cfg.experiment.variants) {
    const TrialResult r = run_trial(prepare_variant(cfg, v), n_steps, seed);
    out.push_back({v.label, unit_histogram(r.ess_trace, bins)});
  }
  return out;
}

std::vector<TimingRow> timing_report(const ScenarioConfig& cfg, int n_steps,
                                     int warmup, std::uint64_t seed) {
  if (n_steps < 1 || warmup < 0) throw ConfigError("timing: need n_steps >= 1, warmup >= 0");
  std::vector<TimingRow> rows;
  for (const auto& v : cfg.experiment.variants) {
    const PreparedVariant p = prepare_variant(cfg, v);
    ControllerSpec spec = p.spec;
    spec.seed = mix64(seed ^ kControllerSalt);
    Controller controller(p.env, spec, p.cost, p.barrier);
    StreamRng plant(seed, kPlantSalt);
    State x = p.env->initial_state();
    std::vector<double> times;
    for (int k = 0; k < warmup + n_steps; ++k) {
      const auto t0 = std::chrono::steady_clock::now();
      const ControllerOutput out = controller.step(x);
      const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (k >= warmup) times.push_back(dt);
      try {
        const State xn = p.env->step_noisy(x, out.action, plant);
        // Keep timing on a valid state: restart after a crash.
        x = p.env->crashed(xn) || p.env->finished(xn) ? p.env->initial_state() : xn;
      } catch (const DynamicsError&) {
        x = p.env->initial_state();
      }
    }
    TimingRow row;
    row.label = v.label;
    double sum = 0.0;
    for (double t : times) sum += t;
    row.mean_seconds = sum / times.size();
    std::sort(times.begin(), times.end());
    const auto idx = std::min(times.size() - 1,
                              static_cast<std::size_t>(std::ceil(0.95 * times.size())) - 1);
    row.p95_seconds = times[idx];
    row.mean_hz = 1.0 / row.mean_seconds;
    row.p95_hz = 1.0 / row.p95_seconds;
    rows.push_back(row);
  }
  return rows;
}

TrainingOutcome train_from_config(const ScenarioConfig& cfg) {
  std::shared_ptr<const Environment> env = make_environment(cfg);
  const auto& ts = cfg.training;
  const HeuristicFn h = make_heuristic(env, ts.heuristic);

  PolicyFactory factory;
  if (ts.policy == "backup") {
    factory = [env](int) {
      return Policy([env](const State& x) { return env->backup_action(x); });
    };
  } else {
    VariantConfig shield;
    shield.algorithm = Algorithm::kShieldMppi;
    shield.label = "shield-mppi";
    const PreparedVariant p = prepare_variant(cfg, shield);
    factory = [p, &ts](int episode) {
      ControllerSpec spec = p.spec;
      spec.seed = mix64(ts.train.seed ^ static_cast<std::uint64_t>(episode));
      auto controller = std::make_shared<Controller>(p.env, spec, p.cost, p.barrier);
      return Policy([controller](const State& x) { return controller->step(x).action; });
    };
  }

  std::vector<State> extra;
  for (const auto& s : ts.extra_starts) {
    extra.push_back(Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size())));
  }
  const RolloutDataset data = collect_rollouts(*env, factory, h, ts.train.episodes,
                                               ts.train.unroll, ts.train.seed, extra);
  TrainingOutcome out;
  out.dataset_size = data.size();
  out.truncated_episodes = data.truncated_episodes;
  out.result = train(data, ts.train, default_encoding(*env));
  return out;
}

OracleComparison compare_scalar_oracle(const Mlp& net,
                                       const ScenarioConfig& cfg) {
  auto env = make_environment(cfg);
  if (env->name() != "scalar_oracle") {
    throw ConfigError("oracle comparison needs environment.model = scalar_oracle");
  }
  const double lo = cfg.environment.oracle_low, hi = cfg.environment.oracle_high;
  auto next = [&](double x) {
    const State s = State::Constant(1, x);
    return env->step(s, env->backup_action(s))[0];
  };
  auto h = [&](double x) { return env->avoid_heuristic(State::Constant(1, x)); };
  OracleComparison c;
  c.oracle = discounted_value_grid(next, h, cfg.training.train.gamma, lo, hi,
                                   cfg.training.oracle_nodes);
  const int n = static_cast<int>(c.oracle.values.size());
  Eigen::MatrixXd xs(1, n);
  for (int i = 0; i < n; ++i) xs(0, i) = c.oracle.node(i);
  const Eigen::VectorXd v = net.evaluate_batch(xs);
  c.sup_error = (v - c.oracle.values).cwiseAbs().maxCoeff();
  return c;
}

void write_sweep_csv(const std::string& path, const std::string& parameter,
                     const std::vector<SweepRow>& rows) {
  auto out = open_csv(path);
  out << parameter << ",algorithm,trials,crashes,collisions,errors,crash_rate,crash_se,"
         "collision_rate,collision_se,mean_velocity,velocity_se,mean_ess\n";
  for (const auto& r : rows) {
    out << num(r.value) << ',' << r.label << ',' << r.trials << ',' << r.crashes << ','
        << r.collisions << ',' << r.errors << ',' << num(r.crash_rate) << ','
        << num(r.crash_se) << ',' << num(r.collision_rate) << ',' << num(r.collision_se)
        << ',' << num(r.mean_velocity) << ',' << num(r.velocity_se) << ','
        << num(r.mean_ess) << '\n';
  }
}

void write_trial_csv(const std::string& path, const TrialResult& trial) {
  auto out = open_csv(path);
  out << "step,ess";
  const int n_x = trial.path.empty() ? 0 : static_cast<int>(trial.path[0].size());
  for (int i = 0; i < n_x; ++i) out << ",x" << i;
  out << '\n';
  for (std::size_t k = 0; k < trial.path.size(); ++k) {
    out << k << ',' << (k > 0 && k - 1 < trial.ess_trace.size() ? num(trial.ess_trace[k - 1]) : "");
    for (int i = 0; i < n_x; ++i) out << ',' << num(trial.path[k][i]);
    out << '\n';
  }
}

void write_ess_csv(const std::string& path,
                   const std::vector<EssHistogram>& hist) {
  auto out = open_csv(path);
  out << "algorithm,bin_low,bin_high,mass\n";
  for (const auto& h : hist) {
    const int bins = static_cast<int>(h.mass.size());
    for (int b = 0; b < bins; ++b) {
      out << h.label << ',' << num(static_cast<double>(b) / bins) << ','
          << num(static_cast<double>(b + 1) / bins) << ',' << num(h.mass[b]) << '\n';
    }
  }
}

void write_timing_csv(const std::string& path,
                      const std::vector<TimingRow>& rows) {
  auto out = open_csv(path);
  out << "algorithm,mean_seconds,p95_seconds,mean_hz,p95_hz\n";
  for (const auto& r : rows) {
    out << r.label << ',' << num(r.mean_seconds) << ',' << num(r.p95_seconds) << ','
        << num(r.mean_hz) << ',' << num(r.p95_hz) << '\n';
  }
}

}  // namespace shieldmpc
