// Command-line entry point: train, simulate, sweep, check,
// print-effective-config.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "shieldmpc/experiments.hpp"
#include "shieldmpc/scenario.hpp"
#include "shieldmpc/svg_plot.hpp"
#include "shieldmpc/theory.hpp"

namespace fs = std::filesystem;
using namespace shieldmpc;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsageError = 2;

struct CommonFlags {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool need_config) {
  auto* opt = cmd->add_option("--config", f.config, "Scenario config file (JSON)");
  if (need_config) opt->required();
  cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
  cmd->add_option("--seed", f.seed, "Base seed (overrides experiment.seed)");
  cmd->add_option("--trials", f.trials, "Trials per sweep value");
  cmd->add_option("--threads", f.threads, "Worker threads for trials");
}

ScenarioConfig load(const CommonFlags& f) {
  ScenarioConfig cfg = load_scenario(f.config);
  if (f.seed) cfg.experiment.seed = *f.seed;
  if (f.trials) {
    if (*f.trials < 1) throw ConfigError("--trials must be >= 1");
    cfg.experiment.trials = *f.trials;
  }
  if (f.threads) {
    if (*f.threads < 1) throw ConfigError("--threads must be >= 1");
    cfg.experiment.threads = *f.threads;
  }
  return cfg;
}

std::string out_path(const CommonFlags& f, const std::string& name) {
  fs::create_directories(f.out);
  return (fs::path(f.out) / name).string();
}

int cmd_train(const CommonFlags& f, const std::string& model_path) {
  ScenarioConfig cfg = load(f);
  if (f.seed) cfg.training.train.seed = *f.seed;
  const TrainingOutcome t = train_from_config(cfg);
  const std::string model = model_path.empty() ? out_path(f, "model.txt") : model_path;
  if (!model_path.empty() && fs::path(model).has_parent_path()) {
    fs::create_directories(fs::path(model).parent_path());
  }
  t.result.net.save(model);
  write_training_curve(out_path(f, "training_curve.csv"), t.result.epoch_loss);
  std::printf("transitions %d (truncated episodes %d)\n", t.dataset_size, t.truncated_episodes);
  std::printf("final loss %.6g after %ld updates\n", t.result.final_loss(), t.result.updates);
  std::printf("model written to %s\n", model.c_str());
  if (cfg.environment.model == "scalar_oracle") {
    const OracleComparison c = compare_scalar_oracle(t.result.net, cfg);
    std::printf("oracle sup-error %.6g (grid %d nodes, %d iterations)\n", c.sup_error,
                static_cast<int>(c.oracle.values.size()), c.oracle.iterations);
  }
  return kOk;
}

int cmd_simulate(const CommonFlags& f, bool timing) {
  const ScenarioConfig cfg = load(f);
  const auto& ex = cfg.experiment;
  std::ofstream summary(out_path(f, "simulate.csv"));
  summary << "algorithm,seed,crash,collision,finished,steps,mean_velocity,mean_ess,cause\n";
  std::vector<PlotSeries> speed;
  for (const auto& v : ex.variants) {
    const TrialResult r = run_trial(cfg, v, ex.seed, true);
    write_trial_csv(out_path(f, "trial_" + v.label + ".csv"), r);
    double ess_sum = 0.0;
    for (double e : r.ess_trace) ess_sum += e;
    summary << v.label << ',' << ex.seed << ',' << r.crash << ',' << r.collision << ','
            << r.finished << ',' << r.steps << ',' << r.mean_velocity << ','
            << (r.ess_trace.empty() ? 0.0 : ess_sum / r.ess_trace.size()) << ",\"" << r.cause
            << "\"\n";
    std::printf("%-16s crash=%d collision=%d steps=%d v=%.3f %s\n", v.label.c_str(), r.crash,
                r.collision, r.steps, r.mean_velocity, r.cause.c_str());
    PlotSeries s{v.label, {}, {}};
    auto env = make_environment(cfg);
    for (std::size_t k = 0; k < r.path.size(); ++k) {
      s.x.push_back(static_cast<double>(k));
      s.y.push_back(env->speed(r.path[k]));
    }
    speed.push_back(std::move(s));
  }
  write_line_svg(out_path(f, "speed.svg"), "Closed-loop speed", "step", "speed (m/s)", speed);

  const auto hist = ess_histogram(cfg, ex.episode_steps, ex.ess_bins, ex.seed);
  write_ess_csv(out_path(f, "ess_histogram.csv"), hist);
  std::vector<PlotSeries> bars;
  for (const auto& h : hist) bars.push_back({h.label, {}, h.mass});
  write_histogram_svg(out_path(f, "ess_histogram.svg"), "Normalized ESS", bars);

  if (timing) {
    const auto rows = timing_report(cfg, ex.timing_steps, ex.warmup_steps, ex.seed);
    write_timing_csv(out_path(f, "timing.csv"), rows);
    for (const auto& r : rows) {
      std::printf("%-16s %.1f Hz mean, %.1f Hz p95\n", r.label.c_str(), r.mean_hz, r.p95_hz);
    }
  }
  return kOk;
}

int cmd_sweep(const CommonFlags& f) {
  const ScenarioConfig cfg = load(f);
  const SweepSpec spec = sweep_from_config(cfg);
  const auto rows = run_sweep(cfg, spec);
  write_sweep_csv(out_path(f, "sweep.csv"), spec.parameter, rows);
  std::vector<PlotSeries> crash;
  for (const auto& r : rows) {
    auto it = std::find_if(crash.begin(), crash.end(),
                           [&](const PlotSeries& s) { return s.label == r.label; });
    if (it == crash.end()) {
      crash.push_back({r.label, {}, {}});
      it = crash.end() - 1;
    }
    it->x.push_back(r.value);
    it->y.push_back(r.crash_rate);
    std::printf("%s=%g %-16s crash %.3f +- %.3f  collision %.3f +- %.3f  v %.3f\n",
                spec.parameter.c_str(), r.value, r.label.c_str(), r.crash_rate, r.crash_se,
                r.collision_rate, r.collision_se, r.mean_velocity);
  }
  write_line_svg(out_path(f, "sweep.svg"), "Crash rate", spec.parameter, "crash rate", crash);
  return kOk;
}

int cmd_check(const CommonFlags& f) {
  std::uint64_t seed = 1;
  if (!f.config.empty()) seed = load(f).experiment.seed;
  if (f.seed) seed = *f.seed;
  const auto results = theory_checks(seed);
  std::ofstream csv(out_path(f, "check.csv"));
  csv << "check,value,threshold,pass,detail\n";
  bool all = true;
  for (const auto& r : results) {
    all = all && r.pass;
    csv << r.name << ',' << r.value << ',' << r.threshold << ',' << r.pass << ",\"" << r.detail
        << "\"\n";
    std::printf("%-20s %s  value=%.6g threshold=%.6g  (%s)\n", r.name.c_str(),
                r.pass ? "PASS" : "FAIL", r.value, r.threshold, r.detail.c_str());
  }
  return all ? kOk : kCheckFailed;
}

int cmd_print(const CommonFlags& f) {
  const ScenarioConfig cfg = f.config.empty() ? parse_scenario(nlohmann::json::object())
                                              : load(f);
  std::cout << to_json(cfg).dump(2) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sampling-based MPC with learned discrete-time barrier functions"};
  app.require_subcommand(1);

  CommonFlags train_f, sim_f, sweep_f, check_f, print_f;
  std::string model_path;
  bool timing = false;

  auto* train = app.add_subcommand("train", "Train a value-function barrier");
  add_common(train, train_f, true);
  train->add_option("--model", model_path, "Model output path (default <out>/model.txt)");

  auto* sim = app.add_subcommand("simulate", "Run one closed-loop trial per variant");
  add_common(sim, sim_f, true);
  sim->add_flag("--timing", timing, "Also write a control-rate report");

  auto* sweep = app.add_subcommand("sweep", "Run the configured parameter sweep");
  add_common(sweep, sweep_f, true);

  auto* check = app.add_subcommand("check", "Run the statistical and theorem checks");
  add_common(check, check_f, false);

  auto* print = app.add_subcommand("print-effective-config",
                                   "Print the config with all defaults filled in");
  add_common(print, print_f, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*train) return cmd_train(train_f, model_path);
    if (*sim) return cmd_simulate(sim_f, timing);
    if (*sweep) return cmd_sweep(sweep_f);
    if (*check) return cmd_check(check_f);
    if (*print) return cmd_print(print_f);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsageError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsageError;
  }
  return kUsageError;
}
