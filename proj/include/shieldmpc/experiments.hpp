#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "shieldmpc/controller.hpp"
#include "shieldmpc/scenario.hpp"
#include "shieldmpc/valuefn.hpp"

namespace shieldmpc {

struct TrialResult {
  bool crash = false;
  bool collision = false;
  bool finished = false;  // reached the goal (drone)
  int steps = 0;          // control steps survived
  double mean_velocity = 0.0;
  std::vector<double> ess_trace;  // ESS / N per control step
  int fallbacks = 0;              // degenerate ensembles
  double seconds_per_update = 0.0;
  std::string cause;              // why the episode ended early
  std::vector<State> path;        // filled when requested
};

// Everything a trial needs, built once per variant.
struct PreparedVariant {
  std::string label;
  std::shared_ptr<const Environment> env;
  ControllerSpec spec;
  CostSpec cost;
  std::shared_ptr<const BarrierFunction> barrier;
};

PreparedVariant prepare_variant(const ScenarioConfig& cfg,
                                const VariantConfig& variant);

// Seed of trial t in a sweep with the given base seed.
std::uint64_t trial_seed(std::uint64_t base, int t);

// Closed loop from env.initial_state() for `steps` control steps, or until a
// crash or the goal. Fully determined by `seed` except for the timing field.
TrialResult run_trial(const PreparedVariant& prepared, int steps,
                      std::uint64_t seed, bool keep_path = false);
TrialResult run_trial(const ScenarioConfig& cfg, const VariantConfig& variant,
                      std::uint64_t seed, bool keep_path = false);

struct SweepSpec {
  std::string parameter = "none";  // none | target_velocity | horizon | samples
  std::vector<double> values;      // ignored for "none"
  int trials = 1;
  std::uint64_t base_seed = 1;     // trial t uses trial_seed(base_seed, t)
  std::vector<VariantConfig> variants;
  int threads = 1;
};

SweepSpec sweep_from_config(const ScenarioConfig& cfg);

struct SweepRow {
  double value = 0.0;
  std::string label;
  int trials = 0;
  int crashes = 0;
  int collisions = 0;
  int errors = 0;  // trials that ended through a controller/dynamics error
  double crash_rate = 0.0, crash_se = 0.0;
  double collision_rate = 0.0, collision_se = 0.0;
  double mean_velocity = 0.0, velocity_se = 0.0;
  double mean_ess = 0.0;
};

// Copy of cfg with the swept parameter applied.
ScenarioConfig apply_sweep_value(const ScenarioConfig& cfg,
                                 const std::string& parameter, double value,
                                 VariantConfig* variant);

std::vector<SweepRow> run_sweep(const ScenarioConfig& cfg,
                                const SweepSpec& spec);
SweepRow aggregate(double value, const std::string& label,
                   const std::vector<TrialResult>& trials);

// Mass of values in [0, 1] per bin; the top bin includes 1.
std::vector<double> unit_histogram(const std::vector<double>& values, int bins);

struct EssHistogram {
  std::string label;
  std::vector<double> mass;
};
std::vector<EssHistogram> ess_histogram(const ScenarioConfig& cfg, int n_steps,
                                        int bins, std::uint64_t seed);

struct TimingRow {
  std::string label;
  double mean_seconds = 0.0;
  double p95_seconds = 0.0;
  double mean_hz = 0.0;
  double p95_hz = 0.0;  // rate at the 95th-percentile latency
};
// Times controller updates along one closed loop per variant, excluding
// `warmup` leading updates.
std::vector<TimingRow> timing_report(const ScenarioConfig& cfg, int n_steps,
                                     int warmup, std::uint64_t seed);

// Value-function training driven by the config's training section.
struct TrainingOutcome {
  TrainResult result;
  int dataset_size = 0;
  int truncated_episodes = 0;
};
TrainingOutcome train_from_config(const ScenarioConfig& cfg);

// Sup-norm error of the raw network against the grid-iterated discounted
// oracle on the scalar oracle system.
struct OracleComparison {
  double sup_error = 0.0;
  GridValue oracle;
};
OracleComparison compare_scalar_oracle(const Mlp& net,
                                       const ScenarioConfig& cfg);

void write_sweep_csv(const std::string& path, const std::string& parameter,
                     const std::vector<SweepRow>& rows);
void write_trial_csv(const std::string& path, const TrialResult& trial);
void write_ess_csv(const std::string& path,
                   const std::vector<EssHistogram>& hist);
void write_timing_csv(const std::string& path,
                      const std::vector<TimingRow>& rows);

}  // namespace shieldmpc
