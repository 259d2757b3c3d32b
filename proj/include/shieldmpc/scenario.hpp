#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "shieldmpc/controller.hpp"
#include "shieldmpc/cost.hpp"
#include "shieldmpc/environment.hpp"
#include "shieldmpc/valuefn.hpp"

namespace shieldmpc {

struct EnvironmentConfig {
  std::string model = "vehicle";  // vehicle | drone | double_integrator | scalar_oracle

  VehicleParams vehicle;
  std::vector<TrackGeometry::Segment> track;  // empty: synthetic default track
  double half_width = 1.5;
  double crash_width = 1.8;
  std::vector<TrackObstacle> obstacles;
  double start_speed = 5.0;
  double crawl_speed = 3.0;

  DroneParams drone;
  DroneCorridor corridor;

  double di_dt = 0.1, di_u_max = 1.0, di_limit = 1.0;
  double oracle_low = -2.0, oracle_high = 2.0;

  std::vector<double> disturbance_std;  // empty: no disturbance
};

// One controller configuration under test, layered over the shared
// controller section.
struct VariantConfig {
  std::string label;
  Algorithm algorithm = Algorithm::kMppi;
  std::optional<bool> rbr;
  std::optional<int> samples;
  std::optional<int> horizon;
};

struct CostConfig {
  std::vector<double> weights;  // empty: model default
  std::vector<double> target;   // empty: model default
  double collision_weight = 1e4;
  double cbf_weight = 1e3;
  PenaltyMode mode = PenaltyMode::kHinge;
  bool adversarial = false;
};

struct BarrierConfig {
  HeuristicKind heuristic = HeuristicKind::kModified;
  std::string model;  // learned network file for ns-mppi
  double a = 0.1;
};

struct TrainingSection {
  TrainConfig train;
  std::string policy = "backup";  // backup | shield-mppi
  HeuristicKind heuristic = HeuristicKind::kModified;
  std::vector<std::vector<double>> extra_starts;
  int oracle_nodes = 801;  // grid size for the scalar oracle check
};

struct ExperimentConfig {
  int episode_steps = 400;
  int trials = 20;
  std::uint64_t seed = 1;
  std::vector<VariantConfig> variants;
  std::string sweep_parameter = "none";  // none | target_velocity | horizon | samples
  std::vector<double> sweep_values;
  int warmup_steps = 5;
  int timing_steps = 50;
  int ess_bins = 10;
  int threads = 1;
};

struct ScenarioConfig {
  EnvironmentConfig environment;
  ControllerSpec controller;
  CostConfig cost;
  BarrierConfig barrier;
  TrainingSection training;
  ExperimentConfig experiment;
  std::string base_dir = ".";  // relative paths resolve against this

  std::string resolve(const std::string& path) const;
};

// Parses the JSON scenario format; unknown keys and invalid values raise
// ConfigError naming the offending key path.
ScenarioConfig parse_scenario(const nlohmann::json& j,
                              const std::string& base_dir = ".");
ScenarioConfig load_scenario(const std::string& path);
// Effective configuration with every default filled in.
nlohmann::json to_json(const ScenarioConfig& cfg);

std::shared_ptr<Environment> make_environment(const ScenarioConfig& cfg);
CostSpec make_cost(const ScenarioConfig& cfg, const Environment& env,
                   Algorithm algorithm);
ControllerSpec make_controller_spec(const ScenarioConfig& cfg,
                                    const VariantConfig& variant,
                                    const Environment& env);
// Heuristic barrier for shield-mppi, the learned one (from barrier.model)
// for ns-mppi, none for the rest.
std::shared_ptr<const BarrierFunction> make_barrier(
    const ScenarioConfig& cfg, Algorithm algorithm,
    std::shared_ptr<const Environment> env);

// Network input encoding for an environment (arclength is periodic on the
// track).
InputEncoding default_encoding(const Environment& env);

// Index of the forward-velocity coordinate targeted by the cost.
int speed_index(const Environment& env);

HeuristicKind parse_heuristic(const std::string& name);
std::string to_string(HeuristicKind kind);

}  // namespace shieldmpc
