#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "shieldmpc/experiments.hpp"
#include "shieldmpc/scenario.hpp"

using namespace shieldmpc;
using nlohmann::json;

#ifndef SHIELDMPC_CONFIG_DIR
#define SHIELDMPC_CONFIG_DIR "configs"
#endif

namespace {

const std::string kConfigs = SHIELDMPC_CONFIG_DIR;

// Vehicle held at the track center regardless of the control.
class FrozenVehicle final : public Environment {
 public:
  std::string name() const override { return "frozen"; }
  int state_dim() const override { return vehicle::kStateDim; }
  int control_dim() const override { return 2; }
  Control lower_bounds() const override { return Control::Constant(2, -1.0); }
  Control upper_bounds() const override { return Control::Constant(2, 1.0); }
  State step(const State& x, const Control&) const override { return x; }
  double avoid_heuristic(const State& x) const override { return h0_track(x, 1.5); }
  double speed(const State& x) const override { return x[vehicle::kVx]; }
  State initial_state() const override {
    return vehicle_rolling_state(4.0, 0.0, 0.0, 0.0, VehicleParams{});
  }
  State sample_state(StreamRng&) const override { return initial_state(); }
  Control backup_action(const State&) const override { return Control::Zero(2); }
};

ScenarioConfig small_vehicle() {
  json j = {{"environment", {{"model", "vehicle"}}},
            {"controller", {{"horizon", 8}, {"samples", 20}}},
            {"experiment", {{"episode_steps", 15}, {"trials", 2}, {"variants", {"mppi"}}}}};
  return parse_scenario(j);
}

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("shipped configs load and round-trip") {
  for (const char* name : {"vehicle.json", "vehicle_rbr.json", "drone.json", "oracle.json"}) {
    CAPTURE(name);
    const ScenarioConfig cfg = load_scenario(kConfigs + "/" + name);
    const json once = to_json(cfg);
    const json twice = to_json(parse_scenario(once, cfg.base_dir));
    CHECK(once == twice);
  }
}

TEST_CASE("unknown keys are rejected with their path") {
  json j = {{"controller", {{"horizonn", 5}}}};
  try {
    parse_scenario(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("horizonn") != std::string::npos);
    CHECK(std::string(e.what()).find("controller") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_scenario(json{{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(parse_scenario(json{{"experiment", {{"trials", 0}}}}), ConfigError);
  CHECK_THROWS_AS(parse_scenario(json{{"barrier", {{"a", 1.5}}}}), ConfigError);
  CHECK_THROWS_AS(parse_scenario(json{{"environment", {{"model", "boat"}}}}), ConfigError);
}

TEST_CASE("missing config file names the path") {
  try {
    load_scenario("/nonexistent/where.json");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/where.json") != std::string::npos);
  }
}

TEST_CASE("relative model paths resolve against the config directory") {
  const ScenarioConfig cfg = load_scenario(kConfigs + "/vehicle.json");
  CHECK(cfg.resolve(cfg.barrier.model) ==
        (std::filesystem::path(kConfigs) / "models/vehicle_value.txt").string());
  CHECK(cfg.resolve("/abs/x") == "/abs/x");
}

TEST_CASE("factories honor the algorithm") {
  const ScenarioConfig cfg = load_scenario(kConfigs + "/vehicle.json");
  auto env = make_environment(cfg);
  CHECK(env->name() == "vehicle");
  CHECK(make_barrier(cfg, Algorithm::kMppi, env) == nullptr);
  const auto heur = make_barrier(cfg, Algorithm::kShieldMppi, env);
  REQUIRE(heur);
  CHECK(heur->source() == BarrierFunction::Source::kHeuristic);
  const auto learned = make_barrier(cfg, Algorithm::kNsMppi, env);
  REQUIRE(learned);
  CHECK(learned->source() == BarrierFunction::Source::kLearned);
  const auto enc = default_encoding(*env);
  REQUIRE(enc.periodic.size() == 1);
  CHECK(enc.periodic[0].first == vehicle::kS);
  CHECK(speed_index(*env) == vehicle::kVx);
}

}  // TEST_SUITE

TEST_SUITE("experiments") {

TEST_CASE("zero-length episode") {
  const ScenarioConfig cfg = small_vehicle();
  auto p = prepare_variant(cfg, cfg.experiment.variants[0]);
  const TrialResult r = run_trial(p, 0, 1);
  CHECK(r.steps == 0);
  CHECK_FALSE(r.crash);
  CHECK_FALSE(r.collision);
}

TEST_CASE("a vehicle frozen at the center never collides") {
  const ScenarioConfig cfg = small_vehicle();
  PreparedVariant p = prepare_variant(cfg, cfg.experiment.variants[0]);
  p.env = std::make_shared<FrozenVehicle>();
  const TrialResult r = run_trial(p, 30, 3);
  CHECK(r.steps == 30);
  CHECK_FALSE(r.collision);
  CHECK_FALSE(r.crash);
  CHECK(r.mean_velocity == doctest::Approx(4.0));
}

TEST_CASE("trials are reproducible") {
  const ScenarioConfig cfg = small_vehicle();
  const auto& v = cfg.experiment.variants[0];
  const TrialResult a = run_trial(cfg, v, 11, true);
  const TrialResult b = run_trial(cfg, v, 11, true);
  CHECK(a.steps == b.steps);
  CHECK(a.crash == b.crash);
  CHECK(a.ess_trace == b.ess_trace);
  REQUIRE(a.path.size() == b.path.size());
  for (std::size_t i = 0; i < a.path.size(); ++i) CHECK(a.path[i] == b.path[i]);
  CHECK(trial_seed(1, 0) != trial_seed(1, 1));
  CHECK(trial_seed(1, 1) != trial_seed(2, 0));
}

TEST_CASE("a one-trial sweep echoes the trial") {
  ScenarioConfig cfg = small_vehicle();
  SweepSpec spec = sweep_from_config(cfg);
  spec.trials = 1;
  const auto rows = run_sweep(cfg, spec);
  REQUIRE(rows.size() == 1);
  const TrialResult t = run_trial(cfg, cfg.experiment.variants[0], trial_seed(spec.base_seed, 0));
  CHECK(rows[0].trials == 1);
  CHECK(rows[0].crashes == (t.crash ? 1 : 0));
  CHECK(rows[0].mean_velocity == t.mean_velocity);
}

TEST_CASE("threaded sweeps match serial ones") {
  ScenarioConfig cfg = small_vehicle();
  SweepSpec spec = sweep_from_config(cfg);
  spec.trials = 3;
  const auto serial = run_sweep(cfg, spec);
  spec.threads = 3;
  const auto threaded = run_sweep(cfg, spec);
  REQUIRE(serial.size() == threaded.size());
  CHECK(serial[0].mean_velocity == threaded[0].mean_velocity);
  CHECK(serial[0].mean_ess == threaded[0].mean_ess);
}

TEST_CASE("aggregate rates and standard errors") {
  std::vector<TrialResult> trials(8);
  for (int i = 0; i < 3; ++i) trials[i].crash = trials[i].collision = true;
  trials[3].collision = true;
  const SweepRow row = aggregate(10.0, "x", trials);
  CHECK(row.crash_rate == doctest::Approx(3.0 / 8.0));
  CHECK(row.collision_rate == doctest::Approx(4.0 / 8.0));
  CHECK(row.crash_se == doctest::Approx(std::sqrt(3.0 / 8 * 5.0 / 8 / 8)));
  CHECK(row.collision_se == doctest::Approx(std::sqrt(0.25 / 8)));
}

TEST_CASE("sweep values apply to the scenario") {
  ScenarioConfig cfg = small_vehicle();
  VariantConfig v = cfg.experiment.variants[0];
  const auto t = apply_sweep_value(cfg, "target_velocity", 8.0, &v);
  CHECK(t.cost.target[vehicle::kVx] == 8.0);
  apply_sweep_value(cfg, "horizon", 6.0, &v);
  CHECK(v.horizon == 6);
  CHECK_THROWS_AS(apply_sweep_value(cfg, "gamma", 1.0, &v), ConfigError);
}

TEST_CASE("unit histogram") {
  const auto top = unit_histogram(std::vector<double>(10, 1.0), 5);
  CHECK(top.back() == doctest::Approx(1.0));
  const auto bottom = unit_histogram(std::vector<double>(10, 0.01), 5);
  CHECK(bottom.front() == doctest::Approx(1.0));
  const auto mixed = unit_histogram({0.0, 0.3, 0.55, 0.99, 1.0, 0.2}, 4);
  double sum = 0.0;
  for (double m : mixed) sum += m;
  CHECK(sum == doctest::Approx(1.0));
}

TEST_CASE("ess histogram masses sum to one") {
  ScenarioConfig cfg = small_vehicle();
  const auto hist = ess_histogram(cfg, 10, 5, 1);
  REQUIRE(hist.size() == 1);
  double sum = 0.0;
  for (double m : hist[0].mass) sum += m;
  CHECK(sum == doctest::Approx(1.0));
}

TEST_CASE("timing rates are positive and monotone in the sample count") {
  ScenarioConfig cfg = small_vehicle();
  cfg.experiment.variants[0].samples = 50;
  VariantConfig big = cfg.experiment.variants[0];
  big.label = "mppi-big";
  big.samples = 400;
  cfg.experiment.variants.push_back(big);
  const auto rows = timing_report(cfg, 12, 2, 1);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].mean_hz > 0.0);
  CHECK(rows[1].mean_hz > 0.0);
  CHECK(rows[1].mean_hz <= rows[0].mean_hz);
}

}  // TEST_SUITE

TEST_SUITE("controller") {

TEST_CASE("near the ceiling block the barrier makes the drone descend") {
  const ScenarioConfig cfg = load_scenario(kConfigs + "/drone.json");
  VariantConfig v;
  v.label = "shield-mppi";
  v.algorithm = Algorithm::kShieldMppi;
  const PreparedVariant on = prepare_variant(cfg, v);
  REQUIRE(on.spec.horizon == 10);
  CostSpec off_cost = on.cost;
  off_cost.cbf = false;
  off_cost.collision = false;
  Controller with(on.env, on.spec, on.cost, on.barrier);
  Controller without(on.env, on.spec, off_cost, nullptr);
  // noise-free closed loops from the corridor start
  auto lowest_before_block = [&](Controller& c) {
    State x = on.env->initial_state();
    double lowest = x[drone::kZ];
    for (int k = 0; k < 120 && x[drone::kX] < 6.0; ++k) {
      x = on.env->step(x, c.step(x).action);
      if (x[drone::kX] > 3.0) lowest = std::min(lowest, x[drone::kZ]);
    }
    return lowest;
  };
  const double z_with = lowest_before_block(with);
  const double z_without = lowest_before_block(without);
  CHECK(z_without == doctest::Approx(1.2).epsilon(0.05));
  CHECK(z_with < z_without - 0.1);
}

}  // TEST_SUITE
