#include "shieldmpc/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "shieldmpc/cbf.hpp"
#include "shieldmpc/mlp.hpp"

namespace shieldmpc {

using nlohmann::json;

namespace {

// Reads keys from one JSON object and rejects any it was not asked about.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        throw ConfigError(path_ + ": unknown key '" + item.key() + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

PenaltyMode parse_penalty_mode(const std::string& s) {
  if (s == "indicator") return PenaltyMode::kIndicator;
  if (s == "hinge") return PenaltyMode::kHinge;
  if (s == "both") return PenaltyMode::kBoth;
  throw ConfigError("cost.penalty_mode: expected indicator, hinge or both, got '" + s + "'");
}

std::string to_string(PenaltyMode m) {
  switch (m) {
    case PenaltyMode::kIndicator: return "indicator";
    case PenaltyMode::kHinge: return "hinge";
    case PenaltyMode::kBoth: return "both";
  }
  return "hinge";
}

RbrPredicate parse_predicate(const std::string& s) {
  if (s == "avoid_set") return RbrPredicate::kAvoidSet;
  if (s == "barrier") return RbrPredicate::kBarrier;
  if (s == "barrier_residual") return RbrPredicate::kBarrierResidual;
  throw ConfigError("controller.rbr_predicate: expected avoid_set, barrier or barrier_residual");
}

std::string to_string(RbrPredicate p) {
  switch (p) {
    case RbrPredicate::kAvoidSet: return "avoid_set";
    case RbrPredicate::kBarrier: return "barrier";
    case RbrPredicate::kBarrierResidual: return "barrier_residual";
  }
  return "barrier_residual";
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

void parse_environment(const json& j, EnvironmentConfig& e) {
  Section s(j, "environment");
  s.read("model", e.model);
  if (e.model != "vehicle" && e.model != "drone" && e.model != "double_integrator" &&
      e.model != "scalar_oracle") {
    throw ConfigError("environment.model: unknown model '" + e.model + "'");
  }
  if (const json* v = s.child("vehicle")) {
    Section p(*v, "environment.vehicle");
    auto& q = e.vehicle;
    p.read("mass", q.mass);
    p.read("yaw_inertia", q.yaw_inertia);
    p.read("l_front", q.l_front);
    p.read("l_rear", q.l_rear);
    p.read("front_wheel_inertia", q.front_wheel_inertia);
    p.read("front_wheel_radius", q.front_wheel_radius);
    p.read("tire_b", q.tire_b);
    p.read("tire_c", q.tire_c);
    p.read("tire_d", q.tire_d);
    p.read("gravity", q.gravity);
    p.read("dt", q.dt);
    p.read("rear_wheel_inertia", q.rear_wheel_inertia);
    p.read("rear_wheel_radius", q.rear_wheel_radius);
    p.read("torque_gain", q.torque_gain);
    p.read("wheel_drag", q.wheel_drag);
    p.read("drivetrain_scale", q.drivetrain_scale);
    p.read("slip_speed_floor", q.slip_speed_floor);
    p.read("chart_guard", q.chart_guard);
    p.read("steer_max", q.steer_max);
    p.finish();
  }
  if (const json* t = s.child("track")) {
    Section p(*t, "environment.track");
    std::vector<std::vector<double>> segs;
    p.read("segments", segs);
    e.track.clear();
    for (const auto& seg : segs) {
      if (seg.size() != 2) throw ConfigError("environment.track.segments: entries are [length, curvature]");
      e.track.push_back({seg[0], seg[1]});
    }
    p.read("half_width", e.half_width);
    p.read("crash_width", e.crash_width);
    std::vector<std::vector<double>> obs;
    p.read("obstacles", obs);
    e.obstacles.clear();
    for (const auto& o : obs) {
      if (o.size() != 3) throw ConfigError("environment.track.obstacles: entries are [s, e_y, radius]");
      e.obstacles.push_back({o[0], o[1], o[2]});
    }
    p.read("start_speed", e.start_speed);
    p.read("crawl_speed", e.crawl_speed);
    p.finish();
  }
  if (const json* d = s.child("drone")) {
    Section p(*d, "environment.drone");
    auto& q = e.drone;
    p.read("mass", q.mass);
    p.read("inertia", q.inertia);
    p.read("arm", q.arm);
    p.read("rotor_radius", q.rotor_radius);
    p.read("ground_effect", q.ground_effect);
    p.read("gravity", q.gravity);
    p.read("dt", q.dt);
    p.read("thrust_max", q.thrust_max);
    p.finish();
  }
  if (const json* c = s.child("corridor")) {
    Section p(*c, "environment.corridor");
    auto& q = e.corridor;
    p.read("ground_z", q.ground_z);
    p.read("body_radius", q.body_radius);
    p.read("goal_x", q.goal_x);
    std::vector<std::vector<double>> boxes;
    bool have_boxes = p.child("obstacles") != nullptr;
    p.read("obstacles", boxes);
    if (have_boxes) {
      q.obstacles.clear();
      for (const auto& b : boxes) {
        if (b.size() != 4) throw ConfigError("environment.corridor.obstacles: entries are [x_min, x_max, z_min, z_max]");
        q.obstacles.push_back({b[0], b[1], b[2], b[3]});
      }
    }
    std::vector<double> start = to_std(q.start);
    p.read("start", start);
    if (start.size() != drone::kStateDim) throw ConfigError("environment.corridor.start: expected 6 entries");
    q.start = to_vector(start);
    p.finish();
  }
  if (const json* d = s.child("double_integrator")) {
    Section p(*d, "environment.double_integrator");
    p.read("dt", e.di_dt);
    p.read("u_max", e.di_u_max);
    p.read("limit", e.di_limit);
    p.finish();
  }
  if (const json* d = s.child("scalar_oracle")) {
    Section p(*d, "environment.scalar_oracle");
    p.read("sample_low", e.oracle_low);
    p.read("sample_high", e.oracle_high);
    p.finish();
  }
  s.read("disturbance_std", e.disturbance_std);
  s.finish();
}

VariantConfig parse_variant(const json& j, const std::string& path) {
  VariantConfig v;
  if (j.is_string()) {
    v.algorithm = parse_algorithm(j.get<std::string>());
    v.label = j.get<std::string>();
    return v;
  }
  Section s(j, path);
  std::string algo = "mppi";
  s.read("algorithm", algo);
  v.algorithm = parse_algorithm(algo);
  v.label = to_string(v.algorithm);
  s.read("label", v.label);
  if (const json* r = s.child("rbr")) v.rbr = r->get<bool>();
  if (const json* n = s.child("samples")) v.samples = n->get<int>();
  if (const json* k = s.child("horizon")) v.horizon = k->get<int>();
  s.finish();
  return v;
}

json variant_json(const VariantConfig& v) {
  json j{{"label", v.label}, {"algorithm", to_string(v.algorithm)}};
  if (v.rbr) j["rbr"] = *v.rbr;
  if (v.samples) j["samples"] = *v.samples;
  if (v.horizon) j["horizon"] = *v.horizon;
  return j;
}

// Model-dependent defaults applied before the controller section is read.
void apply_model_defaults(ScenarioConfig& cfg) {
  auto& c = cfg.controller;
  const auto& model = cfg.environment.model;
  if (model == "vehicle") {
    c.noise_std = Eigen::Vector2d(0.15, 0.5);
    c.nominal = Eigen::Vector2d(0.0, 0.0);
  } else if (model == "drone") {
    const double hover = 0.5 * cfg.environment.drone.mass * cfg.environment.drone.gravity;
    c.noise_std = Eigen::Vector2d(0.5, 0.5);
    c.nominal = Eigen::Vector2d(hover, hover);
    c.horizon = 10;
  } else {
    c.noise_std = Eigen::VectorXd::Constant(1, 0.5);
    c.nominal = Eigen::VectorXd::Zero(1);
  }
}

}  // namespace

HeuristicKind parse_heuristic(const std::string& name) {
  if (name == "base") return HeuristicKind::kBase;
  if (name == "modified") return HeuristicKind::kModified;
  throw ConfigError("heuristic: expected base or modified, got '" + name + "'");
}

std::string to_string(HeuristicKind kind) {
  return kind == HeuristicKind::kBase ? "base" : "modified";
}

std::string ScenarioConfig::resolve(const std::string& path) const {
  if (path.empty()) return path;
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

ScenarioConfig parse_scenario(const json& j, const std::string& base_dir) {
  ScenarioConfig cfg;
  cfg.base_dir = base_dir;
  Section root(j, "config");

  if (const json* e = root.child("environment")) parse_environment(*e, cfg.environment);
  apply_model_defaults(cfg);

  if (const json* c = root.child("controller")) {
    Section s(*c, "controller");
    auto& spec = cfg.controller;
    std::string algo = to_string(spec.algorithm);
    s.read("algorithm", algo);
    spec.algorithm = parse_algorithm(algo);
    s.read("rbr", spec.rbr);
    std::string pred = to_string(spec.rbr_predicate);
    s.read("rbr_predicate", pred);
    spec.rbr_predicate = parse_predicate(pred);
    s.read("horizon", spec.horizon);
    s.read("samples", spec.samples);
    s.read("cem_elite_k", spec.cem_elite_k);
    s.read("lambda", spec.lambda);
    s.read("control_cost_weight", spec.control_cost_weight);
    std::vector<double> noise = to_std(spec.noise_std), nominal = to_std(spec.nominal);
    s.read("noise_std", noise);
    s.read("nominal", nominal);
    spec.noise_std = to_vector(noise);
    spec.nominal = to_vector(nominal);
    s.read("zero_fill_tail", spec.zero_fill_tail);
    s.finish();
  }

  if (const json* c = root.child("cost")) {
    Section s(*c, "cost");
    s.read("weights", cfg.cost.weights);
    s.read("target", cfg.cost.target);
    s.read("collision_weight", cfg.cost.collision_weight);
    s.read("cbf_weight", cfg.cost.cbf_weight);
    std::string mode = to_string(cfg.cost.mode);
    s.read("penalty_mode", mode);
    cfg.cost.mode = parse_penalty_mode(mode);
    s.read("adversarial", cfg.cost.adversarial);
    s.finish();
  }

  if (const json* b = root.child("barrier")) {
    Section s(*b, "barrier");
    std::string h = to_string(cfg.barrier.heuristic);
    s.read("heuristic", h);
    cfg.barrier.heuristic = parse_heuristic(h);
    s.read("model", cfg.barrier.model);
    s.read("a", cfg.barrier.a);
    s.finish();
    if (!(cfg.barrier.a > 0.0 && cfg.barrier.a < 1.0)) {
      throw ConfigError("barrier.a: must lie in (0, 1)");
    }
  }

  if (const json* t = root.child("training")) {
    Section s(*t, "training");
    auto& tc = cfg.training.train;
    s.read("gamma", tc.gamma);
    s.read("unroll", tc.unroll);
    s.read("episodes", tc.episodes);
    s.read("learning_rate", tc.learning_rate);
    s.read("batch_size", tc.batch_size);
    s.read("epochs", tc.epochs);
    s.read("target_refresh", tc.target_refresh);
    s.read("hidden", tc.hidden);
    s.read("seed", tc.seed);
    s.read("policy", cfg.training.policy);
    if (cfg.training.policy != "backup" && cfg.training.policy != "shield-mppi") {
      throw ConfigError("training.policy: expected backup or shield-mppi");
    }
    std::string h = to_string(cfg.training.heuristic);
    s.read("heuristic", h);
    cfg.training.heuristic = parse_heuristic(h);
    s.read("extra_starts", cfg.training.extra_starts);
    s.read("oracle_nodes", cfg.training.oracle_nodes);
    s.finish();
    tc.validate();
  }

  if (const json* x = root.child("experiment")) {
    Section s(*x, "experiment");
    auto& ex = cfg.experiment;
    s.read("episode_steps", ex.episode_steps);
    s.read("trials", ex.trials);
    s.read("seed", ex.seed);
    if (const json* v = s.child("variants")) {
      if (!v->is_array()) throw ConfigError("experiment.variants: expected an array");
      ex.variants.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        ex.variants.push_back(parse_variant((*v)[i], "experiment.variants[" + std::to_string(i) + "]"));
      }
    }
    s.read("sweep_parameter", ex.sweep_parameter);
    s.read("sweep_values", ex.sweep_values);
    s.read("warmup_steps", ex.warmup_steps);
    s.read("timing_steps", ex.timing_steps);
    s.read("ess_bins", ex.ess_bins);
    s.read("threads", ex.threads);
    s.finish();
  }
  root.finish();

  auto& ex = cfg.experiment;
  if (ex.episode_steps < 0) throw ConfigError("experiment.episode_steps: must be >= 0");
  if (ex.trials < 1) throw ConfigError("experiment.trials: must be >= 1");
  if (ex.ess_bins < 2) throw ConfigError("experiment.ess_bins: must be >= 2");
  if (ex.threads < 1) throw ConfigError("experiment.threads: must be >= 1");
  if (ex.warmup_steps < 0 || ex.timing_steps < 1) {
    throw ConfigError("experiment: warmup_steps >= 0 and timing_steps >= 1 required");
  }
  const auto& sp = ex.sweep_parameter;
  if (sp != "none" && sp != "target_velocity" && sp != "horizon" && sp != "samples") {
    throw ConfigError("experiment.sweep_parameter: expected none, target_velocity, horizon or samples");
  }
  if (ex.variants.empty()) {
    VariantConfig v;
    v.algorithm = cfg.controller.algorithm;
    v.label = to_string(v.algorithm);
    ex.variants.push_back(v);
  }
  // Validate the full assembly once so errors surface at load time.
  auto env = make_environment(cfg);
  for (const auto& v : ex.variants) make_controller_spec(cfg, v, *env);
  make_cost(cfg, *env, cfg.controller.algorithm);
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  const auto dir = std::filesystem::path(path).parent_path().string();
  try {
    return parse_scenario(j, dir.empty() ? "." : dir);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

json to_json(const ScenarioConfig& cfg) {
  const auto& e = cfg.environment;
  json env;
  env["model"] = e.model;
  const auto& v = e.vehicle;
  env["vehicle"] = {{"mass", v.mass}, {"yaw_inertia", v.yaw_inertia}, {"l_front", v.l_front},
                    {"l_rear", v.l_rear}, {"front_wheel_inertia", v.front_wheel_inertia},
                    {"front_wheel_radius", v.front_wheel_radius}, {"tire_b", v.tire_b},
                    {"tire_c", v.tire_c}, {"tire_d", v.tire_d}, {"gravity", v.gravity},
                    {"dt", v.dt}, {"rear_wheel_inertia", v.rear_wheel_inertia},
                    {"rear_wheel_radius", v.rear_wheel_radius}, {"torque_gain", v.torque_gain},
                    {"wheel_drag", v.wheel_drag}, {"drivetrain_scale", v.drivetrain_scale},
                    {"slip_speed_floor", v.slip_speed_floor}, {"chart_guard", v.chart_guard},
                    {"steer_max", v.steer_max}};
  json segs = json::array(), obs = json::array();
  for (const auto& s : e.track) segs.push_back({s.length, s.curvature});
  for (const auto& o : e.obstacles) obs.push_back({o.s, o.e_y, o.radius});
  env["track"] = {{"segments", segs}, {"half_width", e.half_width},
                  {"crash_width", e.crash_width}, {"obstacles", obs},
                  {"start_speed", e.start_speed}, {"crawl_speed", e.crawl_speed}};
  const auto& d = e.drone;
  env["drone"] = {{"mass", d.mass}, {"inertia", d.inertia}, {"arm", d.arm},
                  {"rotor_radius", d.rotor_radius}, {"ground_effect", d.ground_effect},
                  {"gravity", d.gravity}, {"dt", d.dt}, {"thrust_max", d.thrust_max}};
  json boxes = json::array();
  for (const auto& b : e.corridor.obstacles) boxes.push_back({b.x_min, b.x_max, b.z_min, b.z_max});
  env["corridor"] = {{"ground_z", e.corridor.ground_z}, {"body_radius", e.corridor.body_radius},
                     {"goal_x", e.corridor.goal_x}, {"obstacles", boxes},
                     {"start", to_std(e.corridor.start)}};
  env["double_integrator"] = {{"dt", e.di_dt}, {"u_max", e.di_u_max}, {"limit", e.di_limit}};
  env["scalar_oracle"] = {{"sample_low", e.oracle_low}, {"sample_high", e.oracle_high}};
  env["disturbance_std"] = e.disturbance_std;

  const auto& c = cfg.controller;
  json ctrl = {{"algorithm", to_string(c.algorithm)}, {"rbr", c.rbr},
               {"rbr_predicate", to_string(c.rbr_predicate)}, {"horizon", c.horizon},
               {"samples", c.samples}, {"cem_elite_k", c.cem_elite_k}, {"lambda", c.lambda},
               {"control_cost_weight", c.control_cost_weight},
               {"noise_std", to_std(c.noise_std)}, {"nominal", to_std(c.nominal)},
               {"zero_fill_tail", c.zero_fill_tail}};

  auto env_ptr = make_environment(cfg);
  const CostSpec cs = make_cost(cfg, *env_ptr, c.algorithm);
  json cost = {{"weights", to_std(cs.quadratic.weights)}, {"target", to_std(cs.quadratic.target)},
               {"collision_weight", cfg.cost.collision_weight}, {"cbf_weight", cfg.cost.cbf_weight},
               {"penalty_mode", to_string(cfg.cost.mode)}, {"adversarial", cfg.cost.adversarial}};

  json barrier = {{"heuristic", to_string(cfg.barrier.heuristic)},
                  {"model", cfg.barrier.model}, {"a", cfg.barrier.a}};

  const auto& t = cfg.training.train;
  json training = {{"gamma", t.gamma}, {"unroll", t.unroll}, {"episodes", t.episodes},
                   {"learning_rate", t.learning_rate}, {"batch_size", t.batch_size},
                   {"epochs", t.epochs}, {"target_refresh", t.target_refresh},
                   {"hidden", t.hidden}, {"seed", t.seed}, {"policy", cfg.training.policy},
                   {"heuristic", to_string(cfg.training.heuristic)},
                   {"extra_starts", cfg.training.extra_starts},
                   {"oracle_nodes", cfg.training.oracle_nodes}};

  const auto& x = cfg.experiment;
  json variants = json::array();
  for (const auto& var : x.variants) variants.push_back(variant_json(var));
  json experiment = {{"episode_steps", x.episode_steps}, {"trials", x.trials}, {"seed", x.seed},
                     {"variants", variants}, {"sweep_parameter", x.sweep_parameter},
                     {"sweep_values", x.sweep_values}, {"warmup_steps", x.warmup_steps},
                     {"timing_steps", x.timing_steps}, {"ess_bins", x.ess_bins},
                     {"threads", x.threads}};

  return {{"environment", env}, {"controller", ctrl}, {"cost", cost}, {"barrier", barrier},
          {"training", training}, {"experiment", experiment}};
}

std::shared_ptr<Environment> make_environment(const ScenarioConfig& cfg) {
  const auto& e = cfg.environment;
  std::shared_ptr<Environment> env;
  if (e.model == "vehicle") {
    TrackGeometry track = e.track.empty()
                              ? TrackGeometry::default_track(e.half_width, e.crash_width)
                              : TrackGeometry(e.track, e.half_width, e.crash_width);
    env = std::make_shared<VehicleEnv>(e.vehicle, std::move(track), e.obstacles,
                                       e.start_speed, e.crawl_speed);
  } else if (e.model == "drone") {
    env = std::make_shared<DroneEnv>(e.drone, e.corridor);
  } else if (e.model == "double_integrator") {
    env = std::make_shared<DoubleIntegratorEnv>(e.di_dt, e.di_u_max, e.di_limit);
  } else if (e.model == "scalar_oracle") {
    env = std::make_shared<ScalarOracleEnv>(e.oracle_low, e.oracle_high);
  } else {
    throw ConfigError("environment.model: unknown model '" + e.model + "'");
  }
  if (!e.disturbance_std.empty()) {
    if (static_cast<int>(e.disturbance_std.size()) != env->state_dim()) {
      throw ConfigError("environment.disturbance_std: need one entry per state dimension");
    }
    env->set_disturbance_std(to_vector(e.disturbance_std));
  }
  return env;
}

int speed_index(const Environment& env) {
  if (env.name() == "drone") return drone::kVx;
  if (env.name() == "vehicle") return vehicle::kVx;
  return 0;
}

CostSpec make_cost(const ScenarioConfig& cfg, const Environment& env,
                   Algorithm algorithm) {
  const int n = env.state_dim();
  Eigen::VectorXd w, target;
  if (env.name() == "vehicle") {
    w = Eigen::VectorXd::Zero(n);
    w[vehicle::kVx] = 1.0;
    w[vehicle::kEpsi] = 2.0;
    w[vehicle::kEy] = 0.5;
    target = State::Zero(n);
    target[vehicle::kVx] = 10.0;
  } else if (env.name() == "drone") {
    w = (Eigen::VectorXd(6) << 0.0, 2.0, 1.0, 0.1, 0.5, 0.05).finished();
    target = (State(6) << 0.0, 1.2, 3.0, 0.0, 0.0, 0.0).finished();
  } else {
    w = Eigen::VectorXd::Ones(n);
    target = State::Zero(n);
  }
  if (!cfg.cost.weights.empty()) w = to_vector(cfg.cost.weights);
  if (!cfg.cost.target.empty()) target = to_vector(cfg.cost.target);

  CostSpec spec;
  spec.quadratic = {w, target};
  spec.quadratic.validate(n);
  spec.penalty.collision_weight = cfg.cost.collision_weight;
  spec.penalty.cbf_weight = cfg.cost.cbf_weight;
  spec.penalty.mode = cfg.cost.mode;
  spec.penalty.validate();
  spec.adversarial = cfg.cost.adversarial;
  return default_cost_terms(algorithm, spec);
}

ControllerSpec make_controller_spec(const ScenarioConfig& cfg,
                                    const VariantConfig& variant,
                                    const Environment& env) {
  ControllerSpec spec = cfg.controller;
  spec.algorithm = variant.algorithm;
  spec.rbr = variant.rbr.value_or(variant.algorithm == Algorithm::kNsMppi);
  if (variant.samples) spec.samples = *variant.samples;
  if (variant.horizon) spec.horizon = *variant.horizon;
  spec.cem_elite_k = std::min(spec.cem_elite_k, spec.samples);
  spec.validate(env.control_dim());
  return spec;
}

std::shared_ptr<const BarrierFunction> make_barrier(
    const ScenarioConfig& cfg, Algorithm algorithm,
    std::shared_ptr<const Environment> env) {
  if (algorithm == Algorithm::kShieldMppi) {
    return std::make_shared<BarrierFunction>(
        make_heuristic_barrier(env, cfg.barrier.heuristic, cfg.barrier.a));
  }
  if (algorithm == Algorithm::kNsMppi) {
    if (cfg.barrier.model.empty()) {
      throw ConfigError("barrier.model: ns-mppi needs a trained value-function model");
    }
    auto net = std::make_shared<const Mlp>(Mlp::load(cfg.resolve(cfg.barrier.model)));
    if (net->state_dim() != env->state_dim()) {
      throw ConfigError("barrier.model: network input does not match the environment");
    }
    return std::make_shared<BarrierFunction>(
        as_barrier(net, make_heuristic(env, cfg.training.heuristic), cfg.barrier.a));
  }
  return nullptr;
}

InputEncoding default_encoding(const Environment& env) {
  InputEncoding enc;
  enc.state_dim = env.state_dim();
  if (const auto* v = dynamic_cast<const VehicleEnv*>(&env)) {
    enc.periodic.emplace_back(vehicle::kS, v->track().total_length());
  }
  return enc;
}

}  // namespace shieldmpc
