#include "shieldmpc/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace shieldmpc {

void Environment::set_disturbance_std(Eigen::VectorXd std_dev) {
  if (std_dev.size() != 0 && std_dev.size() != state_dim()) {
    throw ConfigError("disturbance std must have one entry per state");
  }
  if ((std_dev.array() < 0.0).any()) {
    throw ConfigError("disturbance std must be non-negative");
  }
  disturbance_std_ = std::move(std_dev);
}

Control Environment::clamp(const Control& u) const {
  return u.cwiseMax(lower_bounds()).cwiseMin(upper_bounds());
}

State Environment::step_noisy(const State& x, const Control& u,
                              StreamRng& rng) const {
  State next = step(x, u);
  for (Eigen::Index i = 0; i < disturbance_std_.size(); ++i) {
    if (disturbance_std_[i] > 0.0) next[i] += disturbance_std_[i] * rng.normal();
  }
  return next;
}

Trajectory rollout(const Environment& env, const State& x0,
                   const ControlSequence& u_seq) {
  const auto horizon = u_seq.rows();
  if (horizon < 1) throw ConfigError("rollout: control sequence is empty");
  Trajectory traj(horizon + 1, env.state_dim());
  traj.row(0) = x0.transpose();
  State x = x0;
  for (Eigen::Index k = 0; k < horizon; ++k) {
    try {
      x = env.step(x, u_seq.row(k).transpose());
    } catch (const DynamicsError& e) {
      throw RolloutError(static_cast<int>(k), e.what());
    }
    traj.row(k + 1) = x.transpose();
  }
  return traj;
}

Trajectory closed_loop(const Environment& env, const State& x0,
                       const Policy& policy, int steps) {
  Trajectory traj(steps + 1, env.state_dim());
  traj.row(0) = x0.transpose();
  State x = x0;
  for (int k = 0; k < steps; ++k) {
    try {
      x = env.step(x, policy(x));
    } catch (const DynamicsError& e) {
      throw RolloutError(k, e.what());
    }
    traj.row(k + 1) = x.transpose();
  }
  return traj;
}

// ------------------------------------------------------------------ drone

double DroneCorridor::clearance(double x, double z) const {
  double best = z - ground_z;
  for (const auto& b : obstacles) {
    const double dx = std::max({b.x_min - x, 0.0, x - b.x_max});
    const double dz = std::max({b.z_min - z, 0.0, z - b.z_max});
    best = std::min(best, std::hypot(dx, dz));
  }
  return best;
}

DroneEnv::DroneEnv(DroneParams params, DroneCorridor corridor)
    : params_(params), corridor_(std::move(corridor)) {
  params_.validate();
  if (corridor_.start.size() != drone::kStateDim) {
    throw ConfigError("drone start state must have 6 entries");
  }
  for (const auto& b : corridor_.obstacles) {
    if (!(b.x_min < b.x_max && b.z_min < b.z_max)) {
      throw ConfigError("drone obstacle boxes need min < max");
    }
  }
  disturbance_std_ = Eigen::VectorXd::Zero(drone::kStateDim);
}

Control DroneEnv::lower_bounds() const {
  return Control::Zero(drone::kControlDim);
}

Control DroneEnv::upper_bounds() const {
  return Control::Constant(drone::kControlDim, params_.thrust_max);
}

State DroneEnv::step(const State& x, const Control& u) const {
  return step_drone(x, u, params_);
}

double DroneEnv::avoid_heuristic(const State& x) const {
  return corridor_.body_radius - corridor_.clearance(x[drone::kX], x[drone::kZ]);
}

bool DroneEnv::finished(const State& x) const {
  return x[drone::kX] >= corridor_.goal_x;
}

State DroneEnv::sample_state(StreamRng& rng) const {
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  State x(drone::kStateDim);
  x[drone::kX] = uni(-1.0, corridor_.goal_x);
  x[drone::kZ] = uni(corridor_.ground_z + 0.1, corridor_.ground_z + 2.5);
  x[drone::kVx] = uni(-1.0, 5.0);
  x[drone::kVz] = uni(-2.0, 2.0);
  x[drone::kTheta] = uni(-0.4, 0.4);
  x[drone::kThetaDot] = uni(-1.0, 1.0);
  return x;
}

Control DroneEnv::backup_action(const State& x) const {
  const auto& p = params_;
  const double ax = -1.5 * x[drone::kVx];
  const double az = -2.0 * x[drone::kVz];
  const double theta_ref = std::clamp(std::atan2(-ax, p.gravity + az), -0.5, 0.5);
  const double thrust =
      p.mass * std::hypot(ax, p.gravity + az);
  const double torque = p.inertia * (-40.0 * (x[drone::kTheta] - theta_ref) -
                                     10.0 * x[drone::kThetaDot]);
  Control u(2);
  u[0] = 0.5 * (thrust - torque / p.arm);
  u[1] = 0.5 * (thrust + torque / p.arm);
  return clamp(u);
}

// ---------------------------------------------------------------- vehicle

VehicleEnv::VehicleEnv(VehicleParams params, TrackGeometry track,
                       std::vector<TrackObstacle> obstacles,
                       double start_speed, double crawl_speed)
    : params_(params),
      track_(std::move(track)),
      obstacles_(std::move(obstacles)),
      start_speed_(start_speed),
      crawl_speed_(crawl_speed) {
  params_.validate();
  for (const auto& o : obstacles_) {
    if (!(o.radius > 0.0)) throw ConfigError("obstacle radius must be > 0");
  }
  disturbance_std_ = Eigen::VectorXd::Zero(vehicle::kStateDim);
}

Control VehicleEnv::lower_bounds() const {
  return (Control(2) << -params_.steer_max, -1.0).finished();
}

Control VehicleEnv::upper_bounds() const {
  return (Control(2) << params_.steer_max, 1.0).finished();
}

State VehicleEnv::step(const State& x, const Control& u) const {
  return step_vehicle(x, u, params_, track_);
}

double VehicleEnv::obstacle_heuristic(const State& x) const {
  double best = -std::numeric_limits<double>::infinity();
  const double length = track_.total_length();
  for (const auto& o : obstacles_) {
    double ds = track_.wrap(x[vehicle::kS] - o.s);
    if (ds > 0.5 * length) ds -= length;
    const double dy = x[vehicle::kEy] - o.e_y;
    best = std::max(best, o.radius * o.radius - (ds * ds + dy * dy));
  }
  return best;
}

double VehicleEnv::avoid_heuristic(const State& x) const {
  const double w = track_.half_width();
  const double e_y = x[vehicle::kEy];
  const double h0 = e_y * e_y - w * w;
  if (obstacles_.empty()) return h0;
  return std::max(h0, obstacle_heuristic(x));
}

bool VehicleEnv::crashed(const State& x) const {
  if (std::abs(x[vehicle::kEy]) >= track_.crash_width()) return true;
  return !obstacles_.empty() && obstacle_heuristic(x) > 0.0;
}

bool VehicleEnv::collided(const State& x) const {
  if (std::abs(x[vehicle::kEy]) >= track_.half_width()) return true;
  return !obstacles_.empty() && obstacle_heuristic(x) > 0.0;
}

State VehicleEnv::initial_state() const {
  return vehicle_rolling_state(start_speed_, 0.0, 0.0, 0.0, params_);
}

State VehicleEnv::sample_state(StreamRng& rng) const {
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  const double s = uni(0.0, track_.total_length());
  const double v = uni(2.0, 13.0);
  const double w = track_.crash_width();
  State x = vehicle_rolling_state(v, uni(-w, w), uni(-0.35, 0.35), s, params_);
  x[vehicle::kVy] = uni(-0.5, 0.5);
  x[vehicle::kYawRate] = v * track_.curvature(s) + uni(-0.5, 0.5);
  return x;
}

Control VehicleEnv::backup_action(const State& x) const {
  using namespace vehicle;
  const double wheelbase = params_.l_front + params_.l_rear;
  const double feedforward = std::atan(wheelbase * track_.curvature(x[kS]));
  Control u(2);
  u[0] = feedforward - 0.8 * x[kEpsi] - 0.25 * x[kEy];
  u[1] = -0.5 * (x[kVx] - crawl_speed_);
  return clamp(u);
}

// --------------------------------------------------------------- oracles

DoubleIntegratorEnv::DoubleIntegratorEnv(double dt, double u_max, double limit)
    : dt_(dt), u_max_(u_max), limit_(limit) {
  if (!(dt > 0 && u_max > 0 && limit > 0)) {
    throw ConfigError("double integrator parameters must be positive");
  }
  disturbance_std_ = Eigen::VectorXd::Zero(2);
}

Control DoubleIntegratorEnv::lower_bounds() const {
  return Control::Constant(1, -u_max_);
}

Control DoubleIntegratorEnv::upper_bounds() const {
  return Control::Constant(1, u_max_);
}

State DoubleIntegratorEnv::step(const State& x, const Control& u) const {
  return step_double_integrator(x, clamp(u), dt_);
}

double DoubleIntegratorEnv::avoid_heuristic(const State& x) const {
  return x[0] * x[0] - limit_ * limit_;
}

State DoubleIntegratorEnv::sample_state(StreamRng& rng) const {
  State x(2);
  x[0] = limit_ * (2.0 * rng.uniform() - 1.0);
  x[1] = 2.0 * rng.uniform() - 1.0;
  return x;
}

Control DoubleIntegratorEnv::backup_action(const State& x) const {
  return clamp(Control::Constant(1, -x[1] / dt_));
}

ScalarOracleEnv::ScalarOracleEnv(double sample_low, double sample_high)
    : low_(sample_low), high_(sample_high) {
  if (!(low_ < high_)) throw ConfigError("scalar oracle: need low < high");
  disturbance_std_ = Eigen::VectorXd::Zero(1);
}

Control ScalarOracleEnv::lower_bounds() const { return Control::Constant(1, -1.0); }
Control ScalarOracleEnv::upper_bounds() const { return Control::Constant(1, 1.0); }

State ScalarOracleEnv::step(const State& x, const Control& u) const {
  return step_scalar_oracle(x, u);
}

State ScalarOracleEnv::sample_state(StreamRng& rng) const {
  return State::Constant(1, low_ + (high_ - low_) * rng.uniform());
}

Control ScalarOracleEnv::backup_action(const State& x) const {
  return clamp(Control::Constant(1, -x[0]));
}

}  // namespace shieldmpc
