#include "shieldmpc/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace shieldmpc {
namespace {

void require_finite(const State& x, const Control& u, const char* model) {
  if (!x.allFinite() || !u.allFinite()) {
    throw DynamicsError(std::string(model) + ": non-finite state or control");
  }
}

void require_dims(const State& x, const Control& u, int nx, int nu,
                  const char* model) {
  if (x.size() != nx || u.size() != nu) {
    throw DynamicsError(std::string(model) + ": expected state dim " +
                        std::to_string(nx) + " and control dim " +
                        std::to_string(nu));
  }
}

double magic_formula(double slip, const VehicleParams& p) {
  return p.tire_d * std::sin(p.tire_c * std::atan(p.tire_b * slip));
}

}  // namespace

// ---------------------------------------------------------------- drone

void DroneParams::validate() const {
  if (!(mass > 0 && inertia > 0 && arm > 0 && rotor_radius > 0 &&
        ground_effect > 0 && gravity > 0 && dt > 0 && thrust_max > 0)) {
    throw ConfigError("drone parameters must be strictly positive");
  }
  if (ground_effect * rotor_radius / (4.0 * rotor_height_floor()) >= 1.0) {
    throw ConfigError(
        "drone ground_effect too large: thrust divisor vanishes at the rotor "
        "height floor");
  }
}

double ground_effect_thrust(double commanded, double rotor_height,
                            const DroneParams& p) {
  const double z = std::max(rotor_height, p.rotor_height_floor());
  return commanded / (1.0 - p.ground_effect * (p.rotor_radius / (4.0 * z)));
}

State drone_derivative(const State& x, const Control& u, const DroneParams& p) {
  require_dims(x, u, drone::kStateDim, drone::kControlDim, "drone");
  require_finite(x, u, "drone");
  const double theta = x[drone::kTheta];
  const double s = std::sin(theta), c = std::cos(theta);
  const double z = x[drone::kZ];
  const double f1 = ground_effect_thrust(u[0], z - p.arm * s, p);
  const double f2 = ground_effect_thrust(u[1], z + p.arm * s, p);
  const double thrust = f1 + f2;
  const double torque = p.arm * (f2 - f1);

  State dx(drone::kStateDim);
  dx[drone::kX] = x[drone::kVx];
  dx[drone::kZ] = x[drone::kVz];
  dx[drone::kVx] = -(thrust / p.mass) * s;
  dx[drone::kVz] = (thrust / p.mass) * c - p.gravity;
  dx[drone::kTheta] = x[drone::kThetaDot];
  dx[drone::kThetaDot] = torque / p.inertia;
  return dx;
}

State step_drone(const State& x, const Control& u, const DroneParams& p) {
  require_dims(x, u, drone::kStateDim, drone::kControlDim, "drone");
  const Control uc = u.cwiseMax(0.0).cwiseMin(p.thrust_max);
  return x + drone_derivative(x, uc, p) * p.dt;
}

// ---------------------------------------------------------------- vehicle

void VehicleParams::validate() const {
  if (!(mass > 0 && yaw_inertia > 0 && l_front > 0 && l_rear > 0 &&
        front_wheel_inertia > 0 && front_wheel_radius > 0 && tire_b > 0 &&
        tire_c > 0 && tire_d > 0 && gravity > 0 && dt > 0 &&
        rear_wheel_inertia > 0 && rear_wheel_radius > 0 &&
        torque_gain > 0 && wheel_drag >= 0 && drivetrain_scale > 0 &&
        slip_speed_floor > 0 && chart_guard > 0 && steer_max > 0)) {
    throw ConfigError("vehicle parameters must be strictly positive");
  }
}

std::pair<double, double> normal_loads(const VehicleParams& p) {
  const double wheelbase = p.l_front + p.l_rear;
  const double weight = p.mass * p.gravity;
  return {weight * p.l_rear / wheelbase, weight * p.l_front / wheelbase};
}

TireForces tire_forces(const State& x, double steering,
                       const VehicleParams& p) {
  using namespace vehicle;
  const double vx = x[kVx], vy = x[kVy], yaw_rate = x[kYawRate];
  const double cd = std::cos(steering), sd = std::sin(steering);

  // Contact-patch velocities in each wheel's own frame.
  const double front_lat_body = vy + p.l_front * yaw_rate;
  const double v_fx = vx * cd + front_lat_body * sd;
  const double v_fy = -vx * sd + front_lat_body * cd;
  const double v_rx = vx;
  const double v_ry = vy - p.l_rear * yaw_rate;

  auto friction = [&](double v_long, double v_lat, double wheel_speed,
                      double& mu_x, double& mu_y) {
    const double denom = std::max(wheel_speed, p.slip_speed_floor);
    const double sx = (v_long - wheel_speed) / denom;
    const double sy = v_lat / denom;
    const double slip = std::hypot(sx, sy);
    if (slip < 1e-12) {
      mu_x = mu_y = 0.0;
      return;
    }
    const double mu = magic_formula(slip, p);
    mu_x = -sx / slip * mu;
    mu_y = -sy / slip * mu;
  };

  const auto [fz_front, fz_rear] = normal_loads(p);
  double mfx, mfy, mrx, mry;
  friction(v_fx, v_fy, x[kOmegaF] * p.front_wheel_radius, mfx, mfy);
  friction(v_rx, v_ry, x[kOmegaR] * p.rear_wheel_radius, mrx, mry);

  TireForces f;
  f.front_x = fz_front * mfx;
  f.front_y = fz_front * mfy;
  f.rear_x = fz_rear * mrx;
  f.rear_y = fz_rear * mry;
  return f;
}

State vehicle_derivative(const State& x, const Control& u,
                         const VehicleParams& p, const TrackGeometry& track) {
  using namespace vehicle;
  require_dims(x, u, kStateDim, kControlDim, "vehicle");
  require_finite(x, u, "vehicle");

  const double delta = u[0], throttle = u[1];
  const double vx = x[kVx], vy = x[kVy], yaw_rate = x[kYawRate];
  const double e_psi = x[kEpsi], e_y = x[kEy];
  const double rho = track.curvature(x[kS]);
  const double chart = 1.0 - rho * e_y;
  if (chart <= p.chart_guard) {
    throw DynamicsError("vehicle: left the curvilinear chart (1 - rho*e_y = " +
                        std::to_string(chart) + ")");
  }

  const TireForces f = tire_forces(x, delta, p);
  const double cd = std::cos(delta), sd = std::sin(delta);
  const double along = vx * std::cos(e_psi) - vy * std::sin(e_psi);

  State dx(kStateDim);
  dx[kVx] = (f.front_x * cd - f.front_y * sd + f.rear_x) / p.mass +
            vy * yaw_rate;
  dx[kVy] = (f.front_x * sd + f.front_y * cd + f.rear_y) / p.mass -
            vx * yaw_rate;
  dx[kYawRate] =
      ((f.front_y * cd + f.front_x * sd) * p.l_front - f.rear_y * p.l_rear) /
      p.yaw_inertia;
  dx[kOmegaF] = -p.front_wheel_radius / p.front_wheel_inertia * f.front_x;
  dx[kOmegaR] = (p.torque_gain * throttle - p.wheel_drag * x[kOmegaR] -
                 p.rear_wheel_radius * f.rear_x / p.rear_wheel_inertia) *
                p.drivetrain_scale;
  dx[kEpsi] = yaw_rate - along / chart * rho;
  dx[kEy] = vx * std::sin(e_psi) + vy * std::cos(e_psi);
  dx[kS] = along / chart;
  return dx;
}

State step_vehicle(const State& x, const Control& u, const VehicleParams& p,
                   const TrackGeometry& track) {
  using namespace vehicle;
  require_dims(x, u, kStateDim, kControlDim, "vehicle");
  Control uc(kControlDim);
  uc[0] = std::clamp(u[0], -p.steer_max, p.steer_max);
  uc[1] = std::clamp(u[1], -1.0, 1.0);
  State next = x + vehicle_derivative(x, uc, p, track) * p.dt;
  next[kOmegaF] = std::max(next[kOmegaF], 0.0);
  next[kOmegaR] = std::max(next[kOmegaR], 0.0);
  next[kS] = track.wrap(next[kS]);
  return next;
}

State vehicle_rolling_state(double v_x, double e_y, double e_psi, double s,
                            const VehicleParams& p) {
  using namespace vehicle;
  State x = State::Zero(kStateDim);
  x[kVx] = v_x;
  x[kOmegaF] = v_x / p.front_wheel_radius;
  x[kOmegaR] = v_x / p.rear_wheel_radius;
  x[kEpsi] = e_psi;
  x[kEy] = e_y;
  x[kS] = s;
  return x;
}

// ---------------------------------------------------------------- oracles

State step_double_integrator(const State& x, const Control& u, double dt) {
  require_dims(x, u, 2, 1, "double integrator");
  require_finite(x, u, "double integrator");
  State next(2);
  next[0] = x[0] + x[1] * dt;
  next[1] = x[1] + u[0] * dt;
  return next;
}

State step_scalar_oracle(const State& x, const Control& u) {
  require_dims(x, u, 1, 1, "scalar oracle");
  require_finite(x, u, "scalar oracle");
  State next(1);
  next[0] = 0.9 * x[0] + 0.1 * std::clamp(u[0], -1.0, 1.0);
  return next;
}

}  // namespace shieldmpc
