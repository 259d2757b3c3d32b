#pragma once

#include "shieldmpc/track.hpp"
#include "shieldmpc/types.hpp"

namespace shieldmpc {

// Planar quadrotor with ground effect.
// State: [x, z, v_x, v_z, theta, theta_dot]; control: [F_in1, F_in2] (N).
namespace drone {
enum : int { kX = 0, kZ, kVx, kVz, kTheta, kThetaDot, kStateDim };
inline constexpr int kControlDim = 2;
}  // namespace drone

// Defaults are implementer-chosen (a small planar quadrotor), not identified
// values.
struct DroneParams {
  double mass = 0.5;          // kg
  double inertia = 0.01;      // kg m^2
  double arm = 0.2;           // m, center to rotor
  double rotor_radius = 0.1;  // m
  double ground_effect = 0.15;
  double gravity = 9.81;      // m/s^2
  double dt = 0.05;           // s
  double thrust_max = 4.0;    // N per rotor

  // Rotor heights are floored here to keep the ground-effect divisor positive.
  double rotor_height_floor() const { return 0.05 * rotor_radius; }
  void validate() const;
};

// Thrust produced by one rotor given its commanded thrust and height.
double ground_effect_thrust(double commanded, double rotor_height,
                            const DroneParams& p);

State drone_derivative(const State& x, const Control& u, const DroneParams& p);
State step_drone(const State& x, const Control& u, const DroneParams& p);

// Rear-wheel-drive single-track vehicle in curvilinear track coordinates.
// State: [v_x, v_y, psi_dot, omega_F, omega_R, e_psi, e_y, s];
// control: [steering delta (rad), throttle/brake T in [-1, 1]].
namespace vehicle {
enum : int { kVx = 0, kVy, kYawRate, kOmegaF, kOmegaR, kEpsi, kEy, kS,
             kStateDim };
inline constexpr int kControlDim = 2;
}  // namespace vehicle

struct VehicleParams {
  double mass = 22.0;           // kg
  double yaw_inertia = 1.1;     // kg m^2
  double l_front = 0.34;        // m
  double l_rear = 0.23;         // m
  double front_wheel_inertia = 0.10;  // kg m^2
  double front_wheel_radius = 0.095;  // m
  double tire_b = 4.1;
  double tire_c = 0.95;
  double tire_d = 1.1;
  double gravity = 9.81;
  double dt = 0.02;  // s

  // First-order rear drivetrain replacing the learned wheel model:
  // omega_R_dot = (torque_gain*T - drag*omega_R
  //                - r_R*f_Rx/I_wR) * scale
  double rear_wheel_inertia = 0.10;  // kg m^2
  double rear_wheel_radius = 0.095;  // m
  double torque_gain = 150.0;        // rad/s^2 per unit throttle
  double wheel_drag = 0.6;           // 1/s
  double drivetrain_scale = 1.0;

  // Slip ratios divide by wheel speed; below this speed (m/s) the divisor is
  // held constant.
  double slip_speed_floor = 1.0;
  // 1 - rho(s) e_y at or below this value is treated as leaving the track's
  // curvilinear chart.
  double chart_guard = 1e-3;

  double steer_max = 0.45;  // rad

  void validate() const;
};

struct TireForces {
  double front_x = 0.0, front_y = 0.0;
  double rear_x = 0.0, rear_y = 0.0;
};

// Static normal loads, front and rear (no load transfer).
std::pair<double, double> normal_loads(const VehicleParams& p);

// Friction-ellipse tire forces with Pacejka combined slip.
TireForces tire_forces(const State& x, double steering, const VehicleParams& p);

// Continuous-time right-hand side F(x, u).
State vehicle_derivative(const State& x, const Control& u,
                         const VehicleParams& p, const TrackGeometry& track);
// Euler step x + F(x, u) dt. Wheel speeds are kept non-negative and s is
// wrapped to [0, track length).
State step_vehicle(const State& x, const Control& u, const VehicleParams& p,
                   const TrackGeometry& track);

// State with zero slip: v_y = yaw_rate = 0 and both wheels rolling at v_x.
State vehicle_rolling_state(double v_x, double e_y, double e_psi, double s,
                            const VehicleParams& p);

// x = [position, velocity], u = [acceleration].
State step_double_integrator(const State& x, const Control& u, double dt);

// x_{k+1} = 0.9 x + 0.1 u, the scalar system used to check the learned
// value function against a grid-iterated oracle.
State step_scalar_oracle(const State& x, const Control& u);

}  // namespace shieldmpc
