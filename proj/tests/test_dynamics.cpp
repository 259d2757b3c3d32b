#include <doctest.h>

#include <cmath>

#include "shieldmpc/dynamics.hpp"
#include "shieldmpc/environment.hpp"
#include "shieldmpc/random.hpp"

using namespace shieldmpc;

namespace {

State hover_state(double z) {
  return (State(6) << 0.0, z, 0.0, 0.0, 0.0, 0.0).finished();
}

Control hover_thrust(const DroneParams& p) {
  return Control::Constant(2, 0.5 * p.mass * p.gravity);
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("stream rng is a pure function of seed and keys") {
  StreamRng a(42, 1, 2), b(42, 1, 2), c(42, 1, 3);
  for (int i = 0; i < 10; ++i) {
    const auto va = a(), vb = b();
    CHECK(va == vb);
    CHECK(va != c());
  }
  // frozen: first draws of the default stream
  StreamRng r(1);
  const std::uint64_t first = r();
  StreamRng r2(1);
  CHECK(r2() == first);
  CHECK(mix64(0) == 0xe220a8397b1dcdafULL);
}

TEST_CASE("stream rng normal moments") {
  StreamRng r(7);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("drone hover is a fixed point far from the ground") {
  DroneParams p;
  const State x = hover_state(1e13);
  const State dx = drone_derivative(x, hover_thrust(p), p);
  CHECK(dx.norm() < 1e-9);
  CHECK((step_drone(x, hover_thrust(p), p) - x).norm() < 1e-9);
}

TEST_CASE("ground effect vanishes with height and raises thrust near ground") {
  DroneParams p;
  CHECK(ground_effect_thrust(1.0, 1e13, p) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ground_effect_thrust(1.0, 0.1, p) > 1.0);
  // divisor 1 - 0.15 * 0.1 / (4 * 0.1)
  CHECK(ground_effect_thrust(1.0, 0.1, p) ==
        doctest::Approx(1.0 / (1.0 - 0.0375)).epsilon(1e-12));
  // below the height floor the divisor is held
  CHECK(ground_effect_thrust(1.0, 0.0, p) ==
        doctest::Approx(ground_effect_thrust(1.0, p.rotor_height_floor(), p)));
}

TEST_CASE("asymmetric thrust at level attitude spins the drone without lateral acceleration") {
  DroneParams p;
  const Control u = (Control(2) << 1.0, 2.0).finished();
  const State dx = drone_derivative(hover_state(1e6), u, p);
  CHECK(dx[drone::kThetaDot] == doctest::Approx(p.arm * (2.0 - 1.0) / p.inertia));
  CHECK(dx[drone::kThetaDot] > 0.0);
  CHECK(dx[drone::kVx] == doctest::Approx(0.0));
  CHECK(dx[drone::kVz] == doctest::Approx(3.0 / p.mass - p.gravity));
}

TEST_CASE("drone controls are clamped to the thrust box") {
  DroneParams p;
  const State x = hover_state(2.0);
  const Control big = Control::Constant(2, 100.0);
  const Control cap = Control::Constant(2, p.thrust_max);
  CHECK((step_drone(x, big, p) - step_drone(x, cap, p)).norm() == 0.0);
}

TEST_CASE("drone rejects bad input") {
  DroneParams p;
  State x = hover_state(1.0);
  x[0] = std::nan("");
  CHECK_THROWS_AS(step_drone(x, hover_thrust(p), p), DynamicsError);
  CHECK_THROWS_AS(step_drone(State::Zero(3), hover_thrust(p), p), DynamicsError);
  DroneParams bad;
  bad.mass = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("vehicle straight-line coasting at zero slip") {
  VehicleParams p;
  const auto track = TrackGeometry::straight(100.0, 1.5, 1.8);
  const State x = vehicle_rolling_state(5.0, 0.0, 0.0, 10.0, p);
  const TireForces f = tire_forces(x, 0.0, p);
  CHECK(f.front_y == 0.0);
  CHECK(f.rear_y == 0.0);
  const State dx = vehicle_derivative(x, Control::Zero(2), p, track);
  CHECK(dx[vehicle::kEpsi] == doctest::Approx(0.0));
  CHECK(dx[vehicle::kEy] == doctest::Approx(0.0));
  CHECK(dx[vehicle::kS] == doctest::Approx(5.0));
  CHECK(dx[vehicle::kYawRate] == doctest::Approx(0.0));
}

TEST_CASE("vehicle parameters match the published platform") {
  VehicleParams p;
  CHECK(p.mass == 22.0);
  CHECK(p.yaw_inertia == 1.1);
  CHECK(p.l_front == 0.34);
  CHECK(p.l_rear == 0.23);
  CHECK(p.front_wheel_inertia == 0.10);
  CHECK(p.front_wheel_radius == 0.095);
  CHECK(p.tire_b == 4.1);
  CHECK(p.tire_c == 0.95);
  CHECK(p.tire_d == 1.1);
  CHECK_NOTHROW(p.validate());
  const auto [front, rear] = normal_loads(p);
  CHECK(front + rear == doctest::Approx(p.mass * p.gravity));
}

TEST_CASE("vehicle step wraps arclength and guards the chart") {
  VehicleParams p;
  const auto track = TrackGeometry::circle(5.0, 1.5, 1.8);
  State x = vehicle_rolling_state(5.0, 0.0, 0.0, track.total_length() - 0.01, p);
  const State next = step_vehicle(x, Control::Zero(2), p, track);
  CHECK(next[vehicle::kS] >= 0.0);
  CHECK(next[vehicle::kS] < 1.0);
  // 1 - rho e_y <= guard on the inside of a 5 m circle
  x[vehicle::kEy] = 5.0;
  CHECK_THROWS_AS(step_vehicle(x, Control::Zero(2), p, track), DynamicsError);
}

TEST_CASE("vehicle frozen step") {
  VehicleParams p;
  const auto track = TrackGeometry::default_track();
  State x = vehicle_rolling_state(6.0, 0.3, 0.05, 3.0, p);
  x[vehicle::kVy] = 0.2;
  x[vehicle::kYawRate] = 0.1;
  const Control u = (Control(2) << 0.1, 0.5).finished();
  const State a = step_vehicle(x, u, p, track);
  const State b = step_vehicle(x, u, p, track);
  CHECK((a - b).norm() == 0.0);
  CHECK(a.allFinite());
  // e_y and s integrate the kinematics exactly for one Euler step
  CHECK(a[vehicle::kEy] ==
        doctest::Approx(0.3 + p.dt * (6.0 * std::sin(0.05) + 0.2 * std::cos(0.05))));
}

TEST_CASE("track geometry") {
  const auto t = TrackGeometry::default_track();
  CHECK(t.total_turning() == doctest::Approx(2.0 * M_PI).epsilon(1e-9));
  CHECK(t.wrap(-1.0) == doctest::Approx(t.total_length() - 1.0));
  CHECK(t.wrap(t.total_length() + 2.0) == doctest::Approx(2.0));
  const auto c = TrackGeometry::circle(4.0, 1.0, 1.2);
  CHECK(c.curvature(1.0) == doctest::Approx(0.25));
  CHECK(c.total_length() == doctest::Approx(8.0 * M_PI));
  // closed: the Cartesian end point returns to the origin
  const auto [ex, ey] = t.to_cartesian(t.total_length() - 1e-9, 0.0);
  CHECK(std::hypot(ex, ey) < 1e-6);
}

TEST_CASE("double integrator by hand") {
  const State z = step_double_integrator(State::Zero(2), Control::Zero(1), 0.1);
  CHECK(z.norm() == 0.0);
  const State a = step_double_integrator((State(2) << 1, 2).finished(), Control::Zero(1), 0.1);
  CHECK(a[0] == doctest::Approx(1.2));
  CHECK(a[1] == doctest::Approx(2.0));
  const State b = step_double_integrator((State(2) << 0, 1).finished(),
                                         Control::Constant(1, -1.0), 0.5);
  CHECK(b[0] == doctest::Approx(0.5));
  CHECK(b[1] == doctest::Approx(0.5));
}

TEST_CASE("rollout") {
  DoubleIntegratorEnv di(1.0, 2.0, 10.0);
  ControlSequence u(2, 1);
  u << 1.0, 1.0;
  const Trajectory tr = rollout(di, State::Zero(2), u);
  REQUIRE(tr.rows() == 3);
  CHECK(tr(1, 0) == doctest::Approx(0.0));
  CHECK(tr(1, 1) == doctest::Approx(1.0));
  CHECK(tr(2, 0) == doctest::Approx(1.0));
  CHECK(tr(2, 1) == doctest::Approx(2.0));

  ControlSequence one(1, 1);
  one << 1.0;
  const Trajectory t1 = rollout(di, State::Zero(2), one);
  CHECK(t1.rows() == 2);
  CHECK((t1.row(1).transpose() - di.step(State::Zero(2), one.row(0).transpose())).norm() == 0.0);

  DroneParams p;
  DroneCorridor corridor;
  corridor.obstacles.clear();
  DroneEnv drone(p, corridor);
  ControlSequence hover(5, 2);
  hover.setConstant(0.5 * p.mass * p.gravity);
  // far from the ground the ground effect is negligible but not zero
  const Trajectory th = rollout(drone, hover_state(1e13), hover);
  for (int k = 1; k < th.rows(); ++k) {
    CHECK((th.row(k) - th.row(0)).norm() < 1e-9);
  }
}

TEST_CASE("rollout tags the failing step") {
  VehicleParams p;
  VehicleEnv env(p, TrackGeometry::circle(5.0, 1.5, 1.8));
  State x = vehicle_rolling_state(5.0, 4.9999, 0.0, 0.0, p);
  ControlSequence u = ControlSequence::Zero(3, 2);
  try {
    rollout(env, x, u);
    FAIL("expected a rollout error");
  } catch (const RolloutError& e) {
    CHECK(e.step() == 0);
  }
}

}  // TEST_SUITE

TEST_SUITE("dynamics") {

TEST_CASE("free fall loses exactly g dt of vertical speed per step") {
  DroneParams p;
  State x = hover_state(50.0);
  x[drone::kVz] = 0.3;
  x[drone::kTheta] = 0.2;
  for (int k = 0; k < 5; ++k) {
    const State next = step_drone(x, Control::Zero(2), p);
    CHECK(next[drone::kVz] == doctest::Approx(x[drone::kVz] - p.gravity * p.dt).epsilon(1e-14));
    x = next;
  }
}

TEST_CASE("ground effect thrust is non-increasing in rotor height") {
  DroneParams p;
  double prev = INFINITY;
  for (double z = 0.0; z < 20.0; z += 0.01) {
    const double f = ground_effect_thrust(2.0, z, p);
    CHECK(f <= prev);
    CHECK(f >= 2.0);
    prev = f;
  }
}

TEST_CASE("centered driving on a circle keeps the heading error") {
  VehicleParams p;
  const double radius = 6.0, rho = 1.0 / radius;
  const auto track = TrackGeometry::circle(radius, 1.5, 1.8);
  State x = vehicle_rolling_state(4.0, 0.0, 0.0, 2.0, p);
  x[vehicle::kYawRate] = 4.0 * rho;
  const State dx = vehicle_derivative(x, Control::Zero(2), p, track);
  CHECK(dx[vehicle::kEpsi] == doctest::Approx(0.0));
  CHECK(dx[vehicle::kEy] == doctest::Approx(0.0));
  CHECK(step_vehicle(x, Control::Zero(2), p, track)[vehicle::kEpsi] ==
        doctest::Approx(0.0));
}

TEST_CASE("stepping is bit-reproducible") {
  VehicleParams p;
  const auto track = TrackGeometry::default_track();
  VehicleEnv env(p, track);
  StreamRng rng(3);
  for (int i = 0; i < 50; ++i) {
    const State x = env.sample_state(rng);
    const Control u = (Control(2) << rng.uniform() - 0.5, 2 * rng.uniform() - 1).finished();
    CHECK((env.step(x, u).array() == env.step(x, u).array()).all());
  }
}

}  // TEST_SUITE
