#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "shieldmpc/dynamics.hpp"
#include "shieldmpc/random.hpp"
#include "shieldmpc/track.hpp"
#include "shieldmpc/types.hpp"

namespace shieldmpc {

using Policy = std::function<Control(const State&)>;

// A discrete-time system together with its state constraint. The avoid set is
// {x : avoid_heuristic(x) > 0}.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual Control lower_bounds() const = 0;
  virtual Control upper_bounds() const = 0;

  // Deterministic model step; controls are clamped to the box first.
  virtual State step(const State& x, const Control& u) const = 0;

  virtual double avoid_heuristic(const State& x) const = 0;
  bool in_avoid_set(const State& x) const { return avoid_heuristic(x) > 0.0; }

  // Terminal failure. Defaults to membership in the avoid set.
  virtual bool crashed(const State& x) const { return in_avoid_set(x); }
  // Non-terminal contact with the constraint boundary.
  virtual bool collided(const State& x) const { return in_avoid_set(x); }
  // Episode completed successfully (e.g. reached a goal line).
  virtual bool finished(const State&) const { return false; }

  // Forward speed used for the mean-velocity metric.
  virtual double speed(const State& x) const { return x[0]; }

  virtual State initial_state() const = 0;
  // Draw from a broad distribution over the operating region; used to seed
  // value-function training rollouts.
  virtual State sample_state(StreamRng& rng) const = 0;

  // Simple stabilizing feedback law that tries to bring the system to rest
  // inside the safe set.
  virtual Control backup_action(const State& x) const = 0;

  // Per-dimension std of additive Gaussian state noise in the simulated plant.
  const Eigen::VectorXd& disturbance_std() const { return disturbance_std_; }
  void set_disturbance_std(Eigen::VectorXd std_dev);

  Control clamp(const Control& u) const;
  // Plant step: model step plus the configured disturbance.
  State step_noisy(const State& x, const Control& u, StreamRng& rng) const;

 protected:
  Eigen::VectorXd disturbance_std_;
};

// Repeatedly steps the model. Returns K+1 states; step errors are rethrown as
// RolloutError carrying the offending timestep.
Trajectory rollout(const Environment& env, const State& x0,
                   const ControlSequence& u_seq);

// Closed-loop rollout of a feedback policy for `steps` steps.
Trajectory closed_loop(const Environment& env, const State& x0,
                       const Policy& policy, int steps);

// ------------------------------------------------------------------ drone

struct Box2 {
  double x_min, x_max, z_min, z_max;
};

// Corridor close to the ground: a low ceiling block forces the drone down.
// The layout is an implementer construction.
struct DroneCorridor {
  double ground_z = 0.0;
  double body_radius = 0.15;
  std::vector<Box2> obstacles = {{6.0, 12.0, 0.8, 5.0}};
  double goal_x = 16.0;
  State start = (State(6) << 0.0, 1.2, 0.0, 0.0, 0.0, 0.0).finished();

  // Free-space clearance from the drone center to the nearest surface.
  double clearance(double x, double z) const;
};

class DroneEnv final : public Environment {
 public:
  DroneEnv(DroneParams params, DroneCorridor corridor);

  std::string name() const override { return "drone"; }
  int state_dim() const override { return drone::kStateDim; }
  int control_dim() const override { return drone::kControlDim; }
  Control lower_bounds() const override;
  Control upper_bounds() const override;
  State step(const State& x, const Control& u) const override;
  // body_radius - clearance.
  double avoid_heuristic(const State& x) const override;
  bool finished(const State& x) const override;
  double speed(const State& x) const override { return x[drone::kVx]; }
  State initial_state() const override { return corridor_.start; }
  State sample_state(StreamRng& rng) const override;
  // Level out, cancel horizontal and vertical velocity.
  Control backup_action(const State& x) const override;

  const DroneParams& params() const { return params_; }
  const DroneCorridor& corridor() const { return corridor_; }

 private:
  DroneParams params_;
  DroneCorridor corridor_;
};

// ---------------------------------------------------------------- vehicle

// Circular obstacle in curvilinear coordinates.
struct TrackObstacle {
  double s, e_y, radius;
};

class VehicleEnv final : public Environment {
 public:
  VehicleEnv(VehicleParams params, TrackGeometry track,
             std::vector<TrackObstacle> obstacles = {},
             double start_speed = 5.0, double crawl_speed = 3.0);

  std::string name() const override { return "vehicle"; }
  int state_dim() const override { return vehicle::kStateDim; }
  int control_dim() const override { return vehicle::kControlDim; }
  Control lower_bounds() const override;
  Control upper_bounds() const override;
  State step(const State& x, const Control& u) const override;
  // e_y^2 - w_I^2, extended by the obstacle clearance terms
  // r_j^2 - d_j^2 when obstacles are configured.
  double avoid_heuristic(const State& x) const override;
  // |e_y| >= w_O or inside an obstacle.
  bool crashed(const State& x) const override;
  // |e_y| >= w_I or inside an obstacle.
  bool collided(const State& x) const override;
  double speed(const State& x) const override { return x[vehicle::kVx]; }
  State initial_state() const override;
  State sample_state(StreamRng& rng) const override;
  // Follow the centerline curvature and brake toward a crawl speed.
  Control backup_action(const State& x) const override;

  const VehicleParams& params() const { return params_; }
  const TrackGeometry& track() const { return track_; }
  const std::vector<TrackObstacle>& obstacles() const { return obstacles_; }
  double obstacle_heuristic(const State& x) const;

 private:
  VehicleParams params_;
  TrackGeometry track_;
  std::vector<TrackObstacle> obstacles_;
  double start_speed_;
  double crawl_speed_;
};

// --------------------------------------------------------------- oracles

// x = [p, v], |u| <= u_max, avoid set |p| > limit.
class DoubleIntegratorEnv final : public Environment {
 public:
  DoubleIntegratorEnv(double dt = 0.1, double u_max = 1.0,
                      double limit = 1.0);

  std::string name() const override { return "double_integrator"; }
  int state_dim() const override { return 2; }
  int control_dim() const override { return 1; }
  Control lower_bounds() const override;
  Control upper_bounds() const override;
  State step(const State& x, const Control& u) const override;
  double avoid_heuristic(const State& x) const override;
  double speed(const State& x) const override { return x[1]; }
  State initial_state() const override { return State::Zero(2); }
  State sample_state(StreamRng& rng) const override;
  // Full braking.
  Control backup_action(const State& x) const override;

  double dt() const { return dt_; }
  double u_max() const { return u_max_; }
  double limit() const { return limit_; }

 private:
  double dt_, u_max_, limit_;
};

// x_{k+1} = 0.9 x + 0.1 u with |u| <= 1, h(x) = x - 1 and policy
// pi(x) = clamp(-x, -1, 1).
class ScalarOracleEnv final : public Environment {
 public:
  explicit ScalarOracleEnv(double sample_low = -2.0, double sample_high = 2.0);

  std::string name() const override { return "scalar_oracle"; }
  int state_dim() const override { return 1; }
  int control_dim() const override { return 1; }
  Control lower_bounds() const override;
  Control upper_bounds() const override;
  State step(const State& x, const Control& u) const override;
  double avoid_heuristic(const State& x) const override { return x[0] - 1.0; }
  // Trajectories leave the avoid set again, so nothing is terminal.
  bool crashed(const State&) const override { return false; }
  State initial_state() const override { return State::Zero(1); }
  State sample_state(StreamRng& rng) const override;
  Control backup_action(const State& x) const override;

  double sample_low() const { return low_; }
  double sample_high() const { return high_; }

 private:
  double low_, high_;
};

}  // namespace shieldmpc
