#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace shieldmpc {

using State = Eigen::VectorXd;
using Control = Eigen::VectorXd;

// Row k holds u_k; K rows, n_u columns.
using ControlSequence =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row k holds x_k; K+1 rows, n_x columns.
using Trajectory =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Raised when a model cannot produce a next state (non-finite input, off-track
// singularity, ...).
class DynamicsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A DynamicsError tagged with the timestep of a rollout where it happened.
class RolloutError : public DynamicsError {
 public:
  RolloutError(int step, const std::string& what)
      : DynamicsError("step " + std::to_string(step) + ": " + what),
        step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

// Invalid configuration or precondition violation on user-supplied input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return v.allFinite();
}

}  // namespace shieldmpc
