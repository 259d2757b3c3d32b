#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace shieldmpc {

// Maps a raw state to network features. Periodic dimensions (e.g. arclength
// on a closed track) are replaced by (cos, sin) of their phase; the remaining
// dimensions are passed through. Features are then normalized affinely.
struct InputEncoding {
  int state_dim = 0;
  std::vector<std::pair<int, double>> periodic;  // (dimension, period)

  int feature_dim() const {
    return state_dim + static_cast<int>(periodic.size());
  }
  // Columns of `states` are samples.
  Eigen::MatrixXd encode(const Eigen::MatrixXd& states) const;
};

// Fully connected network: tanh hidden layers, linear scalar output.
class Mlp {
 public:
  struct Gradient {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
  };

  Mlp() = default;
  // `hidden` lists hidden-layer widths; Glorot-uniform init from `seed`.
  Mlp(InputEncoding encoding, std::vector<int> hidden, std::uint64_t seed);

  int state_dim() const { return encoding_.state_dim; }
  const InputEncoding& encoding() const { return encoding_; }
  std::vector<int> layer_sizes() const;
  int num_layers() const { return static_cast<int>(weights_.size()); }

  // Affine feature normalization z = (f - mean) / scale.
  void set_normalization(Eigen::VectorXd mean, Eigen::VectorXd scale);
  // Sets normalization from the feature statistics of `states` (columns).
  void fit_normalization(const Eigen::MatrixXd& states);
  const Eigen::VectorXd& feature_mean() const { return mean_; }
  const Eigen::VectorXd& feature_scale() const { return scale_; }

  double evaluate(const Eigen::VectorXd& state) const;
  // One output per column of `states`.
  Eigen::VectorXd evaluate_batch(const Eigen::MatrixXd& states) const;

  // Mean squared error 1/B sum (V(x_i) - t_i)^2 over the columns of `states`
  // and its gradient with respect to all parameters.
  double loss_and_gradient(const Eigen::MatrixXd& states,
                           const Eigen::VectorXd& targets,
                           Gradient* grad) const;

  std::vector<Eigen::MatrixXd>& weights() { return weights_; }
  std::vector<Eigen::VectorXd>& biases() { return biases_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  const std::vector<Eigen::VectorXd>& biases() const { return biases_; }
  Gradient zero_gradient() const;
  bool parameters_finite() const;

  // Text model format, see README ("Model file").
  void save(std::ostream& out) const;
  void save(const std::string& path) const;
  static Mlp load(std::istream& in);
  static Mlp load(const std::string& path);

 private:
  Eigen::MatrixXd normalized_features(const Eigen::MatrixXd& states) const;

  InputEncoding encoding_;
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
  std::vector<Eigen::MatrixXd> weights_;  // layer l: (out x in)
  std::vector<Eigen::VectorXd> biases_;
};

// Adam on the parameters of an Mlp.
class AdamOptimizer {
 public:
  AdamOptimizer(const Mlp& net, double learning_rate, double beta1 = 0.9,
                double beta2 = 0.999, double epsilon = 1e-8);
  void step(Mlp& net, const Mlp::Gradient& grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  Mlp::Gradient m_, v_;
};

}  // namespace shieldmpc
