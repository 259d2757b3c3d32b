#include "shieldmpc/mlp.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "shieldmpc/random.hpp"
#include "shieldmpc/types.hpp"

namespace shieldmpc {
namespace {

constexpr const char* kMagic = "shieldmpc-mlp";
constexpr int kFormatVersion = 1;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void expect_token(std::istream& in, const std::string& want) {
  std::string got;
  if (!(in >> got) || got != want) {
    throw ConfigError("model file: expected '" + want + "', got '" + got + "'");
  }
}

template <typename T>
T read_value(std::istream& in, const char* what) {
  T v;
  if (!(in >> v)) throw ConfigError(std::string("model file: bad ") + what);
  return v;
}

}  // namespace

Eigen::MatrixXd InputEncoding::encode(const Eigen::MatrixXd& states) const {
  if (states.rows() != state_dim) {
    throw ConfigError("network input has " + std::to_string(states.rows()) +
                      " rows, expected " + std::to_string(state_dim));
  }
  if (periodic.empty()) return states;
  Eigen::MatrixXd out(feature_dim(), states.cols());
  out.topRows(state_dim) = states;
  int row = state_dim;
  for (const auto& [dim, period] : periodic) {
    const Eigen::ArrayXd phase =
        states.row(dim).transpose().array() * (2.0 * std::numbers::pi / period);
    out.row(dim) = phase.cos().transpose();
    out.row(row++) = phase.sin().transpose();
  }
  return out;
}

Mlp::Mlp(InputEncoding encoding, std::vector<int> hidden, std::uint64_t seed)
    : encoding_(std::move(encoding)) {
  if (encoding_.state_dim < 1) throw ConfigError("mlp: state_dim must be >= 1");
  if (hidden.empty()) throw ConfigError("mlp: need at least one hidden layer");
  std::vector<int> sizes{encoding_.feature_dim()};
  for (int h : hidden) {
    if (h < 1) throw ConfigError("mlp: hidden widths must be >= 1");
    sizes.push_back(h);
  }
  sizes.push_back(1);

  StreamRng rng(seed, 0x6d6c70);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l], fan_out = sizes[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) w(r, c) = limit * (2.0 * rng.uniform() - 1.0);
    }
    weights_.push_back(std::move(w));
    biases_.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  mean_ = Eigen::VectorXd::Zero(sizes.front());
  scale_ = Eigen::VectorXd::Ones(sizes.front());
}

std::vector<int> Mlp::layer_sizes() const {
  std::vector<int> sizes;
  if (weights_.empty()) return sizes;
  sizes.push_back(static_cast<int>(weights_.front().cols()));
  for (const auto& w : weights_) sizes.push_back(static_cast<int>(w.rows()));
  return sizes;
}

void Mlp::set_normalization(Eigen::VectorXd mean, Eigen::VectorXd scale) {
  if (mean.size() != encoding_.feature_dim() ||
      scale.size() != encoding_.feature_dim()) {
    throw ConfigError("mlp: normalization size mismatch");
  }
  if ((scale.array() <= 0.0).any()) {
    throw ConfigError("mlp: normalization scale must be positive");
  }
  mean_ = std::move(mean);
  scale_ = std::move(scale);
}

void Mlp::fit_normalization(const Eigen::MatrixXd& states) {
  const Eigen::MatrixXd f = encoding_.encode(states);
  Eigen::VectorXd mean = f.rowwise().mean();
  Eigen::VectorXd scale =
      ((f.colwise() - mean).array().square().rowwise().mean()).sqrt().matrix();
  for (Eigen::Index i = 0; i < scale.size(); ++i) {
    if (!(scale[i] > 1e-8)) scale[i] = 1.0;
  }
  set_normalization(std::move(mean), std::move(scale));
}

Eigen::MatrixXd Mlp::normalized_features(const Eigen::MatrixXd& states) const {
  Eigen::MatrixXd f = encoding_.encode(states);
  f.colwise() -= mean_;
  f.array().colwise() /= scale_.array();
  return f;
}

double Mlp::evaluate(const Eigen::VectorXd& state) const {
  return evaluate_batch(state)[0];
}

Eigen::VectorXd Mlp::evaluate_batch(const Eigen::MatrixXd& states) const {
  Eigen::MatrixXd a = normalized_features(states);
  const std::size_t last = weights_.size() - 1;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::MatrixXd z = weights_[l] * a;
    z.colwise() += biases_[l];
    a = (l == last) ? std::move(z) : Eigen::MatrixXd(z.array().tanh());
  }
  return a.row(0).transpose();
}

double Mlp::loss_and_gradient(const Eigen::MatrixXd& states,
                              const Eigen::VectorXd& targets,
                              Gradient* grad) const {
  const Eigen::Index batch = states.cols();
  if (targets.size() != batch) throw ConfigError("mlp: target size mismatch");
  const std::size_t n = weights_.size();

  // Forward pass keeping activations.
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(n + 1);
  acts.push_back(normalized_features(states));
  for (std::size_t l = 0; l < n; ++l) {
    Eigen::MatrixXd z = weights_[l] * acts.back();
    z.colwise() += biases_[l];
    if (l + 1 < n) z = z.array().tanh().matrix();
    acts.push_back(std::move(z));
  }
  const Eigen::RowVectorXd err = acts.back().row(0) - targets.transpose();
  const double loss = err.squaredNorm() / static_cast<double>(batch);
  if (grad == nullptr) return loss;

  grad->weights.resize(n);
  grad->biases.resize(n);
  // dL/d(output)
  Eigen::MatrixXd delta = (2.0 / static_cast<double>(batch)) * err;
  for (std::size_t l = n; l-- > 0;) {
    grad->weights[l] = delta * acts[l].transpose();
    grad->biases[l] = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = weights_[l].transpose() * delta;
      delta = back.array() * (1.0 - acts[l].array().square());
    }
  }
  return loss;
}

Mlp::Gradient Mlp::zero_gradient() const {
  Gradient g;
  for (const auto& w : weights_) g.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  for (const auto& b : biases_) g.biases.push_back(Eigen::VectorXd::Zero(b.size()));
  return g;
}

bool Mlp::parameters_finite() const {
  for (const auto& w : weights_) if (!w.allFinite()) return false;
  for (const auto& b : biases_) if (!b.allFinite()) return false;
  return true;
}

void Mlp::save(std::ostream& out) const {
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "state_dim " << encoding_.state_dim << '\n';
  out << "periodic " << encoding_.periodic.size();
  for (const auto& [dim, period] : encoding_.periodic) out << ' ' << dim << ' ' << fmt(period);
  out << '\n';
  const auto sizes = layer_sizes();
  out << "layers " << sizes.size();
  for (int s : sizes) out << ' ' << s;
  out << '\n';
  out << "feature_mean";
  for (Eigen::Index i = 0; i < mean_.size(); ++i) out << ' ' << fmt(mean_[i]);
  out << "\nfeature_scale";
  for (Eigen::Index i = 0; i < scale_.size(); ++i) out << ' ' << fmt(scale_[i]);
  out << '\n';
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto& w = weights_[l];
    out << "weight " << l << ' ' << w.rows() << ' ' << w.cols() << '\n';
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        out << (c ? " " : "") << fmt(w(r, c));
      }
      out << '\n';
    }
    out << "bias " << l << ' ' << biases_[l].size() << '\n';
    for (Eigen::Index i = 0; i < biases_[l].size(); ++i) {
      out << (i ? " " : "") << fmt(biases_[l][i]);
    }
    out << '\n';
  }
  out << "end\n";
}

void Mlp::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write model file " + path);
  save(out);
}

Mlp Mlp::load(std::istream& in) {
  expect_token(in, kMagic);
  const int version = read_value<int>(in, "version");
  if (version != kFormatVersion) {
    throw ConfigError("model file: unsupported version " + std::to_string(version));
  }
  Mlp net;
  expect_token(in, "state_dim");
  net.encoding_.state_dim = read_value<int>(in, "state_dim");
  expect_token(in, "periodic");
  const auto n_periodic = read_value<std::size_t>(in, "periodic count");
  for (std::size_t i = 0; i < n_periodic; ++i) {
    const int dim = read_value<int>(in, "periodic dim");
    const double period = read_value<double>(in, "period");
    net.encoding_.periodic.emplace_back(dim, period);
  }
  expect_token(in, "layers");
  const auto n_sizes = read_value<std::size_t>(in, "layer count");
  if (n_sizes < 3) throw ConfigError("model file: need at least 3 layer sizes");
  std::vector<int> sizes(n_sizes);
  for (auto& s : sizes) s = read_value<int>(in, "layer size");
  if (sizes.front() != net.encoding_.feature_dim() || sizes.back() != 1) {
    throw ConfigError("model file: layer sizes inconsistent with encoding");
  }
  const int nf = sizes.front();
  net.mean_.resize(nf);
  net.scale_.resize(nf);
  expect_token(in, "feature_mean");
  for (int i = 0; i < nf; ++i) net.mean_[i] = read_value<double>(in, "mean");
  expect_token(in, "feature_scale");
  for (int i = 0; i < nf; ++i) net.scale_[i] = read_value<double>(in, "scale");
  for (std::size_t l = 0; l + 1 < n_sizes; ++l) {
    expect_token(in, "weight");
    read_value<std::size_t>(in, "layer index");
    const int rows = read_value<int>(in, "rows"), cols = read_value<int>(in, "cols");
    if (rows != sizes[l + 1] || cols != sizes[l]) {
      throw ConfigError("model file: weight shape mismatch at layer " + std::to_string(l));
    }
    Eigen::MatrixXd w(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) w(r, c) = read_value<double>(in, "weight");
    expect_token(in, "bias");
    read_value<std::size_t>(in, "layer index");
    const int nb = read_value<int>(in, "bias size");
    if (nb != rows) throw ConfigError("model file: bias size mismatch");
    Eigen::VectorXd b(nb);
    for (int i = 0; i < nb; ++i) b[i] = read_value<double>(in, "bias");
    net.weights_.push_back(std::move(w));
    net.biases_.push_back(std::move(b));
  }
  expect_token(in, "end");
  if (!net.parameters_finite()) throw ConfigError("model file: non-finite parameters");
  return net;
}

Mlp Mlp::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file " + path);
  return load(in);
}

AdamOptimizer::AdamOptimizer(const Mlp& net, double learning_rate, double beta1,
                             double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon),
      m_(net.zero_gradient()), v_(net.zero_gradient()) {}

void AdamOptimizer::step(Mlp& net, const Mlp::Gradient& grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  };
  for (std::size_t l = 0; l < net.weights().size(); ++l) {
    update(net.weights()[l], grad.weights[l], m_.weights[l], v_.weights[l]);
    update(net.biases()[l], grad.biases[l], m_.biases[l], v_.biases[l]);
  }
}

}  // namespace shieldmpc
