#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flowclass/dataset.hpp"
#include "flowclass/error.hpp"
#include "flowclass/random.hpp"

namespace flowclass::nn {

// Batches are N x width matrices, one sample per row.
template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

enum class Mode { Train, Eval };
enum class Activation { Relu, Sigmoid };

/// Layer plan of the classifier.
///
/// Each hidden layer is affine -> (batch-norm) -> activation, with ReLU on the
/// first hidden layer and sigmoid on the rest. Dropout follows every second
/// hidden layer (2, 4, 6, ...). The output layer is affine -> softmax.
struct NetworkSpec {
  int input_dim = 12;
  std::vector<int> hidden_layers = std::vector<int>(7, 16);
  int n_classes = 7;
  double dropout_rate = 0.2;
  bool batch_norm = true;

  void validate() const;

  std::size_t n_hidden() const noexcept { return hidden_layers.size(); }
  Activation activation(std::size_t hidden) const noexcept {
    return hidden == 0 ? Activation::Relu : Activation::Sigmoid;
  }
  bool dropout_after(std::size_t hidden) const noexcept {
    return dropout_rate > 0.0 && (hidden + 1) % 2 == 0;
  }
  /// Width feeding affine layer `layer` (0-based; layer n_hidden() is the output).
  int fan_in(std::size_t layer) const {
    return layer == 0 ? input_dim : hidden_layers[layer - 1];
  }
  int fan_out(std::size_t layer) const {
    return layer == n_hidden() ? n_classes : hidden_layers[layer];
  }

  bool operator==(const NetworkSpec&) const = default;
};

template <typename T>
struct AffineLayer {
  Matrix<T> weight;  // out x in
  Vector<T> bias;    // out
};

template <typename T>
struct BatchNormLayer {
  Vector<T> gamma;
  Vector<T> beta;
  Vector<T> running_mean;
  Vector<T> running_var;
  T momentum = T(0.9);
  T epsilon = T(1e-5);
};

/// Trainable tensors and batch-norm statistics. Gradients reuse this type;
/// their running statistics are left empty.
template <typename T>
struct Parameters {
  std::vector<AffineLayer<T>> affine;     // n_hidden + 1
  std::vector<BatchNormLayer<T>> norm;    // n_hidden when batch norm is on, else empty

  template <typename U>
  Parameters<U> cast() const {
    Parameters<U> out;
    for (const auto& a : affine) out.affine.push_back({a.weight.template cast<U>(), a.bias.template cast<U>()});
    for (const auto& n : norm)
      out.norm.push_back({n.gamma.template cast<U>(), n.beta.template cast<U>(),
                          n.running_mean.template cast<U>(), n.running_var.template cast<U>(),
                          static_cast<U>(n.momentum), static_cast<U>(n.epsilon)});
    return out;
  }

  /// Same shapes, all trainable entries zero.
  Parameters zeros_like() const {
    Parameters out;
    for (const auto& a : affine)
      out.affine.push_back({Matrix<T>::Zero(a.weight.rows(), a.weight.cols()),
                            Vector<T>::Zero(a.bias.size())});
    for (const auto& n : norm)
      out.norm.push_back({Vector<T>::Zero(n.gamma.size()), Vector<T>::Zero(n.beta.size()), {}, {},
                          n.momentum, n.epsilon});
    return out;
  }

  std::size_t trainable_count() const {
    std::size_t n = 0;
    for (const auto& a : affine) n += static_cast<std::size_t>(a.weight.size() + a.bias.size());
    for (const auto& b : norm) n += static_cast<std::size_t>(b.gamma.size() + b.beta.size());
    return n;
  }
};

/// Calls f(span<T>) on each trainable tensor of each argument in lockstep.
template <typename F, typename P, typename... Ps>
void for_each_tensor(F&& f, P& first, Ps&... rest) {
  auto flat = [](auto& m) { return std::span(m.data(), static_cast<std::size_t>(m.size())); };
  for (std::size_t l = 0; l < first.affine.size(); ++l) {
    f(flat(first.affine[l].weight), flat(rest.affine[l].weight)...);
    f(flat(first.affine[l].bias), flat(rest.affine[l].bias)...);
  }
  for (std::size_t l = 0; l < first.norm.size(); ++l) {
    f(flat(first.norm[l].gamma), flat(rest.norm[l].gamma)...);
    f(flat(first.norm[l].beta), flat(rest.norm[l].beta)...);
  }
}

// ---------------------------------------------------------------------------
// Elementwise pieces

/// y_net = x W^T + w_0 for every row of x.
template <typename T>
Matrix<T> affine(const Matrix<T>& x, const Matrix<T>& weight, const Vector<T>& bias) {
  require(x.cols() == weight.cols() && weight.rows() == bias.size(), ErrorKind::Contract,
          "affine shape mismatch: input width " + std::to_string(x.cols()) + ", weight " +
              std::to_string(weight.rows()) + "x" + std::to_string(weight.cols()) + ", bias " +
              std::to_string(bias.size()));
  Matrix<T> y = x * weight.transpose();
  y.rowwise() += bias.transpose();
  return y;
}

template <typename T>
Matrix<T> relu(const Matrix<T>& z) {
  return z.cwiseMax(T(0));
}

template <typename T>
T sigmoid(T z) {
  // Branching keeps exp() from overflowing for large |z|.
  if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

template <typename T>
Matrix<T> sigmoid(const Matrix<T>& z) {
  return z.unaryExpr([](T v) { return sigmoid(v); });
}

/// Row-wise softmax with max subtraction.
template <typename T>
Matrix<T> softmax(const Matrix<T>& u) {
  Matrix<T> out(u.rows(), u.cols());
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const T shift = u.row(i).maxCoeff();
    T total = T(0);
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
      out(i, j) = std::exp(u(i, j) - shift);
      total += out(i, j);
    }
    out.row(i) /= total;
  }
  return out;
}

inline constexpr double kProbabilityClip = 1e-12;

/// Mean categorical cross-entropy; probabilities are clipped at 1e-12 before the log.
template <typename T>
T cross_entropy(const Matrix<T>& probs, const Matrix<T>& targets) {
  require(probs.rows() == targets.rows() && probs.cols() == targets.cols() && probs.rows() > 0,
          ErrorKind::Contract, "cross_entropy shape mismatch");
  T total = T(0);
  for (Eigen::Index i = 0; i < probs.rows(); ++i)
    for (Eigen::Index j = 0; j < probs.cols(); ++j)
      if (targets(i, j) != T(0))
        total -= targets(i, j) * std::log(std::max(probs(i, j), T(kProbabilityClip)));
  return total / static_cast<T>(probs.rows());
}

/// Half the summed squared error. Kept for reference; training uses cross_entropy.
template <typename T>
T mse_loss(const Matrix<T>& y_net, const Matrix<T>& y_out) {
  require(y_net.rows() == y_out.rows() && y_net.cols() == y_out.cols(), ErrorKind::Contract,
          "mse_loss shape mismatch");
  return T(0.5) * (y_net - y_out).squaredNorm();
}

/// Inverted dropout. Returns (output, mask) where mask entries are 0 or 1/(1-rate).
template <typename T>
std::pair<Matrix<T>, Matrix<T>> dropout_forward(const Matrix<T>& x, double rate, Mode mode,
                                                Rng& rng) {
  require(rate >= 0.0 && rate < 1.0, ErrorKind::Config, "dropout rate must lie in [0, 1)");
  if (mode == Mode::Eval || rate == 0.0) {
    return {x, Matrix<T>::Ones(x.rows(), x.cols())};
  }
  const T keep_scale = T(1) / T(1.0 - rate);
  Matrix<T> mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i)
    mask.data()[i] = rng.bernoulli(rate) ? T(0) : keep_scale;
  return {x.cwiseProduct(mask), std::move(mask)};
}

template <typename T>
struct BatchNormCache {
  Matrix<T> normalized;  // x_hat
  Vector<T> mean;
  Vector<T> var;
  Vector<T> inv_std;
};

template <typename T>
std::pair<Matrix<T>, BatchNormCache<T>> batchnorm_forward(const Matrix<T>& x,
                                                          const BatchNormLayer<T>& layer,
                                                          Mode mode) {
  require(x.cols() == layer.gamma.size(), ErrorKind::Contract, "batch-norm width mismatch");
  BatchNormCache<T> cache;
  if (mode == Mode::Train) {
    require(x.rows() >= 2, ErrorKind::DegenerateBatch,
            "batch normalization needs at least 2 samples in train mode");
    const T n = static_cast<T>(x.rows());
    cache.mean = x.colwise().sum().transpose() / n;
    const Matrix<T> centered = x.rowwise() - cache.mean.transpose();
    cache.var = centered.cwiseAbs2().colwise().sum().transpose() / n;
  } else {
    cache.mean = layer.running_mean;
    cache.var = layer.running_var;
  }
  cache.inv_std = (cache.var.array() + layer.epsilon).rsqrt().matrix();
  cache.normalized = (x.rowwise() - cache.mean.transpose()).array().rowwise() *
                     cache.inv_std.transpose().array();
  Matrix<T> y = cache.normalized.array().rowwise() * layer.gamma.transpose().array();
  y.rowwise() += layer.beta.transpose();
  return {std::move(y), std::move(cache)};
}

// ---------------------------------------------------------------------------
// Network

template <typename T>
struct HiddenCache {
  Matrix<T> input;
  BatchNormCache<T> norm;
  Matrix<T> activated;  // after the nonlinearity, before dropout
  Matrix<T> mask;       // empty when no dropout follows this layer
};

template <typename T>
struct ForwardResult {
  Matrix<T> probabilities;
  Mode mode = Mode::Eval;
  std::vector<HiddenCache<T>> hidden;
  Matrix<T> output_input;
};

/// Glorot-uniform weights, zero biases, identity batch-norm.
template <typename T>
Parameters<T> init_network(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed, 0);
  Parameters<T> p;
  for (std::size_t l = 0; l <= spec.n_hidden(); ++l) {
    const int in = spec.fan_in(l);
    const int out = spec.fan_out(l);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    AffineLayer<T> layer{Matrix<T>(out, in), Vector<T>::Zero(out)};
    // Row-major fill so the draw order is independent of storage order.
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) layer.weight(r, c) = static_cast<T>(rng.uniform(-limit, limit));
    p.affine.push_back(std::move(layer));
    if (spec.batch_norm && l < spec.n_hidden()) {
      p.norm.push_back({Vector<T>::Ones(out), Vector<T>::Zero(out), Vector<T>::Zero(out),
                        Vector<T>::Ones(out), T(0.9), T(1e-5)});
    }
  }
  return p;
}

template <typename T>
void check_shapes(const Parameters<T>& params, const NetworkSpec& spec) {
  require(params.affine.size() == spec.n_hidden() + 1, ErrorKind::Contract,
          "parameter layer count does not match the network spec");
  require(params.norm.size() == (spec.batch_norm ? spec.n_hidden() : 0), ErrorKind::Contract,
          "batch-norm layer count does not match the network spec");
  for (std::size_t l = 0; l < params.affine.size(); ++l) {
    require(params.affine[l].weight.rows() == spec.fan_out(l) &&
                params.affine[l].weight.cols() == spec.fan_in(l) &&
                params.affine[l].bias.size() == spec.fan_out(l),
            ErrorKind::Contract, "layer " + std::to_string(l) + " has the wrong shape");
  }
}

/// `rng` drives dropout masks and is only consulted in train mode.
template <typename T>
ForwardResult<T> forward(const Parameters<T>& params, const NetworkSpec& spec,
                         const Matrix<T>& batch, Mode mode, Rng* rng = nullptr) {
  require(batch.cols() == spec.input_dim, ErrorKind::Contract,
          "batch width " + std::to_string(batch.cols()) + " != input_dim " +
              std::to_string(spec.input_dim));
  check_shapes(params, spec);
  ForwardResult<T> out;
  out.mode = mode;
  const bool keep = mode == Mode::Train;
  Matrix<T> h = batch;
  for (std::size_t l = 0; l < spec.n_hidden(); ++l) {
    HiddenCache<T> cache;
    Matrix<T> z = affine(h, params.affine[l].weight, params.affine[l].bias);
    if (keep) cache.input = std::move(h);
    if (spec.batch_norm) {
      auto [y, norm] = batchnorm_forward(z, params.norm[l], mode);
      z = std::move(y);
      cache.norm = std::move(norm);
    }
    Matrix<T> a = spec.activation(l) == Activation::Relu ? relu(z) : sigmoid(z);
    if (spec.dropout_after(l) && mode == Mode::Train) {
      require(rng != nullptr, ErrorKind::Contract, "train-mode dropout needs an rng");
      auto [dropped, mask] = dropout_forward(a, spec.dropout_rate, mode, *rng);
      cache.activated = std::move(a);
      cache.mask = std::move(mask);
      h = std::move(dropped);
    } else {
      if (keep) cache.activated = a;
      h = std::move(a);
    }
    if (keep) out.hidden.push_back(std::move(cache));
  }
  const auto& last = params.affine.back();
  out.probabilities = softmax(affine(h, last.weight, last.bias));
  if (keep) out.output_input = std::move(h);
  return out;
}

/// Gradients of mean cross-entropy for the batch that produced `fwd`.
template <typename T>
Parameters<T> backward(const Parameters<T>& params, const NetworkSpec& spec,
                       const ForwardResult<T>& fwd, const Matrix<T>& targets) {
  require(fwd.mode == Mode::Train && fwd.hidden.size() == spec.n_hidden() &&
              fwd.output_input.rows() == fwd.probabilities.rows(),
          ErrorKind::Contract, "backward needs the caches of a train-mode forward pass");
  require(targets.rows() == fwd.probabilities.rows() &&
              targets.cols() == fwd.probabilities.cols(),
          ErrorKind::Contract, "targets do not match the forward batch");
  check_shapes(params, spec);

  Parameters<T> grads = params.zeros_like();
  const T n = static_cast<T>(targets.rows());

  // Fused softmax + cross-entropy.
  Matrix<T> delta = (fwd.probabilities - targets) / n;
  {
    auto& g = grads.affine.back();
    g.weight = delta.transpose() * fwd.output_input;
    g.bias = delta.colwise().sum().transpose();
    delta = delta * params.affine.back().weight;
  }

  for (std::size_t step = 0; step < spec.n_hidden(); ++step) {
    const std::size_t l = spec.n_hidden() - 1 - step;
    const auto& cache = fwd.hidden[l];
    if (cache.mask.size() != 0) delta = delta.cwiseProduct(cache.mask);
    if (spec.activation(l) == Activation::Relu) {
      delta = delta.cwiseProduct(
          cache.activated.unaryExpr([](T v) { return v > T(0) ? T(1) : T(0); }));
    } else {
      delta = delta.cwiseProduct(
          cache.activated.unaryExpr([](T s) { return s * (T(1) - s); }));
    }
    if (spec.batch_norm) {
      const auto& xhat = cache.norm.normalized;
      auto& g = grads.norm[l];
      g.beta = delta.colwise().sum().transpose();
      g.gamma = delta.cwiseProduct(xhat).colwise().sum().transpose();
      const Matrix<T> dxhat = delta.array().rowwise() * params.norm[l].gamma.transpose().array();
      const Vector<T> sum_dxhat = dxhat.colwise().sum().transpose();
      const Vector<T> sum_dxhat_xhat = dxhat.cwiseProduct(xhat).colwise().sum().transpose();
      Matrix<T> dz = dxhat * n;
      dz.rowwise() -= sum_dxhat.transpose();
      dz -= (xhat.array().rowwise() * sum_dxhat_xhat.transpose().array()).matrix();
      delta = (dz.array().rowwise() * (cache.norm.inv_std.transpose().array() / n)).matrix();
    }
    auto& g = grads.affine[l];
    g.weight = delta.transpose() * cache.input;
    g.bias = delta.colwise().sum().transpose();
    if (l > 0) delta = delta * params.affine[l].weight;
  }
  return grads;
}

/// Folds the batch statistics of a train-mode pass into the running statistics.
template <typename T>
void update_running_stats(Parameters<T>& params, const ForwardResult<T>& fwd) {
  if (fwd.mode != Mode::Train) return;
  for (std::size_t l = 0; l < params.norm.size(); ++l) {
    auto& layer = params.norm[l];
    const auto& cache = fwd.hidden[l].norm;
    layer.running_mean = layer.momentum * layer.running_mean + (T(1) - layer.momentum) * cache.mean;
    layer.running_var = layer.momentum * layer.running_var + (T(1) - layer.momentum) * cache.var;
  }
}

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  Parameters<T> m;
  Parameters<T> v;
  std::int64_t t = 0;
  AdamConfig config;

  static AdamState fresh(const Parameters<T>& params, AdamConfig config = {}) {
    return {params.zeros_like(), params.zeros_like(), 0, config};
  }
};

/// One bias-corrected Adam update of a flat tensor at (already incremented) step t.
template <typename T>
void adam_update(std::span<T> theta, std::span<const T> grad, std::span<T> m, std::span<T> v,
                 std::int64_t t, const AdamConfig& cfg) {
  require(theta.size() == grad.size() && theta.size() == m.size() && theta.size() == v.size(),
          ErrorKind::Contract, "adam tensor shape mismatch");
  require(t >= 1, ErrorKind::Contract, "adam step counter must be positive");
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  const T bias1 = T(1) - std::pow(b1, static_cast<T>(t));
  const T bias2 = T(1) - std::pow(b2, static_cast<T>(t));
  const T lr = static_cast<T>(cfg.learning_rate);
  const T eps = static_cast<T>(cfg.epsilon);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = b1 * m[i] + (T(1) - b1) * grad[i];
    v[i] = b2 * v[i] + (T(1) - b2) * grad[i] * grad[i];
    const T m_hat = m[i] / bias1;
    const T v_hat = v[i] / bias2;
    theta[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

template <typename T>
void adam_step(Parameters<T>& params, const Parameters<T>& grads, AdamState<T>& state) {
  require(params.affine.size() == grads.affine.size() && params.norm.size() == grads.norm.size() &&
              params.affine.size() == state.m.affine.size() &&
              params.norm.size() == state.m.norm.size(),
          ErrorKind::Contract, "adam parameter structure mismatch");
  ++state.t;
  for_each_tensor(
      [&](std::span<T> theta, std::span<const T> g, std::span<T> m, std::span<T> v) {
        adam_update<T>(theta, g, m, v, state.t, state.config);
      },
      params, grads, state.m, state.v);
}

// ---------------------------------------------------------------------------
// Training and inference (double precision)

struct TrainingConfig {
  int epochs = 500;
  int batch_size = 1000;
  double learning_rate = 0.01;
  /// Overrides NetworkSpec::dropout_rate when training.
  double dropout_rate = 0.2;
  int k_folds = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainingHistory {
  std::vector<EpochStats> epochs;

  /// CSV with header epoch,loss,accuracy.
  std::string to_csv() const;
};

struct NetworkModel {
  NetworkSpec spec;
  Parameters<double> params;
};

struct Prediction {
  std::vector<std::size_t> classes;
  Matrix<double> probabilities;
};

/// Called after every epoch with (epoch index, stats).
using EpochCallback = std::function<void(int, const EpochStats&)>;

/// Mini-batch Adam on mean cross-entropy. `data` must be encoded and normalized.
std::pair<NetworkModel, TrainingHistory> train(const Dataset& data, NetworkSpec spec,
                                               const TrainingConfig& config,
                                               const EpochCallback& on_epoch = {});

Prediction predict(const NetworkModel& model, const Matrix<double>& batch);
Prediction predict(const NetworkModel& model, std::span<const double> features);

/// Rows of `data` as an N x d matrix.
Matrix<double> to_matrix(const Dataset& data);
Matrix<double> one_hot_matrix(std::span<const std::size_t> targets, std::size_t n_classes);

/// Index of the largest entry; ties go to the lowest index.
template <typename Row>
std::size_t argmax(const Row& row) {
  std::size_t best = 0;
  for (Eigen::Index j = 1; j < row.size(); ++j)
    if (row(j) > row(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(j);
  return best;
}

}  // namespace flowclass::nn
