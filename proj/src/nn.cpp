#include "flowclass/nn.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace flowclass::nn {

void NetworkSpec::validate() const {
  require(input_dim >= 1, ErrorKind::Config, "input_dim must be >= 1");
  require(n_classes >= 1, ErrorKind::Config, "n_classes must be >= 1");
  for (int w : hidden_layers) require(w >= 1, ErrorKind::Config, "hidden widths must be >= 1");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, ErrorKind::Config,
          "dropout rate must lie in [0, 1)");
}

void TrainingConfig::validate() const {
  require(epochs >= 1, ErrorKind::Config, "epochs must be >= 1");
  require(batch_size >= 1, ErrorKind::Config, "batch size must be >= 1");
  require(learning_rate > 0.0, ErrorKind::Config, "learning rate must be positive");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, ErrorKind::Config,
          "dropout rate must lie in [0, 1)");
  require(k_folds >= 2, ErrorKind::Config, "k_folds must be >= 2");
}

std::string TrainingHistory::to_csv() const {
  std::ostringstream out;
  out << "epoch,loss,accuracy\n";
  char buf[96];
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", e + 1, epochs[e].loss, epochs[e].accuracy);
    out << buf;
  }
  return out.str();
}

Matrix<double> to_matrix(const Dataset& data) {
  Matrix<double> m(static_cast<Eigen::Index>(data.rows()), static_cast<Eigen::Index>(data.cols()));
  for (std::size_t i = 0; i < data.rows(); ++i)
    for (std::size_t j = 0; j < data.cols(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data.at(i, j);
  return m;
}

Matrix<double> one_hot_matrix(std::span<const std::size_t> targets, std::size_t n_classes) {
  Matrix<double> y = Matrix<double>::Zero(static_cast<Eigen::Index>(targets.size()),
                                          static_cast<Eigen::Index>(n_classes));
  for (std::size_t i = 0; i < targets.size(); ++i) {
    require(targets[i] < n_classes, ErrorKind::Bounds, "target index out of range");
    y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(targets[i])) = 1.0;
  }
  return y;
}

namespace {

/// Batch boundaries over `n` rows. A trailing batch of one row is folded into
/// its predecessor since batch normalization cannot train on a single sample.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch,
                                                              bool merge_singleton) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t start = 0; start < n; start += batch)
    ranges.emplace_back(start, std::min(n, start + batch));
  if (merge_singleton && ranges.size() > 1 && ranges.back().second - ranges.back().first == 1) {
    ranges[ranges.size() - 2].second = n;
    ranges.pop_back();
  }
  return ranges;
}

}  // namespace

std::pair<NetworkModel, TrainingHistory> train(const Dataset& data, NetworkSpec spec,
                                               const TrainingConfig& config,
                                               const EpochCallback& on_epoch) {
  config.validate();
  require(!data.empty(), ErrorKind::EmptyInput, "cannot train on an empty dataset");
  require(data.rows() >= 2, ErrorKind::InsufficientData, "training needs at least 2 rows");
  require(data.encoded(), ErrorKind::Contract, "training data must have encoded labels");
  spec.dropout_rate = config.dropout_rate;
  spec.validate();
  require(static_cast<int>(data.cols()) == spec.input_dim, ErrorKind::Schema,
          "data width " + std::to_string(data.cols()) + " != input_dim " +
              std::to_string(spec.input_dim));
  for (auto t : data.targets)
    require(t < static_cast<std::size_t>(spec.n_classes), ErrorKind::Bounds,
            "label index " + std::to_string(t) + " >= n_classes " + std::to_string(spec.n_classes));

  NetworkModel model{spec, init_network<double>(spec, config.seed)};
  auto adam = AdamState<double>::fresh(
      model.params, AdamConfig{.learning_rate = config.learning_rate});
  Rng shuffle_rng(config.seed, 1);
  Rng dropout_rng(config.seed, 2);

  const Matrix<double> x_all = to_matrix(data);
  const Matrix<double> y_all = one_hot_matrix(data.targets, static_cast<std::size_t>(spec.n_classes));
  const std::size_t n = data.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto ranges =
      batch_ranges(n, static_cast<std::size_t>(config.batch_size), spec.batch_norm);

  TrainingHistory history;
  Matrix<double> xb, yb;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < ranges.size(); ++b) {
      const auto [begin, end] = ranges[b];
      const auto rows = static_cast<Eigen::Index>(end - begin);
      xb.resize(rows, x_all.cols());
      yb.resize(rows, y_all.cols());
      for (Eigen::Index r = 0; r < rows; ++r) {
        const auto src = static_cast<Eigen::Index>(order[begin + static_cast<std::size_t>(r)]);
        xb.row(r) = x_all.row(src);
        yb.row(r) = y_all.row(src);
      }
      auto fwd = forward(model.params, spec, xb, Mode::Train, &dropout_rng);
      const double loss = cross_entropy(fwd.probabilities, yb);
      if (!std::isfinite(loss)) {
        throw DivergenceError(epoch + 1, static_cast<int>(b + 1),
                              "non-finite loss at epoch " + std::to_string(epoch + 1) +
                                  ", batch " + std::to_string(b + 1));
      }
      loss_sum += loss * static_cast<double>(rows);
      for (Eigen::Index r = 0; r < rows; ++r)
        if (argmax(fwd.probabilities.row(r)) == argmax(yb.row(r))) ++correct;
      const auto grads = backward(model.params, spec, fwd, yb);
      update_running_stats(model.params, fwd);
      adam_step(model.params, grads, adam);
    }
    const EpochStats stats{loss_sum / static_cast<double>(n),
                           static_cast<double>(correct) / static_cast<double>(n)};
    history.epochs.push_back(stats);
    if (on_epoch) on_epoch(epoch, stats);
  }
  return {std::move(model), std::move(history)};
}

Prediction predict(const NetworkModel& model, const Matrix<double>& batch) {
  require(batch.cols() == model.spec.input_dim, ErrorKind::Schema,
          "feature width " + std::to_string(batch.cols()) + " != input_dim " +
              std::to_string(model.spec.input_dim));
  Prediction out;
  out.probabilities = forward(model.params, model.spec, batch, Mode::Eval).probabilities;
  out.classes.reserve(static_cast<std::size_t>(batch.rows()));
  for (Eigen::Index r = 0; r < out.probabilities.rows(); ++r)
    out.classes.push_back(argmax(out.probabilities.row(r)));
  return out;
}

Prediction predict(const NetworkModel& model, std::span<const double> features) {
  Matrix<double> row(1, static_cast<Eigen::Index>(features.size()));
  for (std::size_t j = 0; j < features.size(); ++j) row(0, static_cast<Eigen::Index>(j)) = features[j];
  return predict(model, row);
}

}  // namespace flowclass::nn
