#include "flowclass/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "flowclass/error.hpp"
#include "flowclass/random.hpp"

namespace flowclass::baselines {

std::size_t argmax_decision(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

// ---------------------------------------------------------------------------
// KNN

KnnModel knn_fit(const Dataset& data, std::size_t k) {
  require(k >= 1, ErrorKind::Config, "k must be >= 1");
  require(data.encoded(), ErrorKind::Contract, "knn needs encoded labels");
  require(data.rows() >= k, ErrorKind::InsufficientData,
          "knn needs at least k=" + std::to_string(k) + " rows, got " +
              std::to_string(data.rows()));
  KnnModel model;
  model.k = k;
  model.n_features = data.cols();
  model.features = data.features;
  model.targets = data.targets;
  model.n_classes = *std::max_element(data.targets.begin(), data.targets.end()) + 1;
  return model;
}

std::size_t knn_predict(const KnnModel& model, std::span<const double> features) {
  require(features.size() == model.n_features, ErrorKind::Schema,
          "feature width " + std::to_string(features.size()) + " != model width " +
              std::to_string(model.n_features));
  const std::size_t n = model.rows();
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = model.features.data() + i * model.n_features;
    double s = 0.0;
    for (std::size_t j = 0; j < model.n_features; ++j) {
      const double diff = row[j] - features[j];
      s += diff * diff;
    }
    dist[i] = {s, i};
  }
  // Pair ordering breaks distance ties by row index.
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(model.k), dist.end());

  std::vector<std::size_t> votes(model.n_classes, 0);
  std::vector<double> summed(model.n_classes, 0.0);
  for (std::size_t r = 0; r < model.k; ++r) {
    const auto c = model.targets[dist[r].second];
    ++votes[c];
    summed[c] += std::sqrt(dist[r].first);
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < model.n_classes; ++c) {
    if (votes[c] > votes[best] || (votes[c] == votes[best] && summed[c] < summed[best])) best = c;
  }
  return best;
}

// ---------------------------------------------------------------------------
// SVM

std::vector<double> SvmModel::decision_values(std::span<const double> features) const {
  require(features.size() == n_features, ErrorKind::Schema,
          "feature width " + std::to_string(features.size()) + " != model width " +
              std::to_string(n_features));
  std::vector<double> out(weights.size());
  for (std::size_t c = 0; c < weights.size(); ++c)
    out[c] = std::inner_product(features.begin(), features.end(), weights[c].begin(), bias[c]);
  return out;
}

double svm_objective(const Dataset& data, std::size_t positive_class, std::span<const double> w,
                     double b, double lambda) {
  double hinge = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto x = data.row(i);
    const double y = data.targets[i] == positive_class ? 1.0 : -1.0;
    const double score = std::inner_product(x.begin(), x.end(), w.begin(), b);
    hinge += std::max(0.0, 1.0 - y * score);
  }
  const double norm2 = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
  return 0.5 * lambda * norm2 + hinge / static_cast<double>(data.rows());
}

SvmModel svm_fit(const Dataset& data, const SvmParams& params) {
  require(data.encoded(), ErrorKind::Contract, "svm needs encoded labels");
  require(data.rows() >= 2, ErrorKind::InsufficientData, "svm needs at least 2 rows");
  require(params.lambda > 0.0 && params.learning_rate > 0.0 && params.epochs >= 1,
          ErrorKind::Config, "svm needs lambda > 0, learning rate > 0, epochs >= 1");
  const std::set<std::size_t> distinct(data.targets.begin(), data.targets.end());
  require(distinct.size() >= 2, ErrorKind::DegenerateLabel,
          "svm needs at least 2 classes in the training data");

  const std::size_t d = data.cols();
  const std::size_t n = data.rows();
  std::vector<std::size_t> canonical(n);
  std::iota(canonical.begin(), canonical.end(), std::size_t{0});
  std::stable_sort(canonical.begin(), canonical.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = data.row(a);
    const auto rb = data.row(b);
    const int cmp = std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end())
                        ? -1
                        : (std::equal(ra.begin(), ra.end(), rb.begin()) ? 0 : 1);
    if (cmp != 0) return cmp < 0;
    return data.targets[a] < data.targets[b];
  });

  SvmModel model;
  model.n_features = d;
  model.params = params;
  const std::size_t n_classes = *distinct.rbegin() + 1;
  model.weights.assign(n_classes, std::vector<double>(d, 0.0));
  model.bias.assign(n_classes, 0.0);

  for (std::size_t c = 0; c < n_classes; ++c) {
    auto& w = model.weights[c];
    double& b = model.bias[c];
    Rng rng(params.seed);
    std::vector<std::size_t> order = canonical;
    double t = 0.0;
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
      rng.shuffle(std::span<std::size_t>(order));
      for (auto i : order) {
        const double eta = params.learning_rate / (1.0 + params.learning_rate * params.lambda * t);
        const auto x = data.row(i);
        const double y = data.targets[i] == c ? 1.0 : -1.0;
        const double margin = y * std::inner_product(x.begin(), x.end(), w.begin(), b);
        const double shrink = 1.0 - eta * params.lambda;
        for (auto& wj : w) wj *= shrink;
        if (margin < 1.0) {
          for (std::size_t j = 0; j < d; ++j) w[j] += eta * y * x[j];
          b += eta * y;
        }
        t += 1.0;
      }
    }
  }
  return model;
}

std::size_t svm_predict(const SvmModel& model, std::span<const double> features) {
  const auto values = model.decision_values(features);
  return argmax_decision(values);
}

}  // namespace flowclass::baselines
