#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "flowclass/dataset.hpp"

namespace flowclass::baselines {

/// Brute-force k-nearest-neighbour classifier on Euclidean distance.
struct KnnModel {
  std::size_t k = 5;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  std::vector<double> features;  // row-major copy of the training rows
  std::vector<std::size_t> targets;

  std::size_t rows() const noexcept { return targets.size(); }
};

KnnModel knn_fit(const Dataset& data, std::size_t k = 5);

/// Majority label among the k nearest rows. Distance ties go to the lower
/// row index; vote ties to the smaller summed distance, then the lower class.
std::size_t knn_predict(const KnnModel& model, std::span<const double> features);

struct SvmParams {
  double lambda = 1e-4;
  int epochs = 20;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;
};

/// One-vs-rest linear SVM: one (weight, bias) pair per class.
struct SvmModel {
  std::size_t n_features = 0;
  std::vector<std::vector<double>> weights;
  std::vector<double> bias;
  SvmParams params;

  std::size_t n_classes() const noexcept { return weights.size(); }
  std::vector<double> decision_values(std::span<const double> features) const;
};

/// Regularized hinge-loss objective of one binary problem over the full data.
double svm_objective(const Dataset& data, std::size_t positive_class, std::span<const double> w,
                     double b, double lambda);

/// Stochastic subgradient descent on lambda/2 |w|^2 + mean hinge loss, step
/// lr / (1 + lr * lambda * t). Rows are put in canonical order before the
/// seeded shuffle, so the fit does not depend on input row order.
SvmModel svm_fit(const Dataset& data, const SvmParams& params = {});

std::size_t svm_predict(const SvmModel& model, std::span<const double> features);

/// argmax with ties to the lowest index.
std::size_t argmax_decision(std::span<const double> values);

}  // namespace flowclass::baselines
