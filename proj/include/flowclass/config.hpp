#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowclass/baselines.hpp"
#include "flowclass/dataset.hpp"
#include "flowclass/eval.hpp"
#include "flowclass/nn.hpp"

namespace flowclass {

enum class ModelKind { Dnn, Knn, Svm };

const char* to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(const std::string& text);

/// Everything a pipeline command needs. Serialized as JSON; unknown keys are rejected.
struct RunConfig {
  std::string data;
  FeatureSchema schema = FeatureSchema::flow_default();
  std::vector<std::string> classes;  // allow-list; empty keeps every class
  ModelKind model_kind = ModelKind::Dnn;
  std::optional<std::uint64_t> seed;

  // DNN
  int epochs = 500;
  int batch_size = 1000;
  double learning_rate = 0.01;
  double dropout_rate = 0.2;
  int hidden_layers = 7;
  int hidden_width = 16;
  bool batch_norm = true;

  // Baselines
  std::size_t knn_k = 5;
  double svm_lambda = 1e-4;
  int svm_epochs = 20;
  double svm_learning_rate = 0.1;

  // Feature selection; 0 keeps every feature.
  std::size_t top_k = 0;
  int et_trees = 100;
  std::optional<int> et_max_depth;

  // Evaluation protocol
  double train_fraction = 0.7;
  int folds = 10;
  bool stratified = false;
  std::optional<std::size_t> per_class_cap;
  bool macro_average = false;

  nlohmann::ordered_json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);

  void validate() const;
  std::uint64_t require_seed() const;

  nn::NetworkSpec network_spec(std::size_t input_dim, std::size_t n_classes) const;
  nn::TrainingConfig training_config(std::uint64_t seed) const;
  baselines::SvmParams svm_params(std::uint64_t seed) const;
  eval::Averaging averaging() const {
    return macro_average ? eval::Averaging::Macro : eval::Averaging::Weighted;
  }

  /// FNV-1a over the canonical JSON of the settings that influence a fit
  /// (the data path is excluded).
  std::uint64_t fingerprint() const;
};

/// Overrides fields of `base` with the given key/value pairs. Values are JSON
/// text; bare words that are not valid JSON are taken as strings.
RunConfig apply_assignment(const RunConfig& base, const eval::Assignment& assignment);

std::uint64_t fnv1a(const std::string& bytes);

}  // namespace flowclass
