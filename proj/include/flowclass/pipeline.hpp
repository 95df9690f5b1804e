#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "flowclass/baselines.hpp"
#include "flowclass/config.hpp"
#include "flowclass/dataset.hpp"
#include "flowclass/eval.hpp"
#include "flowclass/featsel.hpp"
#include "flowclass/nn.hpp"

namespace flowclass {

/// Everything needed to replay training-time preprocessing on a raw row.
struct PreprocessState {
  FeatureSchema schema;
  LabelCodec codec;
  NormalizationParams normalizer;
  /// Columns fed to the model, in order, after normalization.
  std::vector<std::size_t> selected;

  std::vector<double> transform(std::span<const double> raw) const;
  Dataset transform(const Dataset& raw) const;
};

struct Fingerprint {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  bool operator==(const Fingerprint&) const = default;
};

using ModelVariant = std::variant<nn::NetworkModel, baselines::KnnModel, baselines::SvmModel>;

/// A fitted preprocessing + classifier pair; the unit saved to a model file.
class TrainedPipeline : public eval::Classifier {
 public:
  TrainedPipeline(PreprocessState prep, ModelVariant model, Fingerprint fingerprint);

  ModelKind kind() const noexcept;
  const PreprocessState& preprocess() const noexcept { return prep_; }
  const ModelVariant& model() const noexcept { return model_; }
  const Fingerprint& fingerprint() const noexcept { return fingerprint_; }

  std::size_t predict(std::span<const double> raw) const override;
  /// Class probabilities; only available for the DNN.
  std::vector<double> probabilities(std::span<const double> raw) const;

 private:
  PreprocessState prep_;
  ModelVariant model_;
  Fingerprint fingerprint_;
};

struct FitOutcome {
  TrainedPipeline pipeline;
  nn::TrainingHistory history;  // empty for the baselines
  std::optional<featsel::ImportanceReport> importance;
};

/// Fits normalizer, optional top-k selection and the model on encoded raw rows.
FitOutcome fit_pipeline(const Dataset& train, const LabelCodec& codec, const RunConfig& config,
                        std::uint64_t seed);

eval::Trainer make_trainer(const LabelCodec& codec, const RunConfig& config);

struct LoadedData {
  Dataset data;  // encoded
  LabelCodec codec;
  std::size_t dropped_rows = 0;
};

/// Reads config.data with the configured schema and allow-list, then encodes labels.
LoadedData load_training_data(const RunConfig& config);
LoadedData encode_dataset(Dataset data);

struct HoldoutOutcome {
  FitOutcome fit;
  eval::EvalReport report;
  eval::ConfusionMatrix confusion;
};

/// Seeded split, fit on the train part, evaluate on the test part.
HoldoutOutcome run_holdout(const Dataset& data, const LabelCodec& codec, const RunConfig& config);

eval::CvResult run_cross_validation(const Dataset& data, const LabelCodec& codec,
                                    const RunConfig& config);

enum class Protocol { Holdout, CrossValidation };

eval::GridSearchResult run_grid_search(const eval::GridSpec& grid, const Dataset& data,
                                       const LabelCodec& codec, const RunConfig& base,
                                       Protocol protocol);

/// Extra-trees ranking on min-max scaled data.
featsel::ImportanceReport rank_features(const Dataset& data, const RunConfig& config,
                                        std::uint64_t seed);

}  // namespace flowclass
