#include "flowclass/pipeline.hpp"

#include <numeric>

#include "flowclass/error.hpp"

namespace flowclass {

std::vector<double> PreprocessState::transform(std::span<const double> raw) const {
  require(raw.size() == schema.width(), ErrorKind::Schema,
          "row width " + std::to_string(raw.size()) + " != schema width " +
              std::to_string(schema.width()));
  std::vector<double> scaled(raw.begin(), raw.end());
  normalize_row(scaled, normalizer);
  std::vector<double> out;
  out.reserve(selected.size());
  for (auto c : selected) out.push_back(scaled[c]);
  return out;
}

Dataset PreprocessState::transform(const Dataset& raw) const {
  require(raw.schema.names == schema.names, ErrorKind::Schema,
          "dataset columns do not match the fitted schema");
  return apply_normalizer(raw, normalizer).project(selected);
}

TrainedPipeline::TrainedPipeline(PreprocessState prep, ModelVariant model, Fingerprint fingerprint)
    : prep_(std::move(prep)), model_(std::move(model)), fingerprint_(fingerprint) {}

ModelKind TrainedPipeline::kind() const noexcept {
  switch (model_.index()) {
    case 1: return ModelKind::Knn;
    case 2: return ModelKind::Svm;
    default: return ModelKind::Dnn;
  }
}

std::size_t TrainedPipeline::predict(std::span<const double> raw) const {
  const auto x = prep_.transform(raw);
  return std::visit(
      [&](const auto& m) -> std::size_t {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, nn::NetworkModel>) {
          return nn::predict(m, x).classes.front();
        } else if constexpr (std::is_same_v<M, baselines::KnnModel>) {
          return baselines::knn_predict(m, x);
        } else {
          return baselines::svm_predict(m, x);
        }
      },
      model_);
}

std::vector<double> TrainedPipeline::probabilities(std::span<const double> raw) const {
  const auto* net = std::get_if<nn::NetworkModel>(&model_);
  require(net != nullptr, ErrorKind::Contract, "probabilities are only available for the dnn");
  const auto p = nn::predict(*net, prep_.transform(raw)).probabilities;
  return {p.data(), p.data() + p.size()};
}

featsel::ImportanceReport rank_features(const Dataset& data, const RunConfig& config,
                                        std::uint64_t seed) {
  const Dataset scaled = apply_normalizer(data, fit_normalizer(data));
  featsel::ExtraTreesParams params;
  params.n_trees = config.et_trees;
  params.max_depth = config.et_max_depth;
  params.seed = seed;
  return featsel::feature_importances(featsel::fit_extra_trees(scaled, params));
}

FitOutcome fit_pipeline(const Dataset& train, const LabelCodec& codec, const RunConfig& config,
                        std::uint64_t seed) {
  require(train.encoded(), ErrorKind::Contract, "training rows must have encoded labels");
  PreprocessState prep;
  prep.schema = train.schema;
  prep.codec = codec;
  prep.normalizer = fit_normalizer(train);
  const Dataset scaled = apply_normalizer(train, prep.normalizer);

  std::optional<featsel::ImportanceReport> importance;
  const std::size_t d = train.cols();
  if (config.top_k > 0 && config.top_k < d) {
    featsel::ExtraTreesParams params;
    params.n_trees = config.et_trees;
    params.max_depth = config.et_max_depth;
    params.seed = seed;
    importance = featsel::feature_importances(featsel::fit_extra_trees(scaled, params));
    prep.selected = featsel::select_top_k(*importance, config.top_k);
  } else {
    prep.selected.resize(d);
    std::iota(prep.selected.begin(), prep.selected.end(), std::size_t{0});
  }
  const Dataset input = scaled.project(prep.selected);

  const Fingerprint fingerprint{seed, config.fingerprint()};
  nn::TrainingHistory history;
  ModelVariant model;
  switch (config.model_kind) {
    case ModelKind::Dnn: {
      auto [net, hist] = nn::train(input, config.network_spec(input.cols(), codec.size()),
                                   config.training_config(seed));
      model = std::move(net);
      history = std::move(hist);
      break;
    }
    case ModelKind::Knn:
      model = baselines::knn_fit(input, config.knn_k);
      break;
    case ModelKind::Svm:
      model = baselines::svm_fit(input, config.svm_params(seed));
      break;
  }
  return {TrainedPipeline(std::move(prep), std::move(model), fingerprint), std::move(history),
          std::move(importance)};
}

eval::Trainer make_trainer(const LabelCodec& codec, const RunConfig& config) {
  return [codec, config](const Dataset& train, std::uint64_t seed) {
    return std::make_unique<TrainedPipeline>(fit_pipeline(train, codec, config, seed).pipeline);
  };
}

LoadedData encode_dataset(Dataset data) {
  LoadedData out;
  out.codec = fit_label_codec(data.labels);
  encode_labels(data, out.codec);
  out.data = std::move(data);
  return out;
}

LoadedData load_training_data(const RunConfig& config) {
  require(!config.data.empty(), ErrorKind::Config, "no data path given (--data)");
  auto loaded = load_csv(config.data, config.schema, LoadOptions{config.classes, true});
  require(!loaded.data.empty(), ErrorKind::EmptyInput,
          "'" + config.data + "': no rows left after the class allow-list");
  auto out = encode_dataset(std::move(loaded.data));
  out.dropped_rows = loaded.dropped_rows;
  return out;
}

HoldoutOutcome run_holdout(const Dataset& data, const LabelCodec& codec, const RunConfig& config) {
  const auto seed = config.require_seed();
  const auto split = split_indices(data.rows(), config.train_fraction, seed);
  const Dataset train = data.subset(split.train);
  const Dataset test = data.subset(split.test);
  auto fit = fit_pipeline(train, codec, config, seed);
  std::vector<std::size_t> predicted(test.rows());
  for (std::size_t i = 0; i < test.rows(); ++i) predicted[i] = fit.pipeline.predict(test.row(i));
  auto cm = eval::confusion(test.targets, predicted, codec.size(), codec.classes());
  auto report = eval::metrics(cm, config.averaging());
  return {std::move(fit), std::move(report), std::move(cm)};
}

eval::CvResult run_cross_validation(const Dataset& data, const LabelCodec& codec,
                                    const RunConfig& config) {
  eval::CvOptions options;
  options.k = static_cast<std::size_t>(config.folds);
  options.seed = config.require_seed();
  options.stratified = config.stratified;
  options.per_class_cap = config.per_class_cap;
  options.averaging = config.averaging();
  return eval::cross_validate(data, codec, make_trainer(codec, config), options);
}

eval::GridSearchResult run_grid_search(const eval::GridSpec& grid, const Dataset& data,
                                       const LabelCodec& codec, const RunConfig& base,
                                       Protocol protocol) {
  base.require_seed();
  grid.validate();
  // Reject bad axes before any training starts.
  for (const auto& cell : grid.cells()) apply_assignment(base, cell);
  return eval::grid_search(grid, [&](const eval::Assignment& cell) {
    const RunConfig config = apply_assignment(base, cell);
    if (protocol == Protocol::Holdout) return run_holdout(data, codec, config).report;
    return run_cross_validation(data, codec, config).average;
  });
}

}  // namespace flowclass
