#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "flowclass/config.hpp"
#include "flowclass/error.hpp"
#include "flowclass/model_io.hpp"
#include "flowclass/pipeline.hpp"
#include "synthetic.hpp"

using namespace flowclass;
namespace fs = std::filesystem;

namespace {

RunConfig small_config(ModelKind kind, std::size_t d) {
  RunConfig c;
  c.schema = testing::numbered_schema(d);
  c.model_kind = kind;
  c.seed = 11;
  c.epochs = 15;
  c.batch_size = 32;
  c.hidden_layers = 2;
  c.hidden_width = 8;
  c.et_trees = 10;
  c.folds = 3;
  return c;
}

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("flowclass_pipeline_" + name);
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Contract;
}

}  // namespace

TEST_CASE("config JSON round trip") {
  RunConfig c = small_config(ModelKind::Svm, 3);
  c.classes = {"WWW", "P2P"};
  c.et_max_depth = 4;
  c.per_class_cap = 100;
  c.macro_average = true;
  const auto back = RunConfig::from_json(nlohmann::json::parse(c.to_json().dump()));
  CHECK(back.to_json() == c.to_json());
  CHECK(back.fingerprint() == c.fingerprint());

  RunConfig other = c;
  other.data = "/elsewhere.csv";
  CHECK(other.fingerprint() == c.fingerprint());
  other.epochs += 1;
  CHECK(other.fingerprint() != c.fingerprint());
}

TEST_CASE("config defaults") {
  const RunConfig c;
  CHECK(c.epochs == 500);
  CHECK(c.batch_size == 1000);
  CHECK(c.learning_rate == 0.01);
  CHECK(c.dropout_rate == 0.2);
  CHECK(c.folds == 10);
  CHECK(c.train_fraction == 0.7);
  const auto spec = c.network_spec(12, 7);
  CHECK(spec.hidden_layers == std::vector<int>(7, 16));
  CHECK(spec.n_classes == 7);
  CHECK(kind_of([&] { c.require_seed(); }) == ErrorKind::Config);
}

TEST_CASE("config rejects bad input") {
  CHECK(kind_of([] { RunConfig::from_json(nlohmann::json{{"epoch", 3}}); }) == ErrorKind::Config);
  CHECK(kind_of([] { RunConfig::from_json(nlohmann::json{{"epochs", "many"}}); }) ==
        ErrorKind::Config);
  CHECK(kind_of([] { RunConfig::from_json(nlohmann::json{{"model_kind", "tree"}}); }) ==
        ErrorKind::Config);
  CHECK(kind_of([] { RunConfig::from_json(nlohmann::json{{"train_fraction", 1.0}}); }) ==
        ErrorKind::Config);
  CHECK(kind_of([] { RunConfig::from_json(nlohmann::json{{"top_k", 13}}); }) == ErrorKind::Config);
}

TEST_CASE("grid assignments override config fields") {
  const RunConfig base = small_config(ModelKind::Dnn, 4);
  const auto c = apply_assignment(base, {{"learning_rate", "0.05"}, {"model_kind", "knn"}});
  CHECK(c.learning_rate == 0.05);
  CHECK(c.model_kind == ModelKind::Knn);
  CHECK(c.epochs == base.epochs);
  CHECK(kind_of([&] { apply_assignment(base, {{"nonsense", "1"}}); }) == ErrorKind::Config);
  CHECK(kind_of([&] { apply_assignment(base, {{"epochs", "0"}}); }) == ErrorKind::Config);
}

TEST_CASE("preprocessing uses train-split statistics only") {
  auto data = testing::make_blobs(200, 2, 3, 3.0, 5);
  const auto codec = fit_label_codec(data.labels);
  auto config = small_config(ModelKind::Knn, 3);
  const auto split = split_indices(data.rows(), 0.7, 1);
  const auto train = data.subset(split.train);
  const auto fit = fit_pipeline(train, codec, config, 1);
  const auto expected = fit_normalizer(train);
  CHECK(fit.pipeline.preprocess().normalizer.min == expected.min);
  CHECK(fit.pipeline.preprocess().normalizer.max == expected.max);
  CHECK(fit.pipeline.preprocess().selected == std::vector<std::size_t>{0, 1, 2});
  CHECK_FALSE(fit.importance.has_value());
}

TEST_CASE("top-k selection restricts the model input") {
  const auto data = testing::make_informative(400, 6, {2, 5}, 3);
  const auto codec = fit_label_codec(data.labels);
  auto config = small_config(ModelKind::Dnn, 6);
  config.top_k = 2;
  const auto fit = fit_pipeline(data, codec, config, 4);
  REQUIRE(fit.importance.has_value());
  auto selected = fit.pipeline.preprocess().selected;
  std::sort(selected.begin(), selected.end());
  CHECK(selected == std::vector<std::size_t>{2, 5});
  CHECK(std::get<nn::NetworkModel>(fit.pipeline.model()).spec.input_dim == 2);
  CHECK(fit.history.epochs.size() == 15);
}

TEST_CASE("holdout evaluation for every model kind") {
  const auto data = testing::make_blobs(300, 3, 4, 5.0, 9);
  const auto codec = fit_label_codec(data.labels);
  for (auto kind : {ModelKind::Dnn, ModelKind::Knn, ModelKind::Svm}) {
    CAPTURE(to_string(kind));
    auto config = small_config(kind, 4);
    config.epochs = 60;
    const auto out = run_holdout(data, codec, config);
    CHECK(out.report.total == 90);
    CHECK(out.confusion.total() == 90);
    CHECK(out.report.accuracy >= 0.9);
    CHECK(out.fit.pipeline.kind() == kind);
  }
}

TEST_CASE("model files round-trip exactly") {
  const auto data = testing::make_blobs(150, 3, 4, 2.0, 21);
  const auto codec = fit_label_codec(data.labels);
  for (auto kind : {ModelKind::Dnn, ModelKind::Knn, ModelKind::Svm}) {
    CAPTURE(to_string(kind));
    auto config = small_config(kind, 4);
    config.top_k = 3;
    const auto fit = fit_pipeline(data, codec, config, 2);
    const auto path = temp_path(std::string("model_") + to_string(kind) + ".json");
    save_model(fit.pipeline, path);
    const auto loaded = load_model(path);
    CHECK(loaded.kind() == kind);
    CHECK(loaded.fingerprint() == fit.pipeline.fingerprint());
    CHECK(loaded.preprocess().selected == fit.pipeline.preprocess().selected);
    CHECK(model_to_json(loaded).dump() == model_to_json(fit.pipeline).dump());
    for (std::size_t i = 0; i < data.rows(); ++i) {
      CHECK(loaded.predict(data.row(i)) == fit.pipeline.predict(data.row(i)));
      if (kind == ModelKind::Dnn) CHECK(loaded.probabilities(data.row(i)) == fit.pipeline.probabilities(data.row(i)));
    }
    fs::remove(path);
  }
}

TEST_CASE("model loading errors") {
  const auto path = temp_path("bad_model.json");
  auto write = [&](const std::string& text) {
    std::ofstream(path) << text;
  };
  write("{not json");
  CHECK(kind_of([&] { load_model(path); }) == ErrorKind::Format);
  write(R"({"kind": "dnn"})");
  CHECK(kind_of([&] { load_model(path); }) == ErrorKind::Format);
  write(R"({"format_version": 2})");
  try {
    load_model(path);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Format);
    CHECK(std::string(e.what()).find("format_version 2") != std::string::npos);
  }
  write(R"({"format_version": 1, "kind": "dnn"})");
  CHECK(kind_of([&] { load_model(path); }) == ErrorKind::Format);
  fs::remove(path);
  CHECK(kind_of([&] { load_model(path); }) == ErrorKind::Io);
}

TEST_CASE("a loaded model rejects rows of the wrong width") {
  const auto data = testing::make_blobs(50, 2, 3, 2.0, 1);
  const auto codec = fit_label_codec(data.labels);
  const auto fit = fit_pipeline(data, codec, small_config(ModelKind::Knn, 3), 0);
  const std::vector<double> narrow{1.0, 2.0};
  CHECK(kind_of([&] { fit.pipeline.predict(narrow); }) == ErrorKind::Schema);
  CHECK(kind_of([&] { fit.pipeline.probabilities(data.row(0)); }) == ErrorKind::Contract);
}

TEST_CASE("cross-validation and grid search through the pipeline") {
  const auto data = testing::make_blobs(120, 2, 3, 4.0, 6);
  const auto codec = fit_label_codec(data.labels);
  const auto config = small_config(ModelKind::Knn, 3);
  const auto cv = run_cross_validation(data, codec, config);
  CHECK(cv.folds.size() == 3);
  CHECK(cv.average.accuracy >= 0.9);

  eval::GridSpec grid{{{"knn_k", {"1", "3"}}, {"model_kind", {"knn", "svm"}}}};
  const auto gs = run_grid_search(grid, data, codec, config, Protocol::Holdout);
  CHECK(gs.ranked.size() == 4);
  for (std::size_t i = 1; i < gs.ranked.size(); ++i)
    CHECK(gs.ranked[i - 1].report.accuracy >= gs.ranked[i].report.accuracy);

  eval::GridSpec bad{{{"knn_k", {"1", "0"}}}};
  CHECK(kind_of([&] { run_grid_search(bad, data, codec, config, Protocol::Holdout); }) ==
        ErrorKind::Config);
}

TEST_CASE("training data loading applies the allow-list") {
  const auto path = temp_path("flows.csv");
  std::ofstream(path) << "f1,f2,class\n1,2,A\n3,4,B\n5,6,C\n7,8,A\n";
  RunConfig c = small_config(ModelKind::Knn, 2);
  c.data = path.string();
  c.classes = {"A", "C"};
  const auto loaded = load_training_data(c);
  CHECK(loaded.data.rows() == 3);
  CHECK(loaded.dropped_rows == 1);
  CHECK(loaded.codec.classes() == std::vector<std::string>{"A", "C"});
  CHECK(loaded.data.targets == std::vector<std::size_t>{0, 1, 0});
  c.classes = {"Z"};
  CHECK(kind_of([&] { load_training_data(c); }) == ErrorKind::EmptyInput);
  fs::remove(path);
}

TEST_CASE("feature ranking covers every column") {
  const auto data = testing::make_informative(300, 5, {3}, 2);
  const auto r = rank_features(data, small_config(ModelKind::Dnn, 5), 1);
  CHECK(r.scores.size() == 5);
  CHECK(r.ranking.front() == 3);
}
