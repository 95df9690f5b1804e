#include "flowclass/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include "flowclass/config.hpp"
#include "flowclass/error.hpp"
#include "flowclass/model_io.hpp"
#include "flowclass/pipeline.hpp"

namespace flowclass {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct SharedFlags {
  std::string config;
  std::string data;
  std::string model;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> folds;
  std::vector<std::string> classes;
  std::string model_kind;

  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<double> learning_rate;
  std::optional<double> dropout;
  std::optional<int> hidden_layers;
  std::optional<std::size_t> top_k;
  std::optional<double> train_fraction;
  std::optional<std::size_t> knn_k;
  bool stratified = false;
  bool macro = false;

  // gridsearch
  std::string grid;
  std::string best;
  std::string protocol;
};

void add_shared(CLI::App* cmd, SharedFlags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration; flags override its values");
  cmd->add_option("--data", f.data, "input CSV");
  cmd->add_option("--seed", f.seed, "PRNG seed (required for stochastic commands)");
  cmd->add_option("--classes", f.classes, "class allow-list, comma separated")->delimiter(',');
  cmd->add_option("--model-kind", f.model_kind, "dnn | knn | svm");
}

void add_training(CLI::App* cmd, SharedFlags& f) {
  cmd->add_option("--folds", f.folds, "number of cross-validation folds");
  cmd->add_option("--epochs", f.epochs);
  cmd->add_option("--batch-size", f.batch_size);
  cmd->add_option("--learning-rate", f.learning_rate);
  cmd->add_option("--dropout", f.dropout);
  cmd->add_option("--hidden-layers", f.hidden_layers);
  cmd->add_option("--top-k", f.top_k, "keep the k highest-ranked features (0 = all)");
  cmd->add_option("--train-fraction", f.train_fraction);
  cmd->add_option("--knn-k", f.knn_k);
  cmd->add_flag("--stratified", f.stratified, "stratify cross-validation folds by class");
  cmd->add_flag("--macro", f.macro, "macro-average aggregate metrics");
}

RunConfig resolve_config(const SharedFlags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : RunConfig::load(f.config);
  if (!f.data.empty()) c.data = f.data;
  if (f.seed) c.seed = f.seed;
  if (f.folds) c.folds = *f.folds;
  if (!f.classes.empty()) c.classes = f.classes;
  if (!f.model_kind.empty()) c.model_kind = parse_model_kind(f.model_kind);
  if (f.epochs) c.epochs = *f.epochs;
  if (f.batch_size) c.batch_size = *f.batch_size;
  if (f.learning_rate) c.learning_rate = *f.learning_rate;
  if (f.dropout) c.dropout_rate = *f.dropout;
  if (f.hidden_layers) c.hidden_layers = *f.hidden_layers;
  if (f.top_k) c.top_k = *f.top_k;
  if (f.train_fraction) c.train_fraction = *f.train_fraction;
  if (f.knn_k) c.knn_k = *f.knn_k;
  if (f.stratified) c.stratified = true;
  if (f.macro) c.macro_average = true;
  c.validate();
  return c;
}

/// Runs `fn`, prefixing any library error with the pipeline stage.
template <typename F>
auto stage(const std::string& name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const DivergenceError& e) {
    throw DivergenceError(e.epoch(), e.batch(), name + ": " + e.what());
  } catch (const Error& e) {
    throw Error(e.kind(), name + ": " + e.what());
  }
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    write_file_atomic(path, content);
  }
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

// ---------------------------------------------------------------------------

int cmd_train(const SharedFlags& f, std::ostream& out, std::ostream& err) {
  const RunConfig config = stage("config", [&] { return resolve_config(f); });
  config.require_seed();
  require(!f.model.empty(), ErrorKind::Config, "train needs --model <path>");
  const fs::path dir = f.out.empty() ? fs::path(f.model).parent_path() : fs::path(f.out);
  // Fail on an unwritable destination before spending time on training.
  stage("write", [&] {
    for (const auto& d : {fs::path(f.model).parent_path(), dir}) {
      std::error_code ec;
      if (!d.empty()) fs::create_directories(d, ec);
      require(!ec, ErrorKind::Io, "cannot create directory '" + d.string() + "': " + ec.message());
    }
    return 0;
  });
  const auto loaded = stage("load", [&] { return load_training_data(config); });
  if (loaded.dropped_rows > 0)
    err << "dropped " << loaded.dropped_rows << " rows outside the class allow-list\n";

  const auto outcome = stage("train", [&] { return run_holdout(loaded.data, loaded.codec, config); });

  stage("write", [&] {
    save_model(outcome.fit.pipeline, f.model);
    write_file_atomic(dir / "report.csv", outcome.report.to_csv());
    if (!outcome.fit.history.epochs.empty())
      write_file_atomic(dir / "history.csv", outcome.fit.history.to_csv());
    if (outcome.fit.importance) {
      const auto& imp = *outcome.fit.importance;
      std::string csv = "feature_name,score,rank\n";
      for (std::size_t r = 0; r < imp.ranking.size(); ++r) {
        const auto j = imp.ranking[r];
        csv += csv_cell(config.schema.names[j]) + "," + fmt17(imp.scores[j]) + "," +
               std::to_string(r + 1) + "\n";
      }
      write_file_atomic(dir / "features.csv", csv);
    }
    return 0;
  });

  out << "model: " << to_string(config.model_kind) << ", " << loaded.data.rows() << " rows, "
      << loaded.codec.size() << " classes, holdout test rows " << outcome.report.total << "\n";
  out << outcome.report.to_text();
  return kExitOk;
}

int cmd_predict(const SharedFlags& f, std::ostream& out, std::ostream&) {
  require(!f.model.empty(), ErrorKind::Config, "predict needs --model <path>");
  require(!f.data.empty(), ErrorKind::Config, "predict needs --data <path>");
  const auto pipeline = stage("load model", [&] { return load_model(f.model); });
  const auto& prep = pipeline.preprocess();
  const auto input = stage("load data", [&] {
    return load_csv(f.data, prep.schema, LoadOptions{{}, false}).data;
  });

  const bool with_probs = pipeline.kind() == ModelKind::Dnn;
  std::ostringstream csv;
  csv << "row,class";
  if (with_probs)
    for (const auto& c : prep.codec.classes()) csv << "," << csv_cell("p_" + c);
  csv << "\n";
  stage("predict", [&] {
    for (std::size_t i = 0; i < input.rows(); ++i) {
      const auto row = input.row(i);
      if (with_probs) {
        const auto probs = pipeline.probabilities(row);
        std::size_t best = 0;
        for (std::size_t j = 1; j < probs.size(); ++j)
          if (probs[j] > probs[best]) best = j;
        csv << i << "," << csv_cell(prep.codec.decode(best));
        for (double p : probs) csv << "," << fmt17(p);
      } else {
        csv << i << "," << csv_cell(prep.codec.decode(pipeline.predict(row)));
      }
      csv << "\n";
    }
    return 0;
  });
  stage("write", [&] {
    emit(f.out, csv.str(), out);
    return 0;
  });
  return kExitOk;
}

int cmd_features(const SharedFlags& f, std::ostream& out, std::ostream& err) {
  const RunConfig config = stage("config", [&] { return resolve_config(f); });
  const auto seed = config.require_seed();
  const auto loaded = stage("load", [&] { return load_training_data(config); });
  if (loaded.dropped_rows > 0)
    err << "dropped " << loaded.dropped_rows << " rows outside the class allow-list\n";
  const auto report = stage("rank", [&] { return rank_features(loaded.data, config, seed); });
  std::string csv = "feature_name,score,rank\n";
  for (std::size_t r = 0; r < report.ranking.size(); ++r) {
    const auto j = report.ranking[r];
    csv += csv_cell(config.schema.names[j]) + "," + fmt17(report.scores[j]) + "," +
           std::to_string(r + 1) + "\n";
  }
  stage("write", [&] {
    emit(f.out, csv, out);
    return 0;
  });
  return kExitOk;
}

int cmd_cv(const SharedFlags& f, std::ostream& out, std::ostream& err) {
  const RunConfig config = stage("config", [&] { return resolve_config(f); });
  config.require_seed();
  const auto loaded = stage("load", [&] { return load_training_data(config); });
  if (loaded.dropped_rows > 0)
    err << "dropped " << loaded.dropped_rows << " rows outside the class allow-list\n";
  const auto result =
      stage("cross-validate", [&] { return run_cross_validation(loaded.data, loaded.codec, config); });
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
  stage("write", [&] {
    emit(f.out, result.to_csv(), out);
    return 0;
  });
  if (!f.out.empty() && f.out != "-") {
    out << config.folds << "-fold cross-validation, mean over folds:\n";
    out << result.average.to_text();
  }
  return kExitOk;
}

struct GridFile {
  eval::GridSpec grid;
  std::optional<Protocol> protocol;
};

Protocol parse_protocol(const std::string& s) {
  if (s == "holdout") return Protocol::Holdout;
  if (s == "cv") return Protocol::CrossValidation;
  fail(ErrorKind::Config, "unknown protocol '" + s + "' (expected holdout or cv)");
}

GridFile load_grid(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open grid '" + path + "'");
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const ordered_json::parse_error& e) {
    fail(ErrorKind::Config, "grid '" + path + "' is not valid JSON: " + e.what());
  }
  require(j.is_object() && j.contains("axes"), ErrorKind::Config,
          "grid file needs an \"axes\" object");
  GridFile g;
  if (j.contains("protocol")) g.protocol = parse_protocol(j["protocol"].get<std::string>());
  for (const auto& [name, values] : j["axes"].items()) {
    require(values.is_array(), ErrorKind::Config, "grid axis '" + name + "' must be an array");
    eval::GridAxis axis{name, {}};
    for (const auto& v : values) axis.values.push_back(v.dump());
    g.grid.axes.push_back(std::move(axis));
  }
  g.grid.validate();
  return g;
}

int cmd_gridsearch(const SharedFlags& f, std::ostream& out, std::ostream& err) {
  const RunConfig base = stage("config", [&] { return resolve_config(f); });
  base.require_seed();
  require(!f.grid.empty(), ErrorKind::Config, "gridsearch needs --grid <file>");
  const auto grid = stage("grid", [&] { return load_grid(f.grid); });
  const Protocol protocol = !f.protocol.empty() ? parse_protocol(f.protocol)
                                                : grid.protocol.value_or(Protocol::Holdout);
  const auto loaded = stage("load", [&] { return load_training_data(base); });
  if (loaded.dropped_rows > 0)
    err << "dropped " << loaded.dropped_rows << " rows outside the class allow-list\n";
  const auto result = stage("search", [&] {
    return run_grid_search(grid.grid, loaded.data, loaded.codec, base, protocol);
  });
  stage("write", [&] {
    emit(f.out, result.to_csv(), out);
    if (!f.best.empty()) {
      const RunConfig best = apply_assignment(base, result.best().assignment);
      write_file_atomic(f.best, best.to_json().dump(2) + "\n");
    }
    return 0;
  });
  if (!f.out.empty() && f.out != "-") {
    out << result.ranked.size() << " configurations evaluated; best (grid index "
        << result.best().grid_index << "):";
    for (const auto& [k, v] : result.best().assignment) out << " " << k << "=" << v;
    out << "\n" << result.best().report.to_text();
  }
  return kExitOk;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return kExitUsage;
    case ErrorKind::Divergence: return kExitDivergence;
    default: return kExitData;
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Flow-statistics traffic classifier", "flowclass"};
  app.require_subcommand(1);
  SharedFlags f;

  auto* train = app.add_subcommand("train", "fit on a 7:3 holdout split and save the model");
  add_shared(train, f);
  add_training(train, f);
  train->add_option("--model", f.model, "output model file")->required();
  train->add_option("--out", f.out, "directory for report.csv / history.csv");

  auto* predict = app.add_subcommand("predict", "classify rows of a CSV with a saved model");
  predict->add_option("--model", f.model, "model file")->required();
  predict->add_option("--data", f.data, "input CSV")->required();
  predict->add_option("--out", f.out, "output CSV (default stdout)");

  auto* features = app.add_subcommand("features", "rank features by extra-trees importance");
  add_shared(features, f);
  features->add_option("--out", f.out, "output CSV (default stdout)");

  auto* cv = app.add_subcommand("cv", "k-fold cross-validation");
  add_shared(cv, f);
  add_training(cv, f);
  cv->add_option("--out", f.out, "output CSV (default stdout)");

  auto* grid = app.add_subcommand("gridsearch", "evaluate every combination of a grid");
  add_shared(grid, f);
  add_training(grid, f);
  grid->add_option("--grid", f.grid, "grid JSON file")->required();
  grid->add_option("--out", f.out, "ranked results CSV (default stdout)");
  grid->add_option("--best", f.best, "write the winning configuration here");
  grid->add_option("--protocol", f.protocol, "holdout | cv (overrides the grid file)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return cmd_train(f, out, err);
    if (*predict) return cmd_predict(f, out, err);
    if (*features) return cmd_features(f, out, err);
    if (*cv) return cmd_cv(f, out, err);
    if (*grid) return cmd_gridsearch(f, out, err);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace flowclass
