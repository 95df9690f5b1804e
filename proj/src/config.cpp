#include "flowclass/config.hpp"

#include <fstream>
#include <set>

#include "flowclass/error.hpp"

namespace flowclass {

using nlohmann::json;
using nlohmann::ordered_json;

const char* to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::Dnn: return "dnn";
    case ModelKind::Knn: return "knn";
    case ModelKind::Svm: return "svm";
  }
  return "dnn";
}

ModelKind parse_model_kind(const std::string& text) {
  if (text == "dnn") return ModelKind::Dnn;
  if (text == "knn") return ModelKind::Knn;
  if (text == "svm") return ModelKind::Svm;
  fail(ErrorKind::Config, "unknown model kind '" + text + "' (expected dnn, knn or svm)");
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ordered_json RunConfig::to_json() const {
  ordered_json j;
  j["data"] = data;
  j["features"] = schema.names;
  j["label_column"] = schema.label_column;
  j["classes"] = classes;
  j["model_kind"] = flowclass::to_string(model_kind);
  j["seed"] = seed ? ordered_json(*seed) : ordered_json(nullptr);
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["learning_rate"] = learning_rate;
  j["dropout_rate"] = dropout_rate;
  j["hidden_layers"] = hidden_layers;
  j["hidden_width"] = hidden_width;
  j["batch_norm"] = batch_norm;
  j["knn_k"] = knn_k;
  j["svm_lambda"] = svm_lambda;
  j["svm_epochs"] = svm_epochs;
  j["svm_learning_rate"] = svm_learning_rate;
  j["top_k"] = top_k;
  j["et_trees"] = et_trees;
  j["et_max_depth"] = et_max_depth ? ordered_json(*et_max_depth) : ordered_json(nullptr);
  j["train_fraction"] = train_fraction;
  j["folds"] = folds;
  j["stratified"] = stratified;
  j["per_class_cap"] = per_class_cap ? ordered_json(*per_class_cap) : ordered_json(nullptr);
  j["macro_average"] = macro_average;
  return j;
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  try {
    out = j.get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::Config, std::string("config key '") + key + "' has the wrong type");
  }
}

template <typename T>
void read_optional(const json& j, const char* key, std::optional<T>& out) {
  if (j.is_null()) {
    out.reset();
    return;
  }
  T v{};
  read(j, key, v);
  out = v;
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  require(j.is_object(), ErrorKind::Config, "config must be a JSON object");
  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    const char* k = key.c_str();
    if (key == "data") read(v, k, c.data);
    else if (key == "features") read(v, k, c.schema.names);
    else if (key == "label_column") read(v, k, c.schema.label_column);
    else if (key == "classes") read(v, k, c.classes);
    else if (key == "model_kind") {
      std::string s;
      read(v, k, s);
      c.model_kind = parse_model_kind(s);
    }
    else if (key == "seed") read_optional(v, k, c.seed);
    else if (key == "epochs") read(v, k, c.epochs);
    else if (key == "batch_size") read(v, k, c.batch_size);
    else if (key == "learning_rate") read(v, k, c.learning_rate);
    else if (key == "dropout_rate") read(v, k, c.dropout_rate);
    else if (key == "hidden_layers") read(v, k, c.hidden_layers);
    else if (key == "hidden_width") read(v, k, c.hidden_width);
    else if (key == "batch_norm") read(v, k, c.batch_norm);
    else if (key == "knn_k") read(v, k, c.knn_k);
    else if (key == "svm_lambda") read(v, k, c.svm_lambda);
    else if (key == "svm_epochs") read(v, k, c.svm_epochs);
    else if (key == "svm_learning_rate") read(v, k, c.svm_learning_rate);
    else if (key == "top_k") read(v, k, c.top_k);
    else if (key == "et_trees") read(v, k, c.et_trees);
    else if (key == "et_max_depth") read_optional(v, k, c.et_max_depth);
    else if (key == "train_fraction") read(v, k, c.train_fraction);
    else if (key == "folds") read(v, k, c.folds);
    else if (key == "stratified") read(v, k, c.stratified);
    else if (key == "per_class_cap") read_optional(v, k, c.per_class_cap);
    else if (key == "macro_average") read(v, k, c.macro_average);
    else fail(ErrorKind::Config, "unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Config, "config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

void RunConfig::validate() const {
  try {
    schema.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Config, e.what());
  }
  require(epochs >= 1, ErrorKind::Config, "epochs must be >= 1");
  require(batch_size >= 1, ErrorKind::Config, "batch_size must be >= 1");
  require(learning_rate > 0.0, ErrorKind::Config, "learning_rate must be positive");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, ErrorKind::Config,
          "dropout_rate must lie in [0, 1)");
  require(hidden_layers >= 1 && hidden_width >= 1, ErrorKind::Config,
          "hidden_layers and hidden_width must be >= 1");
  require(knn_k >= 1, ErrorKind::Config, "knn_k must be >= 1");
  require(svm_lambda > 0.0 && svm_epochs >= 1 && svm_learning_rate > 0.0, ErrorKind::Config,
          "svm settings must be positive");
  require(top_k <= schema.width(), ErrorKind::Config,
          "top_k exceeds the number of features");
  require(et_trees >= 1, ErrorKind::Config, "et_trees must be >= 1");
  require(!et_max_depth || *et_max_depth >= 1, ErrorKind::Config, "et_max_depth must be >= 1");
  require(train_fraction > 0.0 && train_fraction < 1.0, ErrorKind::Config,
          "train_fraction must lie strictly between 0 and 1");
  require(folds >= 2, ErrorKind::Config, "folds must be >= 2");
  require(!per_class_cap || *per_class_cap >= 1, ErrorKind::Config, "per_class_cap must be >= 1");
}

std::uint64_t RunConfig::require_seed() const {
  require(seed.has_value(), ErrorKind::Config,
          "a seed is required (pass --seed or set \"seed\" in the config)");
  return *seed;
}

nn::NetworkSpec RunConfig::network_spec(std::size_t input_dim, std::size_t n_classes) const {
  nn::NetworkSpec spec;
  spec.input_dim = static_cast<int>(input_dim);
  spec.hidden_layers.assign(static_cast<std::size_t>(hidden_layers), hidden_width);
  spec.n_classes = static_cast<int>(n_classes);
  spec.dropout_rate = dropout_rate;
  spec.batch_norm = batch_norm;
  return spec;
}

nn::TrainingConfig RunConfig::training_config(std::uint64_t s) const {
  nn::TrainingConfig t;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.learning_rate = learning_rate;
  t.dropout_rate = dropout_rate;
  t.k_folds = folds;
  t.seed = s;
  return t;
}

baselines::SvmParams RunConfig::svm_params(std::uint64_t s) const {
  return {svm_lambda, svm_epochs, svm_learning_rate, s};
}

std::uint64_t RunConfig::fingerprint() const {
  auto j = to_json();
  j.erase("data");
  return fnv1a(j.dump());
}

RunConfig apply_assignment(const RunConfig& base, const eval::Assignment& assignment) {
  json j = json::parse(base.to_json().dump());
  for (const auto& [key, text] : assignment) {
    json value;
    try {
      value = json::parse(text);
    } catch (const json::parse_error&) {
      value = text;
    }
    require(j.contains(key), ErrorKind::Config, "unknown grid axis '" + key + "'");
    j[key] = value;
  }
  return RunConfig::from_json(j);
}

}  // namespace flowclass
