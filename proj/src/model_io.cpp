#include "flowclass/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "flowclass/error.hpp"

namespace flowclass {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <typename Mat>
ordered_json matrix_rows(const Mat& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

ordered_json vector_json(const nn::Vector<double>& v) {
  return ordered_json(std::vector<double>(v.data(), v.data() + v.size()));
}

nn::Matrix<double> matrix_from(const json& rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = r == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.at(0).size());
  nn::Matrix<double> m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto& row = rows.at(static_cast<std::size_t>(i));
    require(static_cast<Eigen::Index>(row.size()) == c, ErrorKind::Format, "ragged weight matrix");
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
  }
  return m;
}

nn::Vector<double> vector_from(const json& arr) {
  const auto values = arr.get<std::vector<double>>();
  nn::Vector<double> v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v(static_cast<Eigen::Index>(i)) = values[i];
  return v;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

ordered_json network_json(const nn::NetworkModel& net) {
  ordered_json spec;
  spec["input_dim"] = net.spec.input_dim;
  spec["hidden_layers"] = net.spec.hidden_layers;
  spec["n_classes"] = net.spec.n_classes;
  spec["dropout_rate"] = net.spec.dropout_rate;
  spec["batch_norm"] = net.spec.batch_norm;

  ordered_json layers = ordered_json::array();
  for (const auto& a : net.params.affine)
    layers.push_back({{"weight", matrix_rows(a.weight)}, {"bias", vector_json(a.bias)}});
  ordered_json norms = ordered_json::array();
  for (const auto& b : net.params.norm) {
    norms.push_back({{"gamma", vector_json(b.gamma)},
                     {"beta", vector_json(b.beta)},
                     {"running_mean", vector_json(b.running_mean)},
                     {"running_var", vector_json(b.running_var)},
                     {"momentum", b.momentum},
                     {"epsilon", b.epsilon}});
  }
  return {{"spec", spec}, {"affine", layers}, {"batch_norm", norms}};
}

nn::NetworkModel network_from(const json& j) {
  nn::NetworkModel net;
  const auto& s = j.at("spec");
  net.spec.input_dim = s.at("input_dim").get<int>();
  net.spec.hidden_layers = s.at("hidden_layers").get<std::vector<int>>();
  net.spec.n_classes = s.at("n_classes").get<int>();
  net.spec.dropout_rate = s.at("dropout_rate").get<double>();
  net.spec.batch_norm = s.at("batch_norm").get<bool>();
  for (const auto& a : j.at("affine"))
    net.params.affine.push_back({matrix_from(a.at("weight")), vector_from(a.at("bias"))});
  for (const auto& b : j.at("batch_norm")) {
    net.params.norm.push_back({vector_from(b.at("gamma")), vector_from(b.at("beta")),
                               vector_from(b.at("running_mean")), vector_from(b.at("running_var")),
                               b.at("momentum").get<double>(), b.at("epsilon").get<double>()});
  }
  try {
    net.spec.validate();
    nn::check_shapes(net.params, net.spec);
  } catch (const Error& e) {
    fail(ErrorKind::Format, std::string("inconsistent network in model file: ") + e.what());
  }
  return net;
}

}  // namespace

ordered_json model_to_json(const TrainedPipeline& pipeline) {
  const auto& prep = pipeline.preprocess();
  ordered_json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["kind"] = to_string(pipeline.kind());
  doc["preprocess"] = {{"features", prep.schema.names},
                       {"label_column", prep.schema.label_column},
                       {"classes", prep.codec.classes()},
                       {"normalizer", {{"min", prep.normalizer.min}, {"max", prep.normalizer.max}}},
                       {"selected_features", prep.selected}};
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, nn::NetworkModel>) {
          doc["model"] = network_json(m);
        } else if constexpr (std::is_same_v<M, baselines::KnnModel>) {
          doc["model"] = {{"k", m.k},
                          {"n_features", m.n_features},
                          {"n_classes", m.n_classes},
                          {"features", m.features},
                          {"targets", m.targets}};
        } else {
          doc["model"] = {{"n_features", m.n_features},
                          {"weights", m.weights},
                          {"bias", m.bias},
                          {"lambda", m.params.lambda},
                          {"epochs", m.params.epochs},
                          {"learning_rate", m.params.learning_rate},
                          {"seed", m.params.seed}};
        }
      },
      pipeline.model());
  doc["fingerprint"] = {{"seed", pipeline.fingerprint().seed},
                        {"config_hash", hex64(pipeline.fingerprint().config_hash)}};
  return doc;
}

TrainedPipeline model_from_json(const json& doc) {
  require(doc.is_object() && doc.contains("format_version"), ErrorKind::Format,
          "model file has no format_version field");
  int version = 0;
  try {
    version = doc.at("format_version").get<int>();
  } catch (const json::exception&) {
    fail(ErrorKind::Format, "model file format_version is not an integer");
  }
  require(version == kModelFormatVersion, ErrorKind::Format,
          "unsupported model format_version " + std::to_string(version) + " (this build reads " +
              std::to_string(kModelFormatVersion) + ")");
  try {
    const auto& p = doc.at("preprocess");
    PreprocessState prep;
    prep.schema.names = p.at("features").get<std::vector<std::string>>();
    prep.schema.label_column = p.at("label_column").get<std::string>();
    prep.schema.validate();
    prep.codec = LabelCodec(p.at("classes").get<std::vector<std::string>>());
    prep.normalizer.min = p.at("normalizer").at("min").get<std::vector<double>>();
    prep.normalizer.max = p.at("normalizer").at("max").get<std::vector<double>>();
    prep.selected = p.at("selected_features").get<std::vector<std::size_t>>();
    require(prep.normalizer.min.size() == prep.schema.width() &&
                prep.normalizer.max.size() == prep.schema.width(),
            ErrorKind::Format, "normalizer width does not match the schema");
    for (auto c : prep.selected)
      require(c < prep.schema.width(), ErrorKind::Format, "selected feature index out of range");

    const auto kind = parse_model_kind(doc.at("kind").get<std::string>());
    const auto& m = doc.at("model");
    ModelVariant model;
    switch (kind) {
      case ModelKind::Dnn: {
        auto net = network_from(m);
        require(static_cast<std::size_t>(net.spec.input_dim) == prep.selected.size(),
                ErrorKind::Format, "network input width does not match the selected features");
        model = std::move(net);
        break;
      }
      case ModelKind::Knn: {
        baselines::KnnModel knn;
        knn.k = m.at("k").get<std::size_t>();
        knn.n_features = m.at("n_features").get<std::size_t>();
        knn.n_classes = m.at("n_classes").get<std::size_t>();
        knn.features = m.at("features").get<std::vector<double>>();
        knn.targets = m.at("targets").get<std::vector<std::size_t>>();
        require(knn.features.size() == knn.targets.size() * knn.n_features && knn.k >= 1 &&
                    knn.k <= knn.targets.size(),
                ErrorKind::Format, "inconsistent knn model");
        model = std::move(knn);
        break;
      }
      case ModelKind::Svm: {
        baselines::SvmModel svm;
        svm.n_features = m.at("n_features").get<std::size_t>();
        svm.weights = m.at("weights").get<std::vector<std::vector<double>>>();
        svm.bias = m.at("bias").get<std::vector<double>>();
        svm.params.lambda = m.at("lambda").get<double>();
        svm.params.epochs = m.at("epochs").get<int>();
        svm.params.learning_rate = m.at("learning_rate").get<double>();
        svm.params.seed = m.at("seed").get<std::uint64_t>();
        require(svm.weights.size() == svm.bias.size(), ErrorKind::Format, "inconsistent svm model");
        for (const auto& w : svm.weights)
          require(w.size() == svm.n_features, ErrorKind::Format, "inconsistent svm model");
        model = std::move(svm);
        break;
      }
    }
    Fingerprint fp;
    fp.seed = doc.at("fingerprint").at("seed").get<std::uint64_t>();
    fp.config_hash =
        std::stoull(doc.at("fingerprint").at("config_hash").get<std::string>(), nullptr, 16);
    return TrainedPipeline(std::move(prep), std::move(model), fp);
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, std::string("malformed model file (format_version ") +
                                std::to_string(version) + "): " + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Format) throw;
    fail(ErrorKind::Format, std::string("invalid model file (format_version ") +
                                std::to_string(version) + "): " + e.what());
  } catch (const std::logic_error& e) {
    fail(ErrorKind::Format, std::string("malformed model file: ") + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    require(static_cast<bool>(out), ErrorKind::Io, "write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, ErrorKind::Io, "cannot move '" + tmp.string() + "' to '" + path.string() +
                                  "': " + ec.message());
}

void save_model(const TrainedPipeline& pipeline, const std::filesystem::path& path) {
  write_file_atomic(path, model_to_json(pipeline).dump(1) + "\n");
}

TrainedPipeline load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open model '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Format, "model '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace flowclass
