#include "flowclass/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "flowclass/error.hpp"
#include "flowclass/random.hpp"

namespace flowclass {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::EmptyInput: return "empty input";
    case ErrorKind::Schema: return "schema error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Bounds: return "bounds error";
    case ErrorKind::InsufficientData: return "insufficient data";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Contract: return "contract error";
    case ErrorKind::DegenerateLabel: return "degenerate labels";
    case ErrorKind::DegenerateBatch: return "degenerate batch";
    case ErrorKind::Divergence: return "numeric divergence";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Io: return "i/o error";
  }
  return "error";
}

// ---------------------------------------------------------------------------
// FeatureSchema

FeatureSchema FeatureSchema::flow_default() {
  return FeatureSchema{{"server_port", "client_port", "actual_data_packets_c2s",
                        "pushed_data_packets_c2s", "pushed_data_packets_s2c",
                        "min_segment_size_c2s", "avg_segment_size_c2s",
                        "initial_window_bytes_c2s", "initial_window_bytes_s2c",
                        "rtt_samples_c2s", "median_data_packets_c2s",
                        "variance_bytes_packet_s2c"},
                       "class"};
}

void FeatureSchema::validate() const {
  require(!names.empty(), ErrorKind::Schema, "schema has no feature columns");
  require(!label_column.empty(), ErrorKind::Schema, "schema has no label column");
  std::set<std::string> seen;
  for (const auto& name : names) {
    require(!name.empty(), ErrorKind::Schema, "schema has an empty feature name");
    require(name != label_column, ErrorKind::Schema,
            "feature '" + name + "' collides with the label column");
    require(seen.insert(name).second, ErrorKind::Schema, "duplicate feature '" + name + "'");
  }
}

std::optional<std::size_t> FeatureSchema::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

// ---------------------------------------------------------------------------
// LabelCodec

LabelCodec::LabelCodec(std::vector<std::string> classes) : classes_(std::move(classes)) {
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    require(i == 0 || classes_[i - 1] < classes_[i], ErrorKind::Contract,
            "label codec classes must be sorted and distinct");
    index_.emplace(classes_[i], i);
  }
}

std::size_t LabelCodec::encode(const std::string& name) const {
  const auto it = index_.find(name);
  require(it != index_.end(), ErrorKind::Schema, "unknown class '" + name + "'");
  return it->second;
}

const std::string& LabelCodec::decode(std::size_t index) const {
  require(index < classes_.size(), ErrorKind::Bounds,
          "class index " + std::to_string(index) + " out of range");
  return classes_[index];
}

bool LabelCodec::contains(const std::string& name) const { return index_.count(name) != 0; }

LabelCodec fit_label_codec(std::span<const std::string> labels) {
  require(!labels.empty(), ErrorKind::EmptyInput, "cannot fit a label codec on no labels");
  std::set<std::string> distinct(labels.begin(), labels.end());
  return LabelCodec(std::vector<std::string>(distinct.begin(), distinct.end()));
}

void encode_labels(Dataset& data, const LabelCodec& codec) {
  data.targets.resize(data.labels.size());
  for (std::size_t i = 0; i < data.labels.size(); ++i) data.targets[i] = codec.encode(data.labels[i]);
}

std::vector<double> one_hot(std::size_t index, std::size_t n) {
  require(index < n, ErrorKind::Bounds,
          "one-hot index " + std::to_string(index) + " out of range for " + std::to_string(n) +
              " classes");
  std::vector<double> v(n, 0.0);
  v[index] = 1.0;
  return v;
}

// ---------------------------------------------------------------------------
// Dataset

void Dataset::push_back(std::span<const double> values, std::string label) {
  require(values.size() == cols(), ErrorKind::Schema,
          "row width " + std::to_string(values.size()) + " != schema width " +
              std::to_string(cols()));
  features.insert(features.end(), values.begin(), values.end());
  labels.push_back(std::move(label));
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.schema = schema;
  out.provenance = provenance;
  out.features.reserve(indices.size() * cols());
  out.labels.reserve(indices.size());
  const bool has_targets = encoded();
  for (auto i : indices) {
    require(i < rows(), ErrorKind::Bounds, "row index out of range");
    const auto r = row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.labels.push_back(labels[i]);
    if (has_targets) out.targets.push_back(targets[i]);
  }
  return out;
}

Dataset Dataset::project(std::span<const std::size_t> columns) const {
  Dataset out;
  out.schema.label_column = schema.label_column;
  for (auto c : columns) {
    require(c < cols(), ErrorKind::Bounds, "feature index out of range");
    out.schema.names.push_back(schema.names[c]);
  }
  out.labels = labels;
  out.targets = targets;
  out.provenance = provenance;
  out.features.reserve(rows() * columns.size());
  for (std::size_t i = 0; i < rows(); ++i)
    for (auto c : columns) out.features.push_back(at(i, c));
  return out;
}

void Dataset::validate() const {
  require(features.size() == rows() * cols(), ErrorKind::Schema, "dataset is not rectangular");
  for (double v : features)
    require(std::isfinite(v), ErrorKind::Contract, "dataset contains a non-finite value");
  if (!targets.empty()) {
    require(targets.size() == rows(), ErrorKind::Contract, "target count != row count");
  }
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_real(const std::string& text, double& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last && first != last && std::isfinite(out);
}

}  // namespace

LoadResult parse_csv(const std::string& text, const FeatureSchema& schema,
                     const LoadOptions& options, const std::string& source) {
  schema.validate();
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;

  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
      if (!trim(line).empty()) return true;
    }
    return false;
  };

  require(next_line(), ErrorKind::EmptyInput, source + ": file is empty");

  const auto header = split_csv_line(line);
  std::vector<std::size_t> feature_cols;
  std::vector<std::string> missing;
  auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (trim(header[c]) == name) return c;
    return std::nullopt;
  };
  for (const auto& name : schema.names) {
    if (auto c = find_col(name)) feature_cols.push_back(*c);
    else missing.push_back(name);
  }
  const auto label_col = find_col(schema.label_column);
  if (!label_col && options.require_label) missing.push_back(schema.label_column);
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    fail(ErrorKind::Schema, source + ": missing column(s): " + list);
  }

  const std::set<std::string> allowed(options.allowed_classes.begin(),
                                      options.allowed_classes.end());
  LoadResult result;
  result.data.schema = schema;
  std::vector<double> values(schema.width());
  while (next_line()) {
    const auto cells = split_csv_line(line);
    require(cells.size() == header.size(), ErrorKind::Parse,
            source + ": row " + std::to_string(line_no) + " has " +
                std::to_string(cells.size()) + " cells, header has " +
                std::to_string(header.size()));
    std::string label = label_col ? trim(cells[*label_col]) : std::string();
    require(!label.empty() || !label_col, ErrorKind::Parse,
            source + ": row " + std::to_string(line_no) + ": empty label");
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const std::string cell = trim(cells[feature_cols[j]]);
      if (!parse_real(cell, values[j])) {
        fail(ErrorKind::Parse, source + ": row " + std::to_string(line_no) + ", column '" +
                                   schema.names[j] + "': cannot parse '" + cell + "' as a number");
      }
    }
    if (!allowed.empty() && allowed.count(label) == 0) {
      ++result.dropped_rows;
      continue;
    }
    result.data.push_back(values, std::move(label));
  }
  require(!result.data.empty() || result.dropped_rows > 0, ErrorKind::EmptyInput,
          source + ": no data rows");
  return result;
}

LoadResult load_csv(const std::filesystem::path& path, const FeatureSchema& schema,
                    const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema, options, path.string());
}

// ---------------------------------------------------------------------------
// Normalization

NormalizationParams fit_normalizer(const Dataset& data) {
  require(!data.empty(), ErrorKind::EmptyInput, "cannot fit a normalizer on an empty dataset");
  NormalizationParams p;
  const auto d = data.cols();
  p.min.assign(data.row(0).begin(), data.row(0).end());
  p.max = p.min;
  for (std::size_t i = 1; i < data.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double v = data.at(i, j);
      p.min[j] = std::min(p.min[j], v);
      p.max[j] = std::max(p.max[j], v);
    }
  }
  return p;
}

void normalize_row(std::span<double> row, const NormalizationParams& params) {
  require(row.size() == params.width(), ErrorKind::Schema,
          "row width " + std::to_string(row.size()) + " != normalizer width " +
              std::to_string(params.width()));
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double range = params.max[j] - params.min[j];
    if (!(range > 0.0)) {
      row[j] = 0.0;
      continue;
    }
    row[j] = std::clamp((row[j] - params.min[j]) / range, 0.0, 1.0);
  }
}

Dataset apply_normalizer(const Dataset& data, const NormalizationParams& params) {
  require(data.cols() == params.width(), ErrorKind::Schema,
          "dataset width " + std::to_string(data.cols()) + " != normalizer width " +
              std::to_string(params.width()));
  Dataset out = data;
  for (std::size_t i = 0; i < out.rows(); ++i) normalize_row(out.row(i), params);
  out.provenance = Provenance::Normalized;
  return out;
}

// ---------------------------------------------------------------------------
// Splitting

SplitIndices split_indices(std::size_t n, double train_fraction, std::uint64_t seed) {
  require(train_fraction > 0.0 && train_fraction < 1.0, ErrorKind::Config,
          "train fraction must lie strictly between 0 and 1");
  require(n >= 2, ErrorKind::InsufficientData, "need at least 2 rows to split");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return out;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double train_fraction,
                                             std::uint64_t seed) {
  const auto idx = split_indices(data.rows(), train_fraction, seed);
  return {data.subset(idx.train), data.subset(idx.test)};
}

}  // namespace flowclass
