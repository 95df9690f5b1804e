#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace flowclass {

/// Ordered feature columns plus the class column of a flow table.
struct FeatureSchema {
  std::vector<std::string> names;
  std::string label_column = "class";

  /// The twelve flow discriminators used by the classifier, in f1..f12 order.
  static FeatureSchema flow_default();

  std::size_t width() const noexcept { return names.size(); }

  /// Throws Schema if names are empty, duplicated, or collide with the label column.
  void validate() const;

  std::optional<std::size_t> index_of(const std::string& name) const;

  bool operator==(const FeatureSchema&) const = default;
};

/// Bidirectional class-name <-> index mapping. Classes are stored sorted.
class LabelCodec {
 public:
  LabelCodec() = default;
  /// `classes` must already be sorted and distinct.
  explicit LabelCodec(std::vector<std::string> classes);

  std::size_t size() const noexcept { return classes_.size(); }
  const std::vector<std::string>& classes() const noexcept { return classes_; }

  std::size_t encode(const std::string& name) const;
  const std::string& decode(std::size_t index) const;
  bool contains(const std::string& name) const;

  bool operator==(const LabelCodec& other) const { return classes_ == other.classes_; }

 private:
  std::vector<std::string> classes_;
  std::map<std::string, std::size_t> index_;
};

struct NormalizationParams {
  std::vector<double> min;
  std::vector<double> max;

  std::size_t width() const noexcept { return min.size(); }
  bool operator==(const NormalizationParams&) const = default;
};

enum class Provenance { Raw, Normalized };

/// Row-major N x d feature table with class names and (after encoding) class indices.
struct Dataset {
  FeatureSchema schema;
  std::vector<double> features;
  std::vector<std::string> labels;
  /// Encoded labels; empty until encode_labels() runs.
  std::vector<std::size_t> targets;
  Provenance provenance = Provenance::Raw;

  std::size_t rows() const noexcept { return labels.size(); }
  std::size_t cols() const noexcept { return schema.width(); }
  bool empty() const noexcept { return labels.empty(); }
  bool encoded() const noexcept { return !labels.empty() && targets.size() == labels.size(); }

  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * cols(), cols()};
  }
  std::span<double> row(std::size_t i) { return {features.data() + i * cols(), cols()}; }

  double at(std::size_t i, std::size_t j) const { return features[i * cols() + j]; }

  void push_back(std::span<const double> values, std::string label);

  /// Rows in the given order (duplicates allowed).
  Dataset subset(std::span<const std::size_t> indices) const;

  /// Keeps only the listed feature columns, in the listed order.
  Dataset project(std::span<const std::size_t> columns) const;

  /// Throws Schema on ragged storage, Contract on non-finite values or bad targets.
  void validate() const;
};

struct LoadOptions {
  /// When non-empty, rows whose label is not listed are dropped.
  std::vector<std::string> allowed_classes;
  /// When false a missing label column is tolerated and labels are left empty.
  bool require_label = true;
};

struct LoadResult {
  Dataset data;
  std::size_t dropped_rows = 0;
};

/// Reads a comma-separated file with a header row. Every schema column and
/// the label column must be present; other columns are ignored.
LoadResult load_csv(const std::filesystem::path& path, const FeatureSchema& schema,
                    const LoadOptions& options = {});

/// Same as load_csv, reading from an in-memory string. `source` names the
/// input in error messages.
LoadResult parse_csv(const std::string& text, const FeatureSchema& schema,
                     const LoadOptions& options = {}, const std::string& source = "<memory>");

LabelCodec fit_label_codec(std::span<const std::string> labels);

/// Fills data.targets. Throws Schema when a label is unknown to the codec.
void encode_labels(Dataset& data, const LabelCodec& codec);

std::vector<double> one_hot(std::size_t index, std::size_t n);

NormalizationParams fit_normalizer(const Dataset& data);

/// Min-max scaling into [0, 1]. Constant features map to 0, values outside
/// the fitted range are clipped.
Dataset apply_normalizer(const Dataset& data, const NormalizationParams& params);
void normalize_row(std::span<double> row, const NormalizationParams& params);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

SplitIndices split_indices(std::size_t n, double train_fraction, std::uint64_t seed);

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double train_fraction,
                                             std::uint64_t seed);

}  // namespace flowclass
