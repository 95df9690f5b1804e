#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "flowclass/dataset.hpp"

namespace flowclass::featsel {

struct ExtraTreesParams {
  int n_trees = 100;
  /// Candidate features per split; 0 means ceil(sqrt(d)).
  int max_features = 0;
  int min_samples_split = 2;
  std::optional<int> max_depth;
  std::uint64_t seed = 0;
};

/// A node of a fitted tree. Leaves have feature == -1 and carry class counts;
/// internal nodes send value <= threshold to `left`, the rest to `right`.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double impurity_decrease = 0.0;
  std::size_t n_samples = 0;
  std::vector<std::size_t> class_counts;

  bool is_leaf() const noexcept { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  std::size_t depth() const;
  const TreeNode& leaf_for(std::span<const double> features) const;
};

struct ExtraTreesModel {
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  std::size_t n_samples = 0;
  std::vector<Tree> trees;
};

struct ImportanceReport {
  std::vector<double> scores;
  /// Feature indices, descending score, ties by lower index.
  std::vector<std::size_t> ranking;
};

/// Shannon entropy in bits of a class histogram.
double entropy(std::span<const std::size_t> counts);

/// Entropy reduction achieved by splitting `parent` into `left` and `right`.
double information_gain(std::span<const std::size_t> parent, std::span<const std::size_t> left,
                        std::span<const std::size_t> right);

/// Grows an extremely randomized tree ensemble on the full dataset. Labels must be encoded.
ExtraTreesModel fit_extra_trees(const Dataset& data, const ExtraTreesParams& params);

ImportanceReport feature_importances(const ExtraTreesModel& model);

std::vector<std::size_t> rank_scores(std::span<const double> scores);
std::vector<std::size_t> select_top_k(const ImportanceReport& report, std::size_t k);

std::size_t predict_forest(const ExtraTreesModel& model, std::span<const double> features);

}  // namespace flowclass::featsel
