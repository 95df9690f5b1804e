#include "flowclass/featsel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowclass/error.hpp"
#include "flowclass/random.hpp"

namespace flowclass::featsel {

double entropy(std::span<const std::size_t> counts) {
  const auto total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (total == 0) return 0.0;
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

double information_gain(std::span<const std::size_t> parent, std::span<const std::size_t> left,
                        std::span<const std::size_t> right) {
  require(parent.size() == left.size() && parent.size() == right.size(), ErrorKind::Contract,
          "class histograms differ in length");
  for (std::size_t c = 0; c < parent.size(); ++c)
    require(left[c] + right[c] == parent[c], ErrorKind::Contract,
            "child histograms do not sum to the parent");
  const auto n = std::accumulate(parent.begin(), parent.end(), std::size_t{0});
  if (n == 0) return 0.0;
  const auto n_left = std::accumulate(left.begin(), left.end(), std::size_t{0});
  const double h = entropy(parent);
  const double w_left = static_cast<double>(n_left) / static_cast<double>(n);
  const double gain = h - w_left * entropy(left) - (1.0 - w_left) * entropy(right);
  // Rounding can push a zero gain slightly negative or a perfect one past h.
  return std::clamp(gain, 0.0, h);
}

std::size_t Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  std::size_t best = 0;
  while (!stack.empty()) {
    const auto [id, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    const auto& node = nodes[static_cast<std::size_t>(id)];
    if (!node.is_leaf()) {
      stack.emplace_back(node.left, d + 1);
      stack.emplace_back(node.right, d + 1);
    }
  }
  return best;
}

const TreeNode& Tree::leaf_for(std::span<const double> features) const {
  const TreeNode* node = &nodes.front();
  while (!node->is_leaf()) {
    const auto next = features[static_cast<std::size_t>(node->feature)] <= node->threshold
                          ? node->left
                          : node->right;
    node = &nodes[static_cast<std::size_t>(next)];
  }
  return *node;
}

namespace {

struct PendingNode {
  int id;
  std::size_t begin;
  std::size_t end;
  std::size_t depth;
};

Tree grow_tree(const Dataset& data, std::size_t n_classes, const ExtraTreesParams& params,
               std::size_t max_features, Rng& rng) {
  const std::size_t d = data.cols();
  std::vector<std::size_t> idx(data.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<std::size_t> features(d);
  std::iota(features.begin(), features.end(), std::size_t{0});

  Tree tree;
  tree.nodes.emplace_back();
  std::vector<PendingNode> stack{{0, 0, idx.size(), 0}};

  std::vector<std::size_t> counts(n_classes), left(n_classes), right(n_classes);
  std::vector<std::size_t> best_left(n_classes);

  while (!stack.empty()) {
    const auto node = stack.back();
    stack.pop_back();
    const std::size_t n = node.end - node.begin;

    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = node.begin; i < node.end; ++i) ++counts[data.targets[idx[i]]];
    const bool pure = std::count_if(counts.begin(), counts.end(),
                                    [](std::size_t c) { return c > 0; }) <= 1;
    const bool too_small = n < static_cast<std::size_t>(params.min_samples_split);
    const bool too_deep =
        params.max_depth && node.depth >= static_cast<std::size_t>(*params.max_depth);

    auto make_leaf = [&] {
      auto& leaf = tree.nodes[static_cast<std::size_t>(node.id)];
      leaf.n_samples = n;
      leaf.class_counts = counts;
    };
    if (pure || too_small || too_deep) {
      make_leaf();
      continue;
    }

    // Partial Fisher-Yates: the first max_features entries become the candidates.
    for (std::size_t k = 0; k < max_features; ++k) {
      const auto j = k + static_cast<std::size_t>(rng.below(d - k));
      std::swap(features[k], features[j]);
    }
    std::vector<std::size_t> candidates(features.begin(),
                                        features.begin() + static_cast<std::ptrdiff_t>(max_features));
    std::sort(candidates.begin(), candidates.end());

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_gain = -1.0;
    for (auto f : candidates) {
      double lo = data.at(idx[node.begin], f);
      double hi = lo;
      for (std::size_t i = node.begin + 1; i < node.end; ++i) {
        const double v = data.at(idx[i], f);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (!(hi > lo)) continue;
      const double threshold = rng.uniform(lo, hi);
      std::fill(left.begin(), left.end(), 0);
      std::size_t n_left = 0;
      for (std::size_t i = node.begin; i < node.end; ++i) {
        if (data.at(idx[i], f) <= threshold) {
          ++left[data.targets[idx[i]]];
          ++n_left;
        }
      }
      if (n_left == 0 || n_left == n) continue;
      for (std::size_t c = 0; c < n_classes; ++c) right[c] = counts[c] - left[c];
      const double gain = information_gain(counts, left, right);
      // Candidates are visited in index order, so strict > keeps the lowest index on ties.
      if (gain > best_gain) {
        best_gain = gain;
        best_feature = static_cast<int>(f);
        best_threshold = threshold;
      }
    }
    if (best_feature < 0) {
      make_leaf();
      continue;
    }

    const auto f = static_cast<std::size_t>(best_feature);
    const auto mid = std::partition(
        idx.begin() + static_cast<std::ptrdiff_t>(node.begin),
        idx.begin() + static_cast<std::ptrdiff_t>(node.end),
        [&](std::size_t r) { return data.at(r, f) <= best_threshold; });
    const auto split = static_cast<std::size_t>(mid - idx.begin());

    const int left_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const int right_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    auto& internal = tree.nodes[static_cast<std::size_t>(node.id)];
    internal.feature = best_feature;
    internal.threshold = best_threshold;
    internal.left = left_id;
    internal.right = right_id;
    internal.impurity_decrease = best_gain;
    internal.n_samples = n;

    stack.push_back({right_id, split, node.end, node.depth + 1});
    stack.push_back({left_id, node.begin, split, node.depth + 1});
  }
  return tree;
}

std::size_t argmax_lowest(std::span<const std::size_t> counts) {
  return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

}  // namespace

ExtraTreesModel fit_extra_trees(const Dataset& data, const ExtraTreesParams& params) {
  require(!data.empty(), ErrorKind::EmptyInput, "cannot fit extra trees on an empty dataset");
  require(data.encoded(), ErrorKind::Contract, "extra trees need encoded labels");
  require(params.n_trees >= 1, ErrorKind::Config, "n_trees must be >= 1");
  require(params.min_samples_split >= 2, ErrorKind::Config, "min_samples_split must be >= 2");
  require(!params.max_depth || *params.max_depth >= 1, ErrorKind::Config,
          "max_depth must be >= 1");
  const std::size_t d = data.cols();
  const std::size_t max_features =
      params.max_features > 0
          ? static_cast<std::size_t>(params.max_features)
          : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
  require(max_features >= 1 && max_features <= d, ErrorKind::Config,
          "max_features must lie in [1, d]");

  ExtraTreesModel model;
  model.n_features = d;
  model.n_samples = data.rows();
  model.n_classes = *std::max_element(data.targets.begin(), data.targets.end()) + 1;
  model.trees.reserve(static_cast<std::size_t>(params.n_trees));
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(params.seed, static_cast<std::uint64_t>(t));
    model.trees.push_back(grow_tree(data, model.n_classes, params, max_features, rng));
  }
  return model;
}

std::vector<std::size_t> rank_scores(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

ImportanceReport feature_importances(const ExtraTreesModel& model) {
  require(!model.trees.empty(), ErrorKind::Contract, "extra trees model is not fitted");
  ImportanceReport report;
  report.scores.assign(model.n_features, 0.0);
  const double n_total = static_cast<double>(model.n_samples);
  for (const auto& tree : model.trees) {
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) continue;
      report.scores[static_cast<std::size_t>(node.feature)] +=
          static_cast<double>(node.n_samples) / n_total * node.impurity_decrease;
    }
  }
  // Averaging over trees cancels in the normalization below.
  const double total = std::accumulate(report.scores.begin(), report.scores.end(), 0.0);
  if (total > 0.0) {
    for (auto& s : report.scores) s /= total;
  } else {
    std::fill(report.scores.begin(), report.scores.end(), 0.0);
  }
  report.ranking = rank_scores(report.scores);
  return report;
}

std::vector<std::size_t> select_top_k(const ImportanceReport& report, std::size_t k) {
  require(k >= 1 && k <= report.scores.size(), ErrorKind::Bounds,
          "k=" + std::to_string(k) + " outside [1, " + std::to_string(report.scores.size()) + "]");
  const auto ranking = rank_scores(report.scores);
  return {ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(k)};
}

std::size_t predict_forest(const ExtraTreesModel& model, std::span<const double> features) {
  require(!model.trees.empty(), ErrorKind::Contract, "extra trees model is not fitted");
  require(features.size() == model.n_features, ErrorKind::Schema,
          "feature width " + std::to_string(features.size()) + " != model width " +
              std::to_string(model.n_features));
  std::vector<std::size_t> votes(model.n_classes, 0);
  for (const auto& tree : model.trees) ++votes[argmax_lowest(tree.leaf_for(features).class_counts)];
  return argmax_lowest(votes);
}

}  // namespace flowclass::featsel
