#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flowclass/dataset.hpp"

namespace flowclass::eval {

/// counts(i, j) = samples of true class i predicted as class j.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t n_classes, std::vector<std::string> class_names = {});

  std::size_t n_classes() const noexcept { return n_; }
  std::size_t& at(std::size_t truth, std::size_t predicted) { return counts_[truth * n_ + predicted]; }
  std::size_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * n_ + predicted];
  }
  std::size_t total() const;
  std::size_t trace() const;
  const std::vector<std::string>& class_names() const noexcept { return names_; }

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> counts_;
  std::vector<std::string> names_;
};

ConfusionMatrix confusion(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                          std::size_t n_classes, std::vector<std::string> class_names = {});

struct ClassMetrics {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t support = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

enum class Averaging { Weighted, Macro };

struct EvalReport {
  std::vector<std::string> class_names;
  std::vector<ClassMetrics> per_class;
  std::size_t total = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Averaging averaging = Averaging::Weighted;

  /// Per-class rows (class,accuracy,precision,recall,f1,support) and an "overall" row.
  std::string to_csv() const;
  std::string to_text() const;
};

/// One-vs-rest metrics per class; zero denominators give 0.
EvalReport metrics(const ConfusionMatrix& cm, Averaging averaging = Averaging::Weighted);

struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::vector<std::size_t>> folds;
};

/// Seeded shuffle then round-robin assignment. With `stratify_by`, each class
/// is shuffled separately and dealt in turn, which keeps class shares even.
FoldPlan kfold_plan(std::size_t n, std::size_t k, std::uint64_t seed,
                    std::span<const std::size_t> stratify_by = {});

/// A fitted model that maps a raw feature row to a class index.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::size_t predict(std::span<const double> features) const = 0;
};

/// Fits preprocessing + model on raw, label-encoded training rows.
using Trainer =
    std::function<std::unique_ptr<Classifier>(const Dataset& train, std::uint64_t seed)>;

/// Fits on `train`, predicts every row of `test`, and reports.
EvalReport evaluate(const Trainer& trainer, const Dataset& train, const Dataset& test,
                    std::size_t n_classes, std::vector<std::string> class_names,
                    std::uint64_t seed, Averaging averaging = Averaging::Weighted,
                    ConfusionMatrix* cm_out = nullptr);

struct CvOptions {
  std::size_t k = 10;
  std::uint64_t seed = 0;
  bool stratified = false;
  /// When set, each class is subsampled to at most this many rows first.
  std::optional<std::size_t> per_class_cap;
  Averaging averaging = Averaging::Weighted;
};

struct CvResult {
  std::vector<EvalReport> folds;
  std::vector<ConfusionMatrix> confusions;
  /// Unweighted mean of the fold metrics.
  EvalReport average;
  std::vector<std::string> warnings;

  /// Rows fold,accuracy,precision,recall,f1 then a "mean" row.
  std::string to_csv() const;
};

/// `data` must be label-encoded; n_classes and names come from `codec`.
CvResult cross_validate(const Dataset& data, const LabelCodec& codec, const Trainer& trainer,
                        const CvOptions& options);

EvalReport mean_report(std::span<const EvalReport> reports);

// ---------------------------------------------------------------------------
// Grid search

struct GridAxis {
  std::string name;
  /// Values in textual form; the caller decides how to interpret them.
  std::vector<std::string> values;
};

using Assignment = std::vector<std::pair<std::string, std::string>>;

struct GridSpec {
  std::vector<GridAxis> axes;

  void validate() const;
  std::size_t size() const;
  /// Cartesian product; the last axis varies fastest.
  std::vector<Assignment> cells() const;
};

struct GridResult {
  std::size_t grid_index = 0;
  Assignment assignment;
  EvalReport report;
};

struct GridSearchResult {
  /// Best first: accuracy, then F1, then grid order.
  std::vector<GridResult> ranked;

  const GridResult& best() const { return ranked.front(); }
  std::string to_csv() const;
};

GridSearchResult grid_search(const GridSpec& grid,
                             const std::function<EvalReport(const Assignment&)>& evaluate_cell);

}  // namespace flowclass::eval
