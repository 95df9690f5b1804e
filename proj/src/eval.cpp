#include "flowclass/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "flowclass/error.hpp"
#include "flowclass/random.hpp"

namespace flowclass::eval {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string class_label(const std::vector<std::string>& names, std::size_t c) {
  return c < names.size() ? names[c] : std::to_string(c);
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

// ---------------------------------------------------------------------------
// Confusion matrix and metrics

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes, std::vector<std::string> class_names)
    : n_(n_classes), counts_(n_classes * n_classes, 0), names_(std::move(class_names)) {
  require(names_.empty() || names_.size() == n_, ErrorKind::Contract,
          "class name count does not match the class count");
}

std::size_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t c = 0; c < n_; ++c) t += at(c, c);
  return t;
}

ConfusionMatrix confusion(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                          std::size_t n_classes, std::vector<std::string> class_names) {
  require(truth.size() == predicted.size(), ErrorKind::Contract,
          "truth and prediction lengths differ");
  ConfusionMatrix cm(n_classes, std::move(class_names));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    require(truth[i] < n_classes && predicted[i] < n_classes, ErrorKind::Contract,
            "label out of range at position " + std::to_string(i));
    ++cm.at(truth[i], predicted[i]);
  }
  return cm;
}

EvalReport metrics(const ConfusionMatrix& cm, Averaging averaging) {
  const std::size_t n = cm.n_classes();
  const std::size_t total = cm.total();
  require(n > 0 && total > 0, ErrorKind::EmptyInput, "confusion matrix is empty");

  EvalReport report;
  report.class_names = cm.class_names();
  report.total = total;
  report.averaging = averaging;
  report.per_class.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t row = 0, col = 0;
    for (std::size_t j = 0; j < n; ++j) {
      row += cm.at(c, j);
      col += cm.at(j, c);
    }
    auto& m = report.per_class[c];
    m.tp = cm.at(c, c);
    m.fp = col - m.tp;
    m.fn = row - m.tp;
    m.tn = total - m.tp - m.fp - m.fn;
    m.support = row;
    m.precision = ratio(m.tp, m.tp + m.fp);
    m.recall = ratio(m.tp, m.tp + m.fn);
    m.f1 = m.precision + m.recall > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    m.accuracy = ratio(m.tp + m.tn, total);
  }
  report.accuracy = ratio(cm.trace(), total);
  for (const auto& m : report.per_class) {
    const double w = averaging == Averaging::Weighted
                         ? static_cast<double>(m.support) / static_cast<double>(total)
                         : 1.0 / static_cast<double>(n);
    report.precision += w * m.precision;
    report.recall += w * m.recall;
    report.f1 += w * m.f1;
  }
  return report;
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "class,accuracy,precision,recall,f1,support\n";
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    const auto& m = per_class[c];
    out << class_label(class_names, c) << ',' << fmt17(m.accuracy) << ',' << fmt17(m.precision)
        << ',' << fmt17(m.recall) << ',' << fmt17(m.f1) << ',' << m.support << '\n';
  }
  out << "overall," << fmt17(accuracy) << ',' << fmt17(precision) << ',' << fmt17(recall) << ','
      << fmt17(f1) << ',' << total << '\n';
  return out.str();
}

std::string EvalReport::to_text() const {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-16s %9s %9s %9s %9s %9s\n", "class", "accuracy", "precision",
                "recall", "f1", "support");
  out << buf;
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    const auto& m = per_class[c];
    std::snprintf(buf, sizeof buf, "%-16s %8.2f%% %8.2f%% %8.2f%% %8.2f%% %9zu\n",
                  class_label(class_names, c).c_str(), 100 * m.accuracy, 100 * m.precision,
                  100 * m.recall, 100 * m.f1, m.support);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "%-16s %8.2f%% %8.2f%% %8.2f%% %8.2f%% %9zu\n",
                averaging == Averaging::Weighted ? "overall" : "overall(macro)", 100 * accuracy,
                100 * precision, 100 * recall, 100 * f1, total);
  out << buf;
  return out.str();
}

// ---------------------------------------------------------------------------
// Folds

FoldPlan kfold_plan(std::size_t n, std::size_t k, std::uint64_t seed,
                    std::span<const std::size_t> stratify_by) {
  require(k >= 2, ErrorKind::Config, "k must be >= 2");
  require(k <= n, ErrorKind::Config,
          "k=" + std::to_string(k) + " exceeds the number of rows (" + std::to_string(n) + ")");
  require(stratify_by.empty() || stratify_by.size() == n, ErrorKind::Contract,
          "stratification labels do not match n");
  Rng rng(seed);
  std::vector<std::size_t> order;
  order.reserve(n);
  if (stratify_by.empty()) {
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
  } else {
    std::map<std::size_t, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[stratify_by[i]].push_back(i);
    for (auto& [cls, members] : by_class) {
      rng.shuffle(std::span<std::size_t>(members));
      order.insert(order.end(), members.begin(), members.end());
    }
  }
  FoldPlan plan;
  plan.k = k;
  plan.folds.resize(k);
  for (std::size_t i = 0; i < n; ++i) plan.folds[i % k].push_back(order[i]);
  for (auto& f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

// ---------------------------------------------------------------------------
// Cross-validation

EvalReport evaluate(const Trainer& trainer, const Dataset& train, const Dataset& test,
                    std::size_t n_classes, std::vector<std::string> class_names,
                    std::uint64_t seed, Averaging averaging, ConfusionMatrix* cm_out) {
  require(test.encoded(), ErrorKind::Contract, "evaluation data must have encoded labels");
  const auto model = trainer(train, seed);
  std::vector<std::size_t> predicted(test.rows());
  for (std::size_t i = 0; i < test.rows(); ++i) predicted[i] = model->predict(test.row(i));
  auto cm = confusion(test.targets, predicted, n_classes, std::move(class_names));
  auto report = metrics(cm, averaging);
  if (cm_out) *cm_out = std::move(cm);
  return report;
}

EvalReport mean_report(std::span<const EvalReport> reports) {
  require(!reports.empty(), ErrorKind::EmptyInput, "no reports to average");
  EvalReport avg = reports.front();
  const double k = static_cast<double>(reports.size());
  avg.total = 0;
  avg.accuracy = avg.precision = avg.recall = avg.f1 = 0.0;
  for (auto& m : avg.per_class) m = ClassMetrics{};
  for (const auto& r : reports) {
    avg.total += r.total;
    avg.accuracy += r.accuracy / k;
    avg.precision += r.precision / k;
    avg.recall += r.recall / k;
    avg.f1 += r.f1 / k;
    for (std::size_t c = 0; c < avg.per_class.size() && c < r.per_class.size(); ++c) {
      auto& a = avg.per_class[c];
      const auto& m = r.per_class[c];
      a.tp += m.tp;
      a.fp += m.fp;
      a.fn += m.fn;
      a.tn += m.tn;
      a.support += m.support;
      a.accuracy += m.accuracy / k;
      a.precision += m.precision / k;
      a.recall += m.recall / k;
      a.f1 += m.f1 / k;
    }
  }
  return avg;
}

CvResult cross_validate(const Dataset& data, const LabelCodec& codec, const Trainer& trainer,
                        const CvOptions& options) {
  require(data.encoded(), ErrorKind::Contract, "cross-validation needs encoded labels");
  const std::size_t n_classes = codec.size();

  std::vector<std::size_t> pool(data.rows());
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  if (options.per_class_cap) {
    Rng rng(options.seed, 0x5eed);
    std::map<std::size_t, std::vector<std::size_t>> by_class;
    for (auto i : pool) by_class[data.targets[i]].push_back(i);
    pool.clear();
    for (auto& [cls, members] : by_class) {
      rng.shuffle(std::span<std::size_t>(members));
      if (members.size() > *options.per_class_cap) members.resize(*options.per_class_cap);
      pool.insert(pool.end(), members.begin(), members.end());
    }
    std::sort(pool.begin(), pool.end());
  }
  const Dataset working = data.subset(pool);

  const auto plan = kfold_plan(working.rows(), options.k, options.seed,
                               options.stratified ? std::span<const std::size_t>(working.targets)
                                                  : std::span<const std::size_t>{});
  std::vector<bool> present(n_classes, false);
  for (auto t : working.targets) present[t] = true;

  CvResult result;
  for (std::size_t f = 0; f < plan.k; ++f) {
    std::vector<std::size_t> train_idx;
    for (std::size_t g = 0; g < plan.k; ++g)
      if (g != f) train_idx.insert(train_idx.end(), plan.folds[g].begin(), plan.folds[g].end());
    std::sort(train_idx.begin(), train_idx.end());
    const Dataset train = working.subset(train_idx);
    const Dataset test = working.subset(plan.folds[f]);

    std::vector<bool> in_fold(n_classes, false);
    for (auto t : test.targets) in_fold[t] = true;
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (present[c] && !in_fold[c]) {
        result.warnings.push_back("fold " + std::to_string(f + 1) + " has no samples of class '" +
                                  codec.decode(c) + "'");
      }
    }

    ConfusionMatrix cm;
    result.folds.push_back(evaluate(trainer, train, test, n_classes, codec.classes(),
                                    options.seed + f, options.averaging, &cm));
    result.confusions.push_back(std::move(cm));
  }
  result.average = mean_report(result.folds);
  return result;
}

std::string CvResult::to_csv() const {
  std::ostringstream out;
  out << "fold,accuracy,precision,recall,f1\n";
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& r = folds[f];
    out << f + 1 << ',' << fmt17(r.accuracy) << ',' << fmt17(r.precision) << ','
        << fmt17(r.recall) << ',' << fmt17(r.f1) << '\n';
  }
  out << "mean," << fmt17(average.accuracy) << ',' << fmt17(average.precision) << ','
      << fmt17(average.recall) << ',' << fmt17(average.f1) << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Grid search

void GridSpec::validate() const {
  require(!axes.empty(), ErrorKind::Config, "grid has no axes");
  std::set<std::string> names;
  for (const auto& axis : axes) {
    require(!axis.values.empty(), ErrorKind::Config, "grid axis '" + axis.name + "' is empty");
    require(names.insert(axis.name).second, ErrorKind::Config,
            "grid axis '" + axis.name + "' appears twice");
  }
}

std::size_t GridSpec::size() const {
  std::size_t n = 1;
  for (const auto& axis : axes) n *= axis.values.size();
  return n;
}

std::vector<Assignment> GridSpec::cells() const {
  validate();
  std::vector<Assignment> out;
  std::vector<std::size_t> digit(axes.size(), 0);
  for (std::size_t cell = 0; cell < size(); ++cell) {
    Assignment a;
    for (std::size_t i = 0; i < axes.size(); ++i) a.emplace_back(axes[i].name, axes[i].values[digit[i]]);
    out.push_back(std::move(a));
    for (std::size_t i = axes.size(); i-- > 0;) {
      if (++digit[i] < axes[i].values.size()) break;
      digit[i] = 0;
    }
  }
  return out;
}

GridSearchResult grid_search(const GridSpec& grid,
                             const std::function<EvalReport(const Assignment&)>& evaluate_cell) {
  const auto cells = grid.cells();
  GridSearchResult result;
  for (std::size_t i = 0; i < cells.size(); ++i)
    result.ranked.push_back({i, cells[i], evaluate_cell(cells[i])});
  std::stable_sort(result.ranked.begin(), result.ranked.end(),
                   [](const GridResult& a, const GridResult& b) {
                     if (a.report.accuracy != b.report.accuracy)
                       return a.report.accuracy > b.report.accuracy;
                     if (a.report.f1 != b.report.f1) return a.report.f1 > b.report.f1;
                     return a.grid_index < b.grid_index;
                   });
  return result;
}

std::string GridSearchResult::to_csv() const {
  std::ostringstream out;
  out << "rank,grid_index";
  if (!ranked.empty())
    for (const auto& [name, value] : ranked.front().assignment) out << ',' << name;
  out << ",accuracy,precision,recall,f1\n";
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const auto& g = ranked[r];
    out << r + 1 << ',' << g.grid_index;
    for (const auto& [name, value] : g.assignment) {
      // Values may be JSON text; quote anything containing a comma or quote.
      if (value.find_first_of(",\"") != std::string::npos) {
        std::string q = "\"";
        for (char ch : value) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        out << ',' << q << '"';
      } else {
        out << ',' << value;
      }
    }
    out << ',' << fmt17(g.report.accuracy) << ',' << fmt17(g.report.precision) << ','
        << fmt17(g.report.recall) << ',' << fmt17(g.report.f1) << '\n';
  }
  return out.str();
}

}  // namespace flowclass::eval
