// Acceptance suite: one PASS / FAIL / SKIP line per criterion.
//
// Usage: acceptance [path/to/flowclass]
//
// The trace-dataset criteria run only when FLOWCLASS_MOORE_CSV names a CSV
// with the twelve flow features and a "class" column. FLOWCLASS_MOORE_CLASSES
// (comma separated) restricts the classes kept.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "flowclass/baselines.hpp"
#include "flowclass/config.hpp"
#include "flowclass/dataset.hpp"
#include "flowclass/eval.hpp"
#include "flowclass/featsel.hpp"
#include "flowclass/model_io.hpp"
#include "flowclass/nn.hpp"
#include "flowclass/pipeline.hpp"
#include "gradcheck.hpp"
#include "synthetic.hpp"

using namespace flowclass;
namespace fs = std::filesystem;

namespace {

// Tolerances and thresholds.
constexpr double kMooreDnnAccuracy = 0.970;
constexpr double kMooreSmokeAccuracy = 0.950;
constexpr int kMooreSmokeEpochs = 50;
constexpr double kMooreRuntimeBudgetSec = 2 * 3600.0;
constexpr double kMooreBaselineAccuracy = 0.950;
constexpr double kSweepSpreadPoints = 1.5;

constexpr int kGradCases = 20;
constexpr long double kGradStep = 1e-5L;
constexpr long double kGradMaxRelError = 1e-4L;
constexpr double kGradBudgetSec = 30.0;

constexpr double kSoftmaxSumTol = 1e-12;
constexpr double kSoftmaxShiftTol = 1e-12;
constexpr double kSoftmaxValueTol = 1e-6;

constexpr int kMetricsMatrices = 1000;
constexpr double kMetricsRatioTol = 1e-12;

constexpr std::size_t kKnnTrain = 500;
constexpr std::size_t kKnnQueries = 200;

constexpr std::size_t kBlobRows = 7000;
constexpr double kBlobSeparation = 4.0;  // per-axis offset, so means are 4*sqrt(2) sigma apart
constexpr int kBlobEpochs = 100;
constexpr double kBlobAccuracy = 0.95;

constexpr int kFeatselSeeds = 50;
constexpr double kFeatselHitRate = 0.95;

constexpr std::size_t kKfoldMaxN = 200;
constexpr int kRoundTripInputs = 1000;

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome pass(std::string d) { return {Status::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Status::Fail, std::move(d)}; }
Outcome verdict(bool ok, std::string d) { return {ok ? Status::Pass : Status::Fail, std::move(d)}; }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double accuracy_of(const eval::Classifier& model, const Dataset& data) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < data.rows(); ++i) ok += model.predict(data.row(i)) == data.targets[i];
  return static_cast<double>(ok) / static_cast<double>(data.rows());
}

// ---------------------------------------------------------------------------
// Trace dataset

struct MooreContext {
  std::optional<LoadedData> loaded;
  std::string skip_reason;
  std::optional<double> dnn_accuracy;
};

MooreContext& moore() {
  static MooreContext ctx = [] {
    MooreContext c;
    const char* path = std::getenv("FLOWCLASS_MOORE_CSV");
    if (!path || !*path) {
      c.skip_reason = "FLOWCLASS_MOORE_CSV not set";
      return c;
    }
    RunConfig config;
    config.data = path;
    if (const char* cls = std::getenv("FLOWCLASS_MOORE_CLASSES")) {
      std::stringstream ss(cls);
      for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) config.classes.push_back(item);
    }
    c.loaded = load_training_data(config);
    return c;
  }();
  return ctx;
}

RunConfig moore_config() {
  RunConfig c;
  c.seed = 1;
  return c;
}

Outcome moore_dnn() {
  auto& ctx = moore();
  if (!ctx.loaded) return {Status::Skip, ctx.skip_reason};
  const auto& [data, codec, dropped] = *ctx.loaded;

  auto smoke = moore_config();
  smoke.epochs = kMooreSmokeEpochs;
  const double smoke_acc = run_holdout(data, codec, smoke).report.accuracy;

  const auto t0 = std::chrono::steady_clock::now();
  const double acc = run_holdout(data, codec, moore_config()).report.accuracy;
  const double secs = seconds_since(t0);
  ctx.dnn_accuracy = acc;
  return verdict(acc >= kMooreDnnAccuracy && smoke_acc >= kMooreSmokeAccuracy &&
                     secs <= kMooreRuntimeBudgetSec,
                 fmt("500 epochs: %.4f (>= %.3f) in %.0fs (<= %.0fs); %d epochs: %.4f (>= %.3f)",
                     acc, kMooreDnnAccuracy, secs, kMooreRuntimeBudgetSec, kMooreSmokeEpochs,
                     smoke_acc, kMooreSmokeAccuracy));
}

Outcome moore_baselines() {
  auto& ctx = moore();
  if (!ctx.loaded) return {Status::Skip, ctx.skip_reason};
  const auto& [data, codec, dropped] = *ctx.loaded;
  auto knn = moore_config();
  knn.model_kind = ModelKind::Knn;
  auto svm = moore_config();
  svm.model_kind = ModelKind::Svm;
  const double knn_acc = run_holdout(data, codec, knn).report.accuracy;
  const double svm_acc = run_holdout(data, codec, svm).report.accuracy;
  if (!ctx.dnn_accuracy) ctx.dnn_accuracy = run_holdout(data, codec, moore_config()).report.accuracy;
  const double dnn = *ctx.dnn_accuracy;
  return verdict(knn_acc >= kMooreBaselineAccuracy && svm_acc >= kMooreBaselineAccuracy &&
                     dnn >= knn_acc && dnn >= svm_acc,
                 fmt("knn %.4f, svm %.4f (>= %.3f each); dnn %.4f >= both", knn_acc, svm_acc,
                     kMooreBaselineAccuracy, dnn));
}

Outcome moore_layer_sweep() {
  auto& ctx = moore();
  if (!ctx.loaded) return {Status::Skip, ctx.skip_reason};
  const auto& [data, codec, dropped] = *ctx.loaded;
  std::map<int, double> acc;
  for (int layers = 3; layers <= 10; ++layers) {
    auto c = moore_config();
    c.hidden_layers = layers;
    acc[layers] = 100.0 * run_holdout(data, codec, c).report.accuracy;
  }
  double lo = 100, hi = 0;
  bool three_lowest = true;
  std::string detail;
  for (const auto& [layers, a] : acc) {
    detail += fmt("%d:%.2f ", layers, a);
    if (layers == 3) continue;
    lo = std::min(lo, a);
    hi = std::max(hi, a);
    three_lowest = three_lowest && acc[3] < a;
  }
  return verdict(three_lowest && hi - lo <= kSweepSpreadPoints,
                 detail + fmt("| 3 strictly lowest: %s, 4-10 spread %.2f (<= %.1f)",
                              three_lowest ? "yes" : "no", hi - lo, kSweepSpreadPoints));
}

// ---------------------------------------------------------------------------
// Property suite

Outcome gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  long double worst = 0;
  std::size_t entries = 0;
  for (int s = 0; s < kGradCases; ++s) {
    const auto c = testing::random_case(1000 + static_cast<std::uint64_t>(s));
    const auto r = testing::gradient_check(c.params, c.spec, c.x, c.y, c.dropout, kGradStep);
    worst = std::max(worst, r.max_relative_error);
    entries += r.checked;
  }
  const double secs = seconds_since(t0);
  return verdict(worst <= kGradMaxRelError && secs <= kGradBudgetSec,
                 fmt("%d networks, %zu parameters, max rel err %.3Le (<= %.0Le), %.2fs (<= %.0fs)",
                     kGradCases, entries, worst, kGradMaxRelError, secs, kGradBudgetSec));
}

Outcome softmax_checks() {
  nn::Matrix<double> u(1, 3);
  u << 1, 2, 3;
  const auto p = nn::softmax(u);
  const double expected[] = {0.09003057, 0.24472847, 0.66524096};
  double value_err = 0;
  for (int j = 0; j < 3; ++j) value_err = std::max(value_err, std::fabs(p(0, j) - expected[j]));

  Rng rng(5);
  double sum_err = 0, shift_err = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto cols = static_cast<Eigen::Index>(2 + rng.below(10));
    nn::Matrix<double> x(4, cols);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-30, 30);
    const double c = rng.uniform(-500, 500);
    const auto a = nn::softmax(x);
    const auto b = nn::softmax(nn::Matrix<double>(x.array() + c));
    for (Eigen::Index i = 0; i < a.rows(); ++i) sum_err = std::max(sum_err, std::fabs(a.row(i).sum() - 1.0));
    shift_err = std::max(shift_err, (a - b).cwiseAbs().maxCoeff());
  }
  return verdict(value_err <= kSoftmaxValueTol && sum_err <= kSoftmaxSumTol &&
                     shift_err <= kSoftmaxShiftTol,
                 fmt("[1,2,3] err %.2e (<= %.0e); sum err %.2e (<= %.0e); shift err %.2e (<= %.0e)",
                     value_err, kSoftmaxValueTol, sum_err, kSoftmaxSumTol, shift_err,
                     kSoftmaxShiftTol));
}

Outcome metrics_oracle() {
  Rng rng(17);
  std::size_t count_mismatch = 0;
  double ratio_err = 0;
  for (int t = 0; t < kMetricsMatrices; ++t) {
    const std::size_t k = 2 + rng.below(7);
    eval::ConfusionMatrix cm(k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) cm.at(i, j) = rng.bernoulli(0.2) ? 0 : rng.below(50);
    if (cm.total() == 0) cm.at(0, 0) = 1;
    const auto r = eval::metrics(cm);

    std::size_t total = 0, trace = 0;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        total += cm.at(i, j);
        if (i == j) trace += cm.at(i, j);
      }
    double wp = 0, wr = 0, wf = 0;
    for (std::size_t c = 0; c < k; ++c) {
      // Recount by visiting every cell.
      std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
          const auto n = cm.at(i, j);
          if (i == c && j == c) tp += n;
          else if (j == c) fp += n;
          else if (i == c) fn += n;
          else tn += n;
        }
      const auto& m = r.per_class[c];
      count_mismatch += (m.tp != tp) + (m.fp != fp) + (m.fn != fn) + (m.tn != tn) +
                        (m.support != tp + fn);
      const double prec = tp + fp ? double(tp) / double(tp + fp) : 0.0;
      const double rec = tp + fn ? double(tp) / double(tp + fn) : 0.0;
      const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
      const double acc = double(tp + tn) / double(total);
      for (auto [got, want] : {std::pair{m.precision, prec}, {m.recall, rec}, {m.f1, f1}, {m.accuracy, acc}})
        ratio_err = std::max(ratio_err, std::fabs(got - want));
      const double w = double(tp + fn) / double(total);
      wp += w * prec;
      wr += w * rec;
      wf += w * f1;
    }
    for (auto [got, want] : {std::pair{r.accuracy, double(trace) / double(total)},
                             {r.precision, wp}, {r.recall, wr}, {r.f1, wf}})
      ratio_err = std::max(ratio_err, std::fabs(got - want));
  }

  eval::ConfusionMatrix ex(2);
  ex.at(0, 0) = 5;
  ex.at(0, 1) = 5;
  ex.at(1, 1) = 10;
  const auto r = eval::metrics(ex);
  const double ex_err =
      std::max(std::fabs(r.accuracy - 0.75), std::fabs(r.per_class[0].f1 - 2.0 / 3.0));
  return verdict(count_mismatch == 0 && ratio_err <= kMetricsRatioTol && ex_err <= kMetricsRatioTol,
                 fmt("%d matrices: %zu count mismatches, max ratio err %.2e (<= %.0e); "
                     "example accuracy %.4f, class-0 F1 %.6f",
                     kMetricsMatrices, count_mismatch, ratio_err, kMetricsRatioTol, r.accuracy,
                     r.per_class[0].f1));
}

std::size_t knn_scan(const Dataset& train, std::span<const double> q, std::size_t k) {
  // Exhaustive scan keeping the k best (distance, index) pairs in an ordered set.
  std::set<std::pair<double, std::size_t>> best;
  for (std::size_t i = 0; i < train.rows(); ++i) {
    double s = 0;
    for (std::size_t j = 0; j < q.size(); ++j) s += (train.at(i, j) - q[j]) * (train.at(i, j) - q[j]);
    best.insert({s, i});
    if (best.size() > k) best.erase(std::prev(best.end()));
  }
  std::map<std::size_t, std::pair<std::size_t, double>> votes;
  for (const auto& [d, i] : best) {
    votes[train.targets[i]].first += 1;
    votes[train.targets[i]].second += std::sqrt(d);
  }
  auto winner = votes.begin();
  for (auto it = votes.begin(); it != votes.end(); ++it)
    if (it->second.first > winner->second.first ||
        (it->second.first == winner->second.first && it->second.second < winner->second.second))
      winner = it;
  return winner->first;
}

Outcome knn_equivalence() {
  Rng rng(23);
  const std::size_t d = 4, n_classes = 5;
  auto random_set = [&](std::size_t n) {
    Dataset s;
    s.schema = testing::numbered_schema(d);
    std::vector<double> row(d);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : row) v = rng.uniform();
      const auto c = rng.below(n_classes);
      s.push_back(row, testing::class_name(c));
      s.targets.push_back(c);
    }
    return s;
  };
  const auto train = random_set(kKnnTrain);
  const auto queries = random_set(kKnnQueries);
  std::size_t mismatches = 0, total = 0;
  for (std::size_t k : {1, 3, 5, 7}) {
    const auto model = baselines::knn_fit(train, k);
    for (std::size_t q = 0; q < queries.rows(); ++q, ++total)
      mismatches += baselines::knn_predict(model, queries.row(q)) != knn_scan(train, queries.row(q), k);
  }
  return verdict(mismatches == 0, fmt("%zu/%zu predictions differ from the exhaustive scan "
                                      "(k in {1,3,5,7}, %zu train, %zu queries)",
                                      mismatches, total, kKnnTrain, kKnnQueries));
}

Outcome blob_dnn() {
  const auto data = testing::make_blobs(kBlobRows, 7, 12, kBlobSeparation, 2024);
  const auto codec = fit_label_codec(data.labels);
  RunConfig config;
  config.schema = data.schema;
  config.seed = 7;
  config.epochs = kBlobEpochs;
  const auto t0 = std::chrono::steady_clock::now();
  const auto a = run_holdout(data, codec, config);
  const double secs = seconds_since(t0);
  const auto b = run_holdout(data, codec, config);
  const bool same = model_to_json(a.fit.pipeline).dump() == model_to_json(b.fit.pipeline).dump() &&
                    a.report.accuracy == b.report.accuracy;
  return verdict(a.report.accuracy >= kBlobAccuracy && same,
                 fmt("test accuracy %.4f (>= %.2f) after %d epochs in %.1fs; rerun %s",
                     a.report.accuracy, kBlobAccuracy, kBlobEpochs, secs,
                     same ? "identical" : "DIFFERS"));
}

Outcome feature_selection() {
  int hits = 0;
  for (int s = 0; s < kFeatselSeeds; ++s) {
    Rng pick(static_cast<std::uint64_t>(s), 3);
    std::vector<std::size_t> cols(12);
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    pick.shuffle(std::span<std::size_t>(cols));
    std::vector<std::size_t> informative(cols.begin(), cols.begin() + 3);
    const auto data = testing::make_informative(1000, 12, informative, static_cast<std::uint64_t>(s));
    featsel::ExtraTreesParams p;
    p.seed = static_cast<std::uint64_t>(s);
    const auto top4 = featsel::select_top_k(featsel::feature_importances(featsel::fit_extra_trees(data, p)), 4);
    hits += std::all_of(informative.begin(), informative.end(), [&](std::size_t f) {
      return std::find(top4.begin(), top4.end(), f) != top4.end();
    });
  }
  const double rate = static_cast<double>(hits) / kFeatselSeeds;
  return verdict(rate >= kFeatselHitRate, fmt("all 3 informative features in the top 4 for %d/%d "
                                              "seeds (%.0f%%, >= %.0f%%)",
                                              hits, kFeatselSeeds, 100 * rate, 100 * kFeatselHitRate));
}

Outcome kfold_invariants() {
  std::size_t plans = 0, violations = 0;
  std::vector<std::size_t> labels;
  for (std::size_t n = 2; n <= kKfoldMaxN; ++n) {
    labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = (i * 7 + n) % 3;
    for (std::size_t k = 2; k <= n; ++k) {
      for (bool stratified : {false, true}) {
        const std::span<const std::size_t> by =
            stratified ? std::span<const std::size_t>(labels) : std::span<const std::size_t>{};
        const auto plan = eval::kfold_plan(n, k, n * 1000 + k, by);
        ++plans;
        bool ok = plan.folds.size() == k;
        std::vector<int> seen(n, 0);
        std::size_t smallest = n, largest = 0;
        for (const auto& f : plan.folds) {
          smallest = std::min(smallest, f.size());
          largest = std::max(largest, f.size());
          for (auto i : f) ok = ok && i < n && ++seen[i] == 1;
        }
        ok = ok && std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
        ok = ok && smallest >= 1 && largest - smallest <= 1;
        ok = ok && plan.folds == eval::kfold_plan(n, k, n * 1000 + k, by).folds;
        violations += !ok;
      }
    }
  }
  return verdict(violations == 0,
                 fmt("%zu plans (2 <= k <= n <= %zu, plain and stratified): %zu violate "
                     "partition / size / determinism",
                     plans, kKfoldMaxN, violations));
}

Outcome normalization_invariants() {
  Rng rng(41);
  std::size_t violations = 0, cells = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.below(50), d = 1 + rng.below(8);
    Dataset train, test;
    train.schema = test.schema = testing::numbered_schema(d);
    const std::size_t constant_col = rng.below(d);
    std::vector<double> row(d);
    auto fill = [&](Dataset& ds, double spread) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j)
          row[j] = j == constant_col ? 3.5 : rng.uniform(-spread, spread) * std::pow(10.0, double(j % 4));
        ds.push_back(row, "x");
      }
    };
    fill(train, 1.0);
    fill(test, 2.0);  // wider range exercises clipping
    const auto p = fit_normalizer(train);
    const auto a = apply_normalizer(train, p);
    const auto b = apply_normalizer(test, p);
    for (const auto* ds : {&a, &b})
      for (double v : ds->features) {
        ++cells;
        violations += !(v >= 0.0 && v <= 1.0);
      }
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        if (j == constant_col) {
          violations += a.at(i, j) != 0.0 || b.at(i, j) != 0.0;
        } else {
          if (train.at(i, j) == p.min[j]) violations += a.at(i, j) != 0.0;
          if (train.at(i, j) == p.max[j]) violations += a.at(i, j) != 1.0;
        }
      }
    }
  }
  return verdict(violations == 0, fmt("%zu normalized cells over 200 random fits: %zu violations "
                                      "(range [0,1], min->0, max->1, constant->0)",
                                      cells, violations));
}

Outcome model_round_trip() {
  const auto data = testing::make_blobs(400, 4, 12, 2.0, 77);
  const auto codec = fit_label_codec(data.labels);
  Rng rng(8);
  std::vector<std::vector<double>> inputs(kRoundTripInputs, std::vector<double>(12));
  for (auto& in : inputs)
    for (auto& v : in) v = rng.uniform(-4, 8);

  const auto dir = fs::temp_directory_path() / "flowclass_acceptance_roundtrip";
  fs::create_directories(dir);
  std::size_t differ = 0, compared = 0;
  for (auto kind : {ModelKind::Dnn, ModelKind::Knn, ModelKind::Svm}) {
    RunConfig config;
    config.schema = data.schema;
    config.model_kind = kind;
    config.epochs = 20;
    config.batch_size = 64;
    config.top_k = 8;
    config.et_trees = 20;
    const auto fit = fit_pipeline(data, codec, config, 3);
    const auto path = dir / (std::string(to_string(kind)) + ".json");
    save_model(fit.pipeline, path);
    const auto loaded = load_model(path);
    for (const auto& in : inputs) {
      ++compared;
      differ += loaded.predict(in) != fit.pipeline.predict(in);
      if (kind == ModelKind::Dnn) differ += loaded.probabilities(in) != fit.pipeline.probabilities(in);
    }
  }
  fs::remove_all(dir);
  return verdict(differ == 0, fmt("%zu predictions (dnn, knn, svm x %d inputs): %zu not "
                                  "bit-identical after save/load",
                                  compared, kRoundTripInputs, differ));
}

Outcome cli_determinism(const std::string& binary) {
  if (binary.empty() || !fs::exists(binary)) return fail("flowclass binary not found: '" + binary + "'");
  const auto dir = fs::temp_directory_path() / "flowclass_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto data = testing::make_blobs(600, 3, 12, 3.0, 5);
  {
    std::ofstream out(dir / "flows.csv");
    for (const auto& n : FeatureSchema::flow_default().names) out << n << ',';
    out << "class\n";
    out.precision(17);
    for (std::size_t i = 0; i < data.rows(); ++i) {
      for (double v : data.row(i)) out << v << ',';
      out << data.labels[i] << '\n';
    }
  }
  auto train = [&](const std::string& name) {
    const auto sub = dir / name;
    fs::create_directories(sub);
    const std::string cmd = "'" + binary + "' train --data '" + (dir / "flows.csv").string() +
                            "' --seed 99 --epochs 30 --batch-size 100 --top-k 8 --model '" +
                            (sub / "model.json").string() + "' > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  const int a = train("a"), b = train("b");
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  const auto ma = slurp(dir / "a" / "model.json");
  const auto mb = slurp(dir / "b" / "model.json");
  fs::remove_all(dir);
  return verdict(a == 0 && b == 0 && !ma.empty() && ma == mb,
                 fmt("exit codes %d/%d; model files %zu and %zu bytes, %s", a, b, ma.size(),
                     mb.size(), ma == mb ? "byte-identical" : "DIFFERENT"));
}

}  // namespace

int main(int argc, char** argv) {
  const std::string binary = argc > 1 ? argv[1] : "";
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"trace_dnn_holdout", moore_dnn},
      {"trace_baselines", moore_baselines},
      {"trace_layer_sweep", moore_layer_sweep},
      {"gradient_check", gradient_check},
      {"softmax", softmax_checks},
      {"metrics_oracle", metrics_oracle},
      {"knn_equivalence", knn_equivalence},
      {"blob_dnn", blob_dnn},
      {"feature_selection", feature_selection},
      {"kfold_partition", kfold_invariants},
      {"normalization", normalization_invariants},
      {"model_round_trip", model_round_trip},
      {"cli_determinism", [&] { return cli_determinism(binary); }},
  };

  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    std::printf("%s  %-20s %s\n", tag, name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.status == Status::Fail;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
