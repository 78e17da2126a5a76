#include "attrition/evaluate.hpp"

#include <algorithm>
#include <numeric>

#include "attrition/error.hpp"
#include "attrition/rng.hpp"

namespace attrition {

std::vector<Fold> k_fold_indices(std::size_t n, std::size_t k, std::span<const int> labels,
                                 std::uint64_t seed, bool stratified) {
  if (k < 2) throw ArgumentError("k must be at least 2");
  if (k > n) throw ArgumentError("k = " + std::to_string(k) + " exceeds n = " + std::to_string(n));
  if (stratified && labels.size() != n) throw ArgumentError("labels length differs from n");

  Rng rng(seed);
  std::vector<std::size_t> order;
  order.reserve(n);
  if (stratified) {
    for (int c = 0; c < 2; ++c) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] == c) members.push_back(i);
      }
      if (!members.empty() && members.size() < k) {
        throw ArgumentError("class " + std::to_string(c) + " has " +
                            std::to_string(members.size()) + " rows, fewer than k = " +
                            std::to_string(k));
      }
      rng.shuffle(std::span<std::size_t>(members));
      order.insert(order.end(), members.begin(), members.end());
    }
    if (order.size() != n) throw ArgumentError("labels must be 0 or 1");
  } else {
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
  }

  std::vector<std::size_t> fold_of(n);
  for (std::size_t p = 0; p < n; ++p) fold_of[order[p]] = p % k;
  std::vector<Fold> folds(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      (fold_of[i] == f ? folds[f].valid : folds[f].train).push_back(i);
    }
  }
  return folds;
}

std::vector<double> cross_val_accuracies(ModelKind kind, const EncodedTable& table, std::size_t k,
                                         const Hyperparams& hp, std::uint64_t fold_seed) {
  hp.validate(kind);
  const auto folds = k_fold_indices(table.n_rows(), k, table.labels, fold_seed, true);
  std::vector<double> acc(folds.size(), 0.0);
  std::vector<std::string> errors(folds.size());
  const auto nf = static_cast<long>(folds.size());
#pragma omp parallel for schedule(dynamic)
  for (long f = 0; f < nf; ++f) {
    try {
      const auto& fold = folds[static_cast<std::size_t>(f)];
      const TrainedModel model = fit(kind, table.select_rows(fold.train), hp);
      std::size_t correct = 0;
      for (std::size_t i : fold.valid) correct += predict(model, table.row(i)) == table.labels[i];
      acc[static_cast<std::size_t>(f)] =
          static_cast<double>(correct) / static_cast<double>(fold.valid.size());
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(f)] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw Error(to_string(kind) + " cross-validation failed: " + e);
  }
  return acc;
}

double cross_val_score(ModelKind kind, const EncodedTable& table, std::size_t k,
                       const Hyperparams& hp, std::uint64_t fold_seed) {
  const auto acc = cross_val_accuracies(kind, table, k, hp, fold_seed);
  double sum = 0.0;
  for (double a : acc) sum += a;
  return sum / static_cast<double>(acc.size());
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw ArgumentError("confusion: " + std::to_string(y_true.size()) + " labels vs " +
                        std::to_string(y_pred.size()) + " predictions");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool t = y_true[i] == 1, p = y_pred[i] == 1;
    if (t && p) ++cm.tp;
    else if (!t && p) ++cm.fp;
    else if (t) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> y_true) {
  if (scores.size() != y_true.size()) throw ArgumentError("roc: scores and labels differ in length");
  std::size_t pos = 0;
  for (int y : y_true) pos += y == 1;
  const std::size_t neg = y_true.size() - pos;
  if (pos == 0 || neg == 0) throw ArgumentError("roc: both classes are required");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<RocPoint> roc{{0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (y_true[order[i]] == 1 ? tp : fp) += 1;
      ++i;
    }
    const RocPoint p{static_cast<double>(fp) / static_cast<double>(neg),
                     static_cast<double>(tp) / static_cast<double>(pos)};
    if (p.fpr != roc.back().fpr || p.tpr != roc.back().tpr) roc.push_back(p);
  }
  return roc;
}

double trapezoid_auc(const std::vector<RocPoint>& roc) {
  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) / 2.0;
  }
  return area;
}

MetricsReport metrics(const ConfusionMatrix& cm, std::span<const double> scores,
                      std::span<const int> y_true) {
  if (cm.total() == 0) throw ArgumentError("metrics of an empty confusion matrix");
  MetricsReport r;
  const auto d = [](std::size_t a) { return static_cast<double>(a); };
  r.accuracy = d(cm.tp + cm.tn) / d(cm.total());
  r.precision = cm.tp + cm.fp > 0 ? d(cm.tp) / d(cm.tp + cm.fp) : 0.0;
  r.recall = cm.tp + cm.fn > 0 ? d(cm.tp) / d(cm.tp + cm.fn) : 0.0;
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  if (!scores.empty() && !y_true.empty()) {
    const bool has_pos = std::find(y_true.begin(), y_true.end(), 1) != y_true.end();
    const bool has_neg = std::find(y_true.begin(), y_true.end(), 0) != y_true.end();
    if (has_pos && has_neg) {
      r.roc_points = roc_curve(scores, y_true);
      r.auc = trapezoid_auc(r.roc_points);
    }
  }
  return r;
}

PipelineSeeds PipelineSeeds::from(std::uint64_t seed) {
  return {derive_seed(seed, 1), derive_seed(seed, 2), derive_seed(seed, 3),
          derive_seed(seed, 4), derive_seed(seed, 5), derive_seed(seed, 6)};
}

ProcessedTraining process_training(const EncodedTable& train, const PipelineConfig& config) {
  const auto seeds = PipelineSeeds::from(config.seed);
  ProcessedTraining out;
  EncodedTable table = train;
  if (config.flags.outlier_detect) {
    const auto forest = fit_isolation_forest(table, config.forest, seeds.outlier);
    auto removal = remove_outliers(table, forest, config.contamination);
    out.removed_outliers = std::move(removal.removed);
    table = std::move(removal.table);
    if (table.n_rows() == 0) throw DataError("outlier removal left an empty training table");
  }
  if (config.flags.imblearn) {
    auto r = resample(table, config.resample_method, config.resample_k, seeds.resample);
    out.resample_report = r.report;
    table = std::move(r.table);
  }
  out.unweighted = table;
  if (config.flags.weighted_feature) {
    out.weights = config.weights;
    out.table = apply_feature_weights(table, config.weights);
  } else {
    out.table = std::move(table);
  }
  return out;
}

ModelSelectionReport select_best(const EncodedTable& processed, const PipelineConfig& config) {
  if (config.kinds.empty()) throw ArgumentError("no model kinds configured");
  if (processed.n_rows() == 0) throw DataError("empty training table");
  const auto seeds = PipelineSeeds::from(config.seed);
  Hyperparams hp = config.hp;
  hp.seed = seeds.models;

  ModelSelectionReport report;
  report.flags = config.flags;
  bool first = true;
  for (ModelKind kind : config.kinds) {
    ModelScore s{kind, 0.0, cross_val_accuracies(kind, processed, config.folds, hp, seeds.folds)};
    double sum = 0.0;
    for (double a : s.fold_accuracies) sum += a;
    s.cv_accuracy = sum / static_cast<double>(s.fold_accuracies.size());
    if (first || s.cv_accuracy > report.best_accuracy) {
      report.best_kind = kind;
      report.best_accuracy = s.cv_accuracy;
      first = false;
    }
    report.per_model.push_back(std::move(s));
  }
  report.refit = fit(report.best_kind, processed, hp);
  return report;
}

KindEvaluation evaluate_on(const TrainedModel& model, double cv_accuracy,
                           const EncodedTable& test_weighted) {
  KindEvaluation e;
  e.kind = model.kind;
  e.cv_accuracy = cv_accuracy;
  const auto scores = predict_proba(model, test_weighted.features);
  std::vector<int> pred(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) pred[i] = scores[i] >= 0.5 ? 1 : 0;
  e.confusion = confusion(test_weighted.labels, pred);
  e.test = metrics(e.confusion, scores, test_weighted.labels);
  return e;
}

}  // namespace attrition
