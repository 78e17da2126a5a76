#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attrition/dataset.hpp"
#include "attrition/featureweight.hpp"
#include "attrition/models.hpp"
#include "attrition/outlier.hpp"
#include "attrition/resample.hpp"

namespace attrition {

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
};

/// k folds partitioning [0, n). Stratified assignment shuffles each class
/// with the seed, concatenates the classes and deals the rows round-robin,
/// so every fold's per-class count is within one of the others.
std::vector<Fold> k_fold_indices(std::size_t n, std::size_t k, std::span<const int> labels,
                                 std::uint64_t seed, bool stratified = true);

/// Validation accuracy of each fold, in fold order.
std::vector<double> cross_val_accuracies(ModelKind kind, const EncodedTable& table, std::size_t k,
                                         const Hyperparams& hp, std::uint64_t fold_seed);
double cross_val_score(ModelKind kind, const EncodedTable& table, std::size_t k,
                       const Hyperparams& hp, std::uint64_t fold_seed);

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;  ///< 0 when nothing is predicted positive
  double recall = 0.0;
  double f1 = 0.0;         ///< 0 when precision + recall = 0
  std::optional<double> auc;
  std::vector<RocPoint> roc_points;
};

/// ROC over the distinct score thresholds, descending; tied scores move
/// together. Requires both classes.
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> y_true);
double trapezoid_auc(const std::vector<RocPoint>& roc);

/// AUC and ROC are filled only when both scores and labels are supplied and
/// both classes occur among the labels.
MetricsReport metrics(const ConfusionMatrix& cm, std::span<const double> scores = {},
                      std::span<const int> y_true = {});

struct PipelineFlags {
  bool outlier_detect = false;
  bool imblearn = false;
  bool weighted_feature = false;
  bool operator==(const PipelineFlags&) const = default;
};

struct PipelineConfig {
  PipelineFlags flags;
  ResampleMethod resample_method = ResampleMethod::smote;
  std::size_t resample_k = 5;
  IsolationForestParams forest;
  double contamination = 0.05;
  WeightMap weights = default_feature_weights();
  std::size_t folds = 9;
  std::vector<ModelKind> kinds{kAllModelKinds.begin(), kAllModelKinds.end()};
  Hyperparams hp;
  std::uint64_t seed = 0;
};

/// Sub-seeds derived from the single configuration seed.
struct PipelineSeeds {
  std::uint64_t split, outlier, resample, folds, models, background;
  static PipelineSeeds from(std::uint64_t seed);
};

/// The training split after the conditional blocks, in their fixed order:
/// outlier removal, then resampling, then feature weighting.
struct ProcessedTraining {
  EncodedTable table;  ///< weighted when the weighting flag is set
  EncodedTable unweighted;
  std::vector<std::size_t> removed_outliers;
  std::optional<ResampleReport> resample_report;
  WeightMap weights;  ///< empty unless the weighting flag is set
};

ProcessedTraining process_training(const EncodedTable& train, const PipelineConfig& config);

struct ModelScore {
  ModelKind kind;
  double cv_accuracy = 0.0;
  std::vector<double> fold_accuracies;
};

struct ModelSelectionReport {
  std::vector<ModelScore> per_model;  ///< in configuration order
  ModelKind best_kind = ModelKind::RandomForest;
  double best_accuracy = 0.0;
  TrainedModel refit;
  PipelineFlags flags;
};

/// Cross-validates every configured kind on the (already processed)
/// table, keeps the highest mean accuracy with ties going to the earlier
/// kind, and refits the winner on the whole table.
ModelSelectionReport select_best(const EncodedTable& processed, const PipelineConfig& config);

/// Test-split results of one kind.
struct KindEvaluation {
  ModelKind kind;
  double cv_accuracy = 0.0;
  ConfusionMatrix confusion;
  MetricsReport test;
};

KindEvaluation evaluate_on(const TrainedModel& model, double cv_accuracy,
                           const EncodedTable& test_weighted);

}  // namespace attrition
