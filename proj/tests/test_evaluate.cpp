#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "attrition/error.hpp"
#include "attrition/evaluate.hpp"
#include "support.hpp"

using namespace attrition;

namespace {

// Mann-Whitney form of the AUC: P(score+ > score-) + 0.5 P(tie).
double rank_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1;
        wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      }
    }
  }
  return wins / pairs;
}

}  // namespace

TEST(Folds, StratifiedPartition) {
  std::vector<int> labels(1176, 0);
  for (std::size_t i = 0; i < 190; ++i) labels[i * 6] = 1;
  const auto folds = k_fold_indices(1176, 9, labels, 3);
  ASSERT_EQ(folds.size(), 9u);
  std::multiset<std::size_t> sizes;
  std::vector<int> hits(1176, 0);
  for (const auto& f : folds) {
    sizes.insert(f.valid.size());
    EXPECT_EQ(f.valid.size() + f.train.size(), 1176u);
    std::size_t pos = 0;
    for (auto i : f.valid) {
      ++hits[i];
      pos += labels[i];
    }
    // 190 positives over 9 folds: 21 or 22 each.
    EXPECT_TRUE(pos == 21 || pos == 22) << pos;
  }
  EXPECT_EQ(sizes.count(130), 3u);
  EXPECT_EQ(sizes.count(131), 6u);
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_EQ(k_fold_indices(1176, 9, labels, 3)[4].valid, folds[4].valid);
}

TEST(Folds, Errors) {
  const std::vector<int> labels{0, 0, 0, 1, 1};
  EXPECT_THROW(k_fold_indices(5, 1, labels, 0), ArgumentError);
  EXPECT_THROW(k_fold_indices(5, 6, labels, 0), ArgumentError);
  EXPECT_THROW(k_fold_indices(5, 3, labels, 0), ArgumentError);
  EXPECT_NO_THROW(k_fold_indices(5, 3, labels, 0, false));
}

TEST(Roc, KnownCases) {
  const std::vector<int> y{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(trapezoid_auc(roc_curve(std::vector<double>{0.1, 0.4, 0.35, 0.8}, y)), 0.75);
  EXPECT_DOUBLE_EQ(trapezoid_auc(roc_curve(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y)), 1.0);
  EXPECT_DOUBLE_EQ(trapezoid_auc(roc_curve(std::vector<double>{0.9, 0.8, 0.2, 0.1}, y)), 0.0);
  EXPECT_DOUBLE_EQ(trapezoid_auc(roc_curve(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y)), 0.5);
  const auto roc = roc_curve(std::vector<double>{0.1, 0.4, 0.35, 0.8}, y);
  EXPECT_EQ(roc.front().fpr, 0.0);
  EXPECT_EQ(roc.front().tpr, 0.0);
  EXPECT_EQ(roc.back().fpr, 1.0);
  EXPECT_EQ(roc.back().tpr, 1.0);
  EXPECT_THROW(roc_curve(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), ArgumentError);
}

TEST(Roc, MatchesRankStatisticWithTies) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(60);
    std::vector<int> y(60);
    for (std::size_t i = 0; i < 60; ++i) {
      y[i] = rng.uniform() < 0.3;
      s[i] = std::round(rng.uniform() * 8) / 8 + 0.1 * y[i];
    }
    y[0] = 0;
    y[1] = 1;
    EXPECT_NEAR(trapezoid_auc(roc_curve(s, y)), rank_auc(s, y), 1e-12);
  }
}

TEST(Metrics, ConfusionAndZeroConventions) {
  const std::vector<int> t{1, 1, 0, 0, 1};
  const std::vector<int> p{1, 0, 0, 1, 1};
  const ConfusionMatrix cm = confusion(t, p);
  EXPECT_EQ(cm, (ConfusionMatrix{2, 1, 1, 1}));
  const MetricsReport m = metrics(cm);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.6);
  EXPECT_DOUBLE_EQ(m.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.f1, 2.0 / 3.0);
  EXPECT_FALSE(m.auc);

  const MetricsReport none = metrics(ConfusionMatrix{0, 0, 5, 20});
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.f1, 0.0);
  EXPECT_DOUBLE_EQ(none.accuracy, 0.8);
}

TEST(CrossValidation, ParallelFoldsAreDeterministic) {
  Rng rng(13);
  const EncodedTable t = fixtures::random_table(rng, 90, 3, 0.4);
  const auto a = cross_val_accuracies(ModelKind::DecisionTree, t, 5, {}, 77);
  const auto b = cross_val_accuracies(ModelKind::DecisionTree, t, 5, {}, 77);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 5u);
  double mean = 0;
  for (double v : a) mean += v / 5;
  EXPECT_DOUBLE_EQ(cross_val_score(ModelKind::DecisionTree, t, 5, {}, 77), mean);
}

TEST(Selection, TiesGoToTheEarlierKind) {
  // Perfectly separable on one feature: every kind scores 1.0.
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 60; ++i) {
    rows.push_back({i < 30 ? -5.0 - 0.01 * i : 5.0 + 0.01 * i});
    labels.push_back(i < 30 ? 0 : 1);
  }
  PipelineConfig c;
  c.folds = 3;
  c.kinds = {ModelKind::GaussianNB, ModelKind::DecisionTree};
  const auto r = select_best(fixtures::make_table(rows, labels), c);
  EXPECT_EQ(r.per_model[0].cv_accuracy, 1.0);
  EXPECT_EQ(r.per_model[1].cv_accuracy, 1.0);
  EXPECT_EQ(r.best_kind, ModelKind::GaussianNB);
  EXPECT_EQ(r.refit.kind, ModelKind::GaussianNB);
}

TEST(Processing, FlagsApplyInOrder) {
  Rng rng(14);
  EncodedTable t = fixtures::random_table(rng, 200, 3, 0.2);
  t.feature_names = {"StockOptionLevel", "JobLevel", "Other"};
  PipelineConfig c;
  c.seed = 5;
  const ProcessedTraining none = process_training(t, c);
  EXPECT_EQ(none.table, t);
  EXPECT_TRUE(none.weights.empty());

  c.flags = {true, true, true};
  const ProcessedTraining all = process_training(t, c);
  EXPECT_EQ(all.removed_outliers.size(), 10u);
  ASSERT_TRUE(all.resample_report);
  const auto counts = all.table.class_counts();
  EXPECT_EQ(counts[0], counts[1]);
  EXPECT_EQ(all.table.n_rows(), all.unweighted.n_rows());
  for (std::size_t i = 0; i < all.table.n_rows(); ++i) {
    EXPECT_EQ(all.table.features(i, 0), 2.0 * all.unweighted.features(i, 0));
    EXPECT_EQ(all.table.features(i, 2), all.unweighted.features(i, 2));
  }
  EXPECT_EQ(process_training(t, c).table, all.table);
}
