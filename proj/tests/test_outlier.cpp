#include <gtest/gtest.h>

#include <cmath>

#include "attrition/error.hpp"
#include "attrition/outlier.hpp"
#include "support.hpp"

using namespace attrition;

TEST(PathLength, KnownValues) {
  EXPECT_EQ(average_path_length(0), 0.0);
  EXPECT_EQ(average_path_length(1), 0.0);
  // c(2) = 2 H(1) - 1 with H(1) = ln 1 + gamma.
  EXPECT_NEAR(average_path_length(2), 2 * 0.5772156649015329 - 1.0, 1e-15);
  EXPECT_NEAR(average_path_length(256), 10.244770920119917, 1e-12);
}

TEST(IsolationForest, FlagsTheDistantPoint) {
  Rng rng(1);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 200; ++i) rows.push_back({rng.normal(), rng.normal()});
  rows.push_back({8.0, -8.0});
  std::vector<int> labels(rows.size(), 0);
  labels[0] = 1;
  const EncodedTable t = fixtures::make_table(rows, labels);
  const IsolationForest f = fit_isolation_forest(t, {100, 128}, 3);
  const auto scores = anomaly_scores(f, t.features);
  EXPECT_EQ(std::max_element(scores.begin(), scores.end()) - scores.begin(), 200);
  EXPECT_EQ(scores, anomaly_scores_serial(f, t.features));
  for (double s : scores) {
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
  }
  EXPECT_EQ(fit_isolation_forest(t, {100, 128}, 3), f);
  for (const auto& tree : f.trees) EXPECT_LE(tree.depth(), 7);
}

TEST(IsolationForest, SubsampleClampedToTable) {
  Rng rng(2);
  const EncodedTable t = fixtures::random_table(rng, 40, 3, 0.5);
  const IsolationForest f = fit_isolation_forest(t, {10, 256}, 0);
  EXPECT_EQ(f.subsample_size, 40u);
}

TEST(RemoveOutliers, QuotaAndOrder) {
  Rng rng(4);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 99; ++i) rows.push_back({rng.uniform(), rng.uniform()});
  rows.insert(rows.begin() + 10, {50.0, 50.0});
  std::vector<int> labels(rows.size(), 0);
  labels[1] = 1;
  const EncodedTable t = fixtures::make_table(rows, labels);
  const IsolationForest f = fit_isolation_forest(t, {100, 64}, 9);
  const OutlierRemoval r = remove_outliers(t, f, 0.05);
  EXPECT_EQ(r.removed.size(), 5u);
  EXPECT_TRUE(std::is_sorted(r.removed.begin(), r.removed.end()));
  EXPECT_NE(std::find(r.removed.begin(), r.removed.end(), 10u), r.removed.end());
  EXPECT_EQ(r.table.n_rows(), 95u);
  EXPECT_EQ(remove_outliers(t, f, 0.0).table.n_rows(), 100u);
  // 0.03 * 100 = 3.0000000000000004 in binary; the quota is still 3.
  EXPECT_EQ(remove_outliers(t, f, 0.03).removed.size(), 3u);
  EXPECT_THROW(remove_outliers(t, f, 0.5), ArgumentError);
}
