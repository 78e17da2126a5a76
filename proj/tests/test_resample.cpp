#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "attrition/error.hpp"
#include "attrition/neighbors.hpp"
#include "attrition/resample.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace attrition;
using namespace attrition::oracles;

TEST(Neighbors, ParallelMatchesSerialAndBruteForce) {
  Rng rng(11);
  const EncodedTable t = fixtures::random_table(rng, 120, 3, 0.3, true);
  std::vector<std::size_t> all(120);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto par = nearest_neighbors(t.features, all, all, 4);
  const auto ser = nearest_neighbors_serial(t.features, all, all, 4);
  EXPECT_EQ(par, ser);
  for (std::size_t q = 0; q < 120; ++q) {
    const auto expect = brute_knn(t.features, q, all, 4);
    EXPECT_EQ(std::vector<std::size_t>(par.of(q).begin(), par.of(q).end()), expect);
  }
}

TEST(Tomek, MatchesOracleOnRandomTables) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(120);
    const EncodedTable t = fixtures::random_table(rng, n, 1 + rng.below(3), 0.4, trial % 2 == 0);
    ASSERT_EQ(tomek_links(t), brute_tomek(t)) << "trial " << trial;
  }
}

TEST(Tomek, SinglePair) {
  const EncodedTable t = fixtures::make_table({{0.0}, {0.1}, {5.0}, {5.5}}, {0, 1, 0, 0});
  EXPECT_EQ(tomek_links(t), (std::vector<RowPair>{{0, 1}}));
}

TEST(Smote, BalancesAndStaysOnSegments) {
  Rng rng(5);
  const EncodedTable t = toy_2d(rng, 80, 20);
  const Resampled r = smote(t, 5, 9);
  EXPECT_EQ(r.table.class_counts()[0], 80u);
  EXPECT_EQ(r.table.class_counts()[1], 80u);
  EXPECT_EQ(r.report.synthetic_count, 60u);
  std::vector<std::size_t> minority;
  for (std::size_t i = 0; i < t.n_rows(); ++i) {
    if (t.labels[i] == 1) minority.push_back(i);
  }
  for (std::size_t i = 0; i < t.n_rows(); ++i) {
    ASSERT_EQ(r.table.features.row(i)[0], t.features.row(i)[0]);
  }
  for (std::size_t i = t.n_rows(); i < r.table.n_rows(); ++i) {
    EXPECT_EQ(r.table.labels[i], 1);
    EXPECT_TRUE(on_some_segment(r.table.row(i), t, minority, 5, 1e-9)) << "synthetic row " << i;
  }
  EXPECT_EQ(smote(t, 5, 9).table, r.table);
}

TEST(Smote, RoundsCategoricalColumns) {
  Rng rng(6);
  EncodedTable t = toy_2d(rng, 30, 10);
  for (std::size_t i = 0; i < t.n_rows(); ++i) t.features(i, 1) = std::round(std::abs(t.features(i, 1)) * 3);
  t.column_kinds[1] = ColumnKind::categorical;
  const Resampled r = smote(t, 3, 1);
  for (std::size_t i = t.n_rows(); i < r.table.n_rows(); ++i) {
    EXPECT_EQ(r.table.features(i, 1), std::round(r.table.features(i, 1)));
  }
}

TEST(Smote, Errors) {
  const EncodedTable t = fixtures::make_table({{0}, {1}, {2}, {3}}, {0, 0, 0, 1});
  EXPECT_THROW(smote(t, 5, 0), ArgumentError);
  const EncodedTable one = fixtures::make_table({{0}, {1}}, {0, 0});
  EXPECT_THROW(smote(one, 1, 0), DataError);
  EXPECT_THROW(parse_resample_method("oversample"), ArgumentError);
  EXPECT_EQ(parse_resample_method("SMOTE-Tomek"), ResampleMethod::smote_tomek);
}

TEST(Adasyn, AllocationFollowsMajorityShare) {
  // Minority rows 0..5 on a line; majority rows cluster near row 5 only.
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 6; ++i) {
    rows.push_back({static_cast<double>(i), 0.0});
    labels.push_back(1);
  }
  for (int i = 0; i < 20; ++i) {
    rows.push_back({5.0 + 0.05 * (i + 1), 0.0});
    labels.push_back(0);
  }
  const EncodedTable t = fixtures::make_table(rows, labels);
  const std::size_t k = 3;
  const Resampled r = adasyn(t, k, 4);
  // Oracle allocation: g_i = round(delta_i / sum delta * 14).
  std::vector<std::size_t> all(t.n_rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<double> delta;
  double total = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    std::size_t maj = 0;
    for (auto j : brute_knn(t.features, i, all, k)) maj += t.labels[j] == 0;
    delta.push_back(static_cast<double>(maj) / k);
    total += delta.back();
  }
  std::size_t expected = 0;
  for (double d : delta) expected += static_cast<std::size_t>(std::nearbyint(d / total * 14));
  EXPECT_EQ(r.report.synthetic_count, expected);
  EXPECT_FALSE(r.report.warning);
  // Every synthetic point comes from a row with majority neighbours, so it
  // sits at x >= 2 on this line.
  for (std::size_t i = t.n_rows(); i < r.table.n_rows(); ++i) EXPECT_GE(r.table.features(i, 0), 2.0 - 1e-12);
}

TEST(Adasyn, FallsBackWhenNeighbourhoodsArePure) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 5; ++i) rows.push_back({0.01 * i}), labels.push_back(1);
  for (int i = 0; i < 12; ++i) rows.push_back({100.0 + i}), labels.push_back(0);
  const Resampled r = adasyn(fixtures::make_table(rows, labels), 2, 0);
  ASSERT_TRUE(r.report.warning);
  EXPECT_EQ(r.table.class_counts()[1], 12u);
}

TEST(SmoteTomek, RemovesLinkEndpoints) {
  Rng rng(8);
  const EncodedTable t = toy_2d(rng, 60, 15);
  const Resampled over = smote(t, 5, 3);
  const auto links = tomek_links(over.table);
  const Resampled r = smote_tomek(t, 5, 3);
  EXPECT_EQ(r.report.removed_count, 2 * links.size());
  EXPECT_EQ(r.table.n_rows(), over.table.n_rows() - 2 * links.size());
}
