#include <gtest/gtest.h>

#include <cmath>

#include "attrition/dataset.hpp"
#include "attrition/error.hpp"
#include "attrition/featureweight.hpp"
#include "support.hpp"

using namespace attrition;

TEST(Csv, InfersColumnKinds) {
  const RawTable t = parse_csv("a,b,c\n1,x,2.5\n3,y,-1\n");
  ASSERT_EQ(t.n_rows(), 2u);
  EXPECT_EQ(t.column_kinds[0], ColumnKind::numeric);
  EXPECT_EQ(t.column_kinds[1], ColumnKind::categorical);
  EXPECT_EQ(t.column_kinds[2], ColumnKind::numeric);
  EXPECT_EQ(std::get<double>(t.rows[1][2]), -1.0);
  EXPECT_EQ(std::get<std::string>(t.rows[0][1]), "x");
}

TEST(Csv, HandlesCrlfAndBom) {
  const RawTable t = parse_csv("\xEF\xBB\xBF" "a,b\r\n1,2\r\n\r\n");
  EXPECT_EQ(t.column_names[0], "a");
  EXPECT_EQ(t.n_rows(), 1u);
}

TEST(Csv, RaggedRowNamesLine) {
  try {
    parse_csv("a,b\n1,2\n3\n");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Csv, EmptyFileAndMissingFile) {
  EXPECT_THROW(parse_csv(""), DataError);
  EXPECT_THROW(load_csv("/nonexistent/file.csv"), DataError);
}

TEST(Preprocess, IbmShape) {
  const Preprocessed p = preprocess(load_csv(fixtures::ibm_csv()));
  EXPECT_EQ(p.table.n_rows(), 1470u);
  EXPECT_EQ(p.table.n_features(), 30u);
  const auto counts = p.table.class_counts();
  EXPECT_EQ(counts[1], 237u);
  EXPECT_EQ(counts[0], 1233u);
  for (const char* dropped : {"Over18", "EmployeeCount", "EmployeeNumber", "StandardHours", "Attrition"}) {
    EXPECT_FALSE(p.table.feature_index(dropped)) << dropped;
  }
  const auto* ot = p.codebook.find("OverTime");
  ASSERT_NE(ot, nullptr);
  EXPECT_EQ(ot->categories.size(), 2u);
  EXPECT_EQ(p.codebook.columns().size(), 7u);
}

TEST(Preprocess, CodesFollowFirstAppearance) {
  const RawTable raw = parse_csv("y,c,n\nYes,b,1\nNo,a,2\nNo,b,3\n");
  const Preprocessed p = preprocess(raw, {.drop = {}, .target = "y"});
  EXPECT_EQ(p.table.labels, (std::vector<int>{1, 0, 0}));
  EXPECT_EQ(p.codebook.find("c")->categories, (std::vector<std::string>{"b", "a"}));
  EXPECT_EQ(p.table.features(1, 0), 1.0);
  EXPECT_EQ(p.codebook.encode("c", "a"), 1);
  EXPECT_EQ(p.codebook.decode("c", 0), "b");
  EXPECT_THROW(p.codebook.encode("c", "zzz"), DataError);
}

TEST(Preprocess, Errors) {
  const RawTable raw = parse_csv("y,c\nYes,1\nMaybe,2\n");
  EXPECT_THROW(preprocess(raw, {.drop = {}, .target = "y"}), DataError);
  EXPECT_THROW(preprocess(raw, {.drop = {"nope"}, .target = "y"}), DataError);
  EXPECT_THROW(preprocess(raw, {.drop = {}, .target = "missing"}), DataError);
}

TEST(Preprocess, ConstantColumnsOfIbm) {
  auto cols = constant_columns(load_csv(fixtures::ibm_csv()), "Attrition");
  std::sort(cols.begin(), cols.end());
  EXPECT_EQ(cols, (std::vector<std::string>{"EmployeeCount", "Over18", "StandardHours"}));
}

TEST(Split, StratifiedSizesAndDisjoint) {
  const Preprocessed p = preprocess(load_csv(fixtures::ibm_csv()));
  const DataSplit s = train_test_split(p.table, 0.2, 7);
  EXPECT_EQ(s.test.n_rows(), 294u);
  EXPECT_EQ(s.train.n_rows(), 1176u);
  // 237 * 0.2 = 47.4 and 1233 * 0.2 = 246.6; largest remainder gives 47/247.
  EXPECT_EQ(s.test.class_counts()[1], 47u);
  std::vector<bool> seen(1470, false);
  for (auto i : s.train_indices) seen[i] = true;
  for (auto i : s.test_indices) {
    EXPECT_FALSE(seen[i]);
    seen[i] = true;
  }
  EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
  EXPECT_TRUE(std::is_sorted(s.test_indices.begin(), s.test_indices.end()));
  const DataSplit again = train_test_split(p.table, 0.2, 7);
  EXPECT_EQ(again.test_indices, s.test_indices);
  EXPECT_NE(train_test_split(p.table, 0.2, 8).test_indices, s.test_indices);
  EXPECT_THROW(train_test_split(p.table, 0.0, 1), ArgumentError);
  EXPECT_THROW(train_test_split(p.table, 1.0, 1), ArgumentError);
}

TEST(Correlation, MatchesDirectPearson) {
  Rng rng(3);
  const EncodedTable t = fixtures::random_table(rng, 50, 4, 0.5);
  const CorrelationMatrix c = correlation_matrix(t);
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = 0; b < 4; ++b) {
      const auto x = t.features.column(a), y = t.features.column(b);
      double mx = 0, my = 0;
      for (std::size_t i = 0; i < 50; ++i) mx += x[i] / 50, my += y[i] / 50;
      double sxy = 0, sxx = 0, syy = 0;
      for (std::size_t i = 0; i < 50; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
      }
      EXPECT_NEAR(c.values(a, b), sxy / std::sqrt(sxx * syy), 1e-12);
    }
  }
}

TEST(FeatureWeights, ParseApplyInvert) {
  const WeightMap w = parse_weight_map("f1=2, f0=0.5");
  EXPECT_EQ(w.at("f1"), 2.0);
  EXPECT_EQ(format_weight_map(w), "f0=0.5,f1=2");
  EXPECT_THROW(parse_weight_map("f1=0"), ArgumentError);
  EXPECT_THROW(parse_weight_map("f1"), ArgumentError);
  EXPECT_THROW(parse_weight_map("f1=abc"), ArgumentError);

  const EncodedTable t = fixtures::make_table({{1, 2, 3}, {4, 5, 6}}, {0, 1});
  const EncodedTable s = apply_feature_weights(t, w);
  EXPECT_EQ(s.features(1, 0), 2.0);
  EXPECT_EQ(s.features(1, 1), 10.0);
  EXPECT_EQ(s.features(1, 2), 6.0);
  const EncodedTable back = apply_feature_weights(s, inverse_weights(w));
  EXPECT_EQ(back.features, t.features);
  EXPECT_THROW(apply_feature_weights(t, parse_weight_map("nope=2")), ArgumentError);

  const WeightMap d = default_feature_weights();
  EXPECT_EQ(d.at("StockOptionLevel"), 2.0);
  EXPECT_EQ(d.at("JobLevel"), 2.0);
}
