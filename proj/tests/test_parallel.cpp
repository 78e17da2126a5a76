#include <gtest/gtest.h>

#include <omp.h>

#include <numeric>

#include "attrition/evaluate.hpp"
#include "attrition/explain.hpp"
#include "attrition/models.hpp"
#include "attrition/neighbors.hpp"
#include "attrition/outlier.hpp"
#include "support.hpp"

using namespace attrition;

namespace {

// Runs `f` once on a single thread and once on several, restoring the
// previous thread count.
template <class F>
auto single_and_many(F f) {
  const int before = omp_get_max_threads();
  omp_set_num_threads(1);
  auto one = f();
  omp_set_num_threads(4);
  auto many = f();
  omp_set_num_threads(before);
  return std::pair{one, many};
}

}  // namespace

TEST(Parallel, TreeFittingLoopsDoNotDependOnThreadCount) {
  Rng rng(41);
  const EncodedTable t = fixtures::random_table(rng, 150, 4, 0.35);
  Hyperparams hp;
  hp.forest.n_trees = 12;
  const auto [rf1, rf4] = single_and_many([&] { return model_to_json(fit(ModelKind::RandomForest, t, hp)).dump(); });
  EXPECT_EQ(rf1, rf4);

  IsolationForestParams ip;
  ip.n_trees = 20;
  ip.subsample = 64;
  const auto [if1, if4] =
      single_and_many([&] { return anomaly_scores_serial(fit_isolation_forest(t, ip, 3), t.features); });
  EXPECT_EQ(if1, if4);

  const auto [cv1, cv4] = single_and_many([&] { return cross_val_accuracies(ModelKind::DecisionTree, t, 5, {}, 9); });
  EXPECT_EQ(cv1, cv4);
}

TEST(Parallel, RowKernelsMatchTheirSerialReferences) {
  Rng rng(42);
  const EncodedTable t = fixtures::random_table(rng, 200, 5, 0.3);
  std::vector<std::size_t> all(t.n_rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const int before = omp_get_max_threads();
  omp_set_num_threads(4);
  EXPECT_EQ(nearest_neighbors(t.features, all, all, 5), nearest_neighbors_serial(t.features, all, all, 5));
  const IsolationForest forest = fit_isolation_forest(t, {}, 1);
  EXPECT_EQ(anomaly_scores(forest, t.features), anomaly_scores_serial(forest, t.features));
  const Explainer ex(Predictor(fit(ModelKind::GaussianNB, t)), t.select_rows(std::vector<std::size_t>{0, 5, 9, 17}).features,
                     {ShapEngine::kernel, 64, 2});
  const Matrix rows = t.select_rows(std::vector<std::size_t>{1, 2, 3, 4, 6, 7, 8}).features;
  const auto par = ex.explain_all(rows);
  const auto ser = ex.explain_all_serial(rows);
  ASSERT_EQ(par.size(), ser.size());
  for (std::size_t i = 0; i < par.size(); ++i) EXPECT_EQ(par[i].phi(), ser[i].phi());
  omp_set_num_threads(before);
}
