// Serial reference vs OpenMP version of each row-parallel kernel, on the
// IBM training split.

#include <benchmark/benchmark.h>

#include <numeric>

#include "attrition/evaluate.hpp"
#include "attrition/explain.hpp"
#include "attrition/neighbors.hpp"
#include "attrition/outlier.hpp"
#include "support.hpp"

using namespace attrition;

namespace {

const EncodedTable& train() {
  static const EncodedTable t = [] {
    const Preprocessed pre = preprocess(load_csv(fixtures::ibm_csv()));
    return train_test_split(pre.table, 0.2, PipelineSeeds::from(0).split).train;
  }();
  return t;
}

const std::vector<std::size_t>& all_rows() {
  static const std::vector<std::size_t> rows = [] {
    std::vector<std::size_t> r(train().n_rows());
    std::iota(r.begin(), r.end(), std::size_t{0});
    return r;
  }();
  return rows;
}

void BM_NeighborsSerial(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(nearest_neighbors_serial(train().features, all_rows(), all_rows(), 5));
}
void BM_NeighborsParallel(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(nearest_neighbors(train().features, all_rows(), all_rows(), 5));
}

const IsolationForest& forest() {
  static const IsolationForest f = fit_isolation_forest(train(), {}, 1);
  return f;
}
void BM_AnomalySerial(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(anomaly_scores_serial(forest(), train().features));
}
void BM_AnomalyParallel(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(anomaly_scores(forest(), train().features));
}

const Explainer& explainer() {
  static const Explainer ex = [] {
    Hyperparams hp;
    hp.xgb.n_rounds = 50;
    const auto bg = sample_background(train().features, 50, 2);
    return Explainer(Predictor(fit(ModelKind::XGBStyleGBDT, train(), hp)), bg.rows);
  }();
  return ex;
}
const Matrix& explain_rows() {
  static const Matrix rows = train().select_rows(std::span(all_rows()).first(100)).features;
  return rows;
}
void BM_ExplainSerial(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(explainer().explain_all_serial(explain_rows()));
}
void BM_ExplainParallel(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(explainer().explain_all(explain_rows()));
}

}  // namespace

BENCHMARK(BM_NeighborsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NeighborsParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AnomalySerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AnomalyParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExplainSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExplainParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
