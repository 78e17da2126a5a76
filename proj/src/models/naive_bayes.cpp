#include <algorithm>
#include <cmath>

#include "learners.hpp"

namespace attrition::detail {

NaiveBayesState fit_naive_bayes(const EncodedTable& table, const NaiveBayesParams& params) {
  const std::size_t d = table.n_features();
  const std::size_t n = table.n_rows();
  NaiveBayesState state;
  const auto counts = table.class_counts();

  // Smoothing proportional to the largest per-feature variance over all rows.
  double max_var = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += table.features(i, j);
    const double mean = sum / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) sq += (table.features(i, j) - mean) * (table.features(i, j) - mean);
    max_var = std::max(max_var, sq / static_cast<double>(n));
  }
  double epsilon = params.var_smoothing * max_var;
  if (epsilon <= 0.0) epsilon = params.var_smoothing;

  for (int c = 0; c < 2; ++c) {
    state.log_prior[c] = std::log(static_cast<double>(counts[c]) / static_cast<double>(n));
    state.mean[c].assign(d, 0.0);
    state.variance[c].assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (table.labels[i] != c) continue;
      for (std::size_t j = 0; j < d; ++j) state.mean[c][j] += table.features(i, j);
    }
    for (std::size_t j = 0; j < d; ++j) state.mean[c][j] /= static_cast<double>(counts[c]);
    for (std::size_t i = 0; i < n; ++i) {
      if (table.labels[i] != c) continue;
      for (std::size_t j = 0; j < d; ++j) {
        const double dev = table.features(i, j) - state.mean[c][j];
        state.variance[c][j] += dev * dev;
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      state.variance[c][j] = state.variance[c][j] / static_cast<double>(counts[c]) + epsilon;
    }
  }
  return state;
}

double naive_bayes_proba(const NaiveBayesState& state, std::span<const double> x) {
  constexpr double kLog2Pi = 1.8378770664093454836;
  std::array<double, 2> joint{};
  for (int c = 0; c < 2; ++c) {
    double ll = state.log_prior[c];
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double var = state.variance[c][j];
      const double dev = x[j] - state.mean[c][j];
      ll -= 0.5 * (kLog2Pi + std::log(var) + dev * dev / var);
    }
    joint[c] = ll;
  }
  return logistic(joint[1] - joint[0]);
}

}  // namespace attrition::detail
