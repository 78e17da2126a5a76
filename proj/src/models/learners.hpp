#pragma once

#include "attrition/models.hpp"

namespace attrition::detail {

ForestState fit_decision_tree(const EncodedTable& table, const DecisionTreeParams& params);
ForestState fit_random_forest(const EncodedTable& table, const RandomForestParams& params,
                              std::uint64_t seed);
GbdtState fit_xgb(const EncodedTable& table, const XgbParams& params);
GbdtState fit_lgbm(const EncodedTable& table, const LgbmParams& params);
LinearState fit_logistic(const EncodedTable& table, const LogisticParams& params);
LinearState fit_linear_svm(const EncodedTable& table, const SvmParams& params);
NaiveBayesState fit_naive_bayes(const EncodedTable& table, const NaiveBayesParams& params);
MlpState fit_mlp(const EncodedTable& table, const MlpParams& params, std::uint64_t seed);

double naive_bayes_proba(const NaiveBayesState& state, std::span<const double> x);
double mlp_proba(const MlpState& state, std::span<const double> x);

/// Column means and standard deviations (1 for constant columns).
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;
};
Standardizer standardizer_for(const Matrix& x);

double mean_log_loss(std::span<const int> labels, std::span<const double> margins);

}  // namespace attrition::detail
