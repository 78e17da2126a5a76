#pragma once

#include <span>
#include <vector>

#include "attrition/featureweight.hpp"
#include "attrition/models.hpp"

namespace attrition {

/// A fitted model together with the feature weights it was trained under.
/// Every input is an unweighted encoded row; the weights are applied here.
class Predictor {
 public:
  Predictor() = default;
  Predictor(TrainedModel model, WeightMap weights = {});

  const TrainedModel& model() const { return model_; }
  const WeightMap& weights() const { return weights_; }
  const std::vector<std::string>& feature_names() const { return model_.feature_names; }
  std::size_t n_features() const { return model_.n_features(); }

  /// Raw row -> model input space.
  std::vector<double> transform(std::span<const double> x) const;
  Matrix transform(const Matrix& rows) const;

  double proba(std::span<const double> x) const;
  int label(std::span<const double> x) const;
  std::vector<double> proba(const Matrix& rows) const;
  std::vector<int> label(const Matrix& rows) const;

 private:
  TrainedModel model_;
  WeightMap weights_;
  std::vector<double> scale_;
};

}  // namespace attrition
