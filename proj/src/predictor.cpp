#include <algorithm>

#include "attrition/predictor.hpp"

#include "attrition/error.hpp"

namespace attrition {

Predictor::Predictor(TrainedModel model, WeightMap weights)
    : model_(std::move(model)), weights_(std::move(weights)), scale_(model_.n_features(), 1.0) {
  for (const auto& [name, w] : weights_) {
    const auto it = std::find(model_.feature_names.begin(), model_.feature_names.end(), name);
    if (it == model_.feature_names.end()) throw ArgumentError("unknown weighted feature '" + name + "'");
    if (!(w > 0.0)) throw ArgumentError("weight for '" + name + "' must be positive");
    scale_[static_cast<std::size_t>(it - model_.feature_names.begin())] = w;
  }
}

std::vector<double> Predictor::transform(std::span<const double> x) const {
  if (x.size() != scale_.size()) {
    throw ArgumentError("expected " + std::to_string(scale_.size()) + " features, got " +
                        std::to_string(x.size()));
  }
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] *= scale_[j];
  return out;
}

Matrix Predictor::transform(const Matrix& rows) const {
  if (rows.cols() != scale_.size() && rows.rows() > 0) {
    throw ArgumentError("expected " + std::to_string(scale_.size()) + " features, got " +
                        std::to_string(rows.cols()));
  }
  Matrix out = rows;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) *= scale_[j];
  }
  return out;
}

double Predictor::proba(std::span<const double> x) const {
  return predict_proba(model_, transform(x));
}

int Predictor::label(std::span<const double> x) const { return proba(x) >= 0.5 ? 1 : 0; }

std::vector<double> Predictor::proba(const Matrix& rows) const {
  return predict_proba(model_, transform(rows));
}

std::vector<int> Predictor::label(const Matrix& rows) const {
  return predict(model_, transform(rows));
}

}  // namespace attrition
