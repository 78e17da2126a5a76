#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "attrition/error.hpp"
#include "attrition/explain.hpp"

namespace attrition {
namespace {

void require_population(std::span<const ShapExplanation> explanations) {
  if (explanations.empty()) throw ArgumentError("empty explanation population");
  const std::size_t m = explanations.front().phi().size();
  for (const auto& e : explanations) {
    if (e.phi().size() != m) throw ArgumentError("explanations differ in feature count");
  }
}

std::vector<double> mean_abs(std::span<const ShapExplanation> explanations) {
  const std::size_t m = explanations.front().phi().size();
  std::vector<double> out(m, 0.0);
  for (const auto& e : explanations) {
    for (std::size_t j = 0; j < m; ++j) out[j] += std::abs(e.phi()[j]);
  }
  for (double& v : out) v /= static_cast<double>(explanations.size());
  return out;
}

std::vector<std::size_t> order_by_importance(const std::vector<double>& importance) {
  std::vector<std::size_t> order(importance.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return importance[a] > importance[b]; });
  return order;
}

std::ostream& num(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return out << buf;
}

}  // namespace

SummaryPlotData summary_data(std::span<const ShapExplanation> explanations) {
  require_population(explanations);
  const auto importance = mean_abs(explanations);
  const auto& names = explanations.front().feature_names();
  SummaryPlotData data;
  for (std::size_t j : order_by_importance(importance)) {
    SummaryFeature feat;
    feat.name = names[j];
    feat.mean_abs = importance[j];
    double lo = explanations.front().feature_values()[j], hi = lo;
    for (const auto& e : explanations) {
      lo = std::min(lo, e.feature_values()[j]);
      hi = std::max(hi, e.feature_values()[j]);
    }
    for (const auto& e : explanations) {
      const double v = e.feature_values()[j];
      feat.points.push_back({e.phi()[j], hi > lo ? (v - lo) / (hi - lo) : 0.5});
    }
    data.features.push_back(std::move(feat));
  }
  return data;
}

ForcePlotData force_data(const ShapExplanation& expl) {
  ForcePlotData data;
  data.base_value = expl.base_value();
  data.output_value = expl.output_value();
  std::vector<double> magnitude(expl.phi().size());
  for (std::size_t j = 0; j < magnitude.size(); ++j) magnitude[j] = std::abs(expl.phi()[j]);
  for (std::size_t j : order_by_importance(magnitude)) {
    const double phi = expl.phi()[j];
    if (phi == 0.0) continue;
    data.contributions.push_back(
        {expl.feature_names()[j], expl.feature_values()[j], phi, phi > 0.0 ? 1 : -1});
  }
  return data;
}

std::vector<DependencePoint> dependence_data(std::span<const ShapExplanation> explanations,
                                             const std::string& feature) {
  require_population(explanations);
  const auto& names = explanations.front().feature_names();
  const auto it = std::find(names.begin(), names.end(), feature);
  if (it == names.end()) throw ArgumentError("unknown feature '" + feature + "'");
  const auto j = static_cast<std::size_t>(it - names.begin());
  std::vector<DependencePoint> points;
  points.reserve(explanations.size());
  for (const auto& e : explanations) points.push_back({e.feature_values()[j], e.phi()[j]});
  return points;
}

std::vector<Importance> mean_abs_importance(std::span<const ShapExplanation> explanations,
                                            std::size_t top_k) {
  require_population(explanations);
  const auto importance = mean_abs(explanations);
  if (top_k > importance.size()) {
    throw ArgumentError("top_k = " + std::to_string(top_k) + " exceeds the feature count " +
                        std::to_string(importance.size()));
  }
  if (top_k == 0) top_k = importance.size();
  const auto& names = explanations.front().feature_names();
  std::vector<Importance> out;
  for (std::size_t j : order_by_importance(importance)) {
    if (out.size() == top_k) break;
    out.push_back({names[j], importance[j]});
  }
  return out;
}

void write_summary_tsv(std::ostream& out, const SummaryPlotData& data) {
  out << "feature\trank\tmean_abs_shap\tshap\tnormalized_value\n";
  for (std::size_t r = 0; r < data.features.size(); ++r) {
    const auto& f = data.features[r];
    for (const auto& p : f.points) {
      out << f.name << '\t' << r + 1 << '\t';
      num(out, f.mean_abs) << '\t';
      num(out, p.shap) << '\t';
      num(out, p.normalized_value) << '\n';
    }
  }
}

void write_force_tsv(std::ostream& out, const ForcePlotData& data) {
  out << "# base_value\t";
  num(out, data.base_value) << "\n# output_value\t";
  num(out, data.output_value) << '\n';
  out << "feature\tfeature_value\tshap\tsign\n";
  for (const auto& c : data.contributions) {
    out << c.name << '\t';
    num(out, c.feature_value) << '\t';
    num(out, c.phi) << '\t' << (c.sign > 0 ? '+' : '-') << '\n';
  }
}

void write_dependence_tsv(std::ostream& out, const std::string& feature,
                          const std::vector<DependencePoint>& points) {
  out << "feature\tfeature_value\tshap\n";
  for (const auto& p : points) {
    out << feature << '\t';
    num(out, p.feature_value) << '\t';
    num(out, p.shap) << '\n';
  }
}

void write_importance_tsv(std::ostream& out, const std::vector<Importance>& ranking) {
  out << "rank\tfeature\tmean_abs_shap\n";
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    out << r + 1 << '\t' << ranking[r].name << '\t';
    num(out, ranking[r].mean_abs) << '\n';
  }
}

}  // namespace attrition
