#include "attrition/featureweight.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "attrition/error.hpp"

namespace attrition {
namespace {

void check_weights(const WeightMap& weights, const std::vector<std::string>& names) {
  for (const auto& [name, w] : weights) {
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw ArgumentError("weight given for unknown feature '" + name + "'");
    }
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw ArgumentError("weight for '" + name + "' must be positive");
    }
  }
}

std::vector<double> column_multipliers(const WeightMap& weights,
                                       const std::vector<std::string>& names) {
  check_weights(weights, names);
  std::vector<double> mult(names.size(), 1.0);
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (auto it = weights.find(names[j]); it != weights.end()) mult[j] = it->second;
  }
  return mult;
}

}  // namespace

WeightMap default_feature_weights() { return {{"StockOptionLevel", 2.0}, {"JobLevel", 2.0}}; }

WeightMap parse_weight_map(const std::string& text) {
  WeightMap out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    item = item.substr(b, item.find_last_not_of(" \t") - b + 1);
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ArgumentError("weight entry '" + item + "' is not name=value");
    }
    const std::string name = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    double w = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), w);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      throw ArgumentError("weight entry '" + item + "' has a non-numeric value");
    }
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw ArgumentError("weight for '" + name + "' must be positive");
    }
    out[name] = w;
  }
  return out;
}

std::string format_weight_map(const WeightMap& weights) {
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (const auto& [name, w] : weights) {
    if (!first) os << ',';
    os << name << '=' << w;
    first = false;
  }
  return os.str();
}

EncodedTable apply_feature_weights(const EncodedTable& table, const WeightMap& weights) {
  const auto mult = column_multipliers(weights, table.feature_names);
  EncodedTable out = table;
  if (weights.empty()) return out;
  for (std::size_t i = 0; i < out.n_rows(); ++i) {
    auto r = out.features.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] *= mult[j];
  }
  return out;
}

std::vector<double> apply_feature_weights(std::span<const double> x,
                                          const std::vector<std::string>& feature_names,
                                          const WeightMap& weights) {
  const auto mult = column_multipliers(weights, feature_names);
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] *= mult[j];
  return out;
}

WeightMap inverse_weights(const WeightMap& weights) {
  WeightMap out;
  for (const auto& [name, w] : weights) out[name] = 1.0 / w;
  return out;
}

}  // namespace attrition
