#pragma once

#include <map>
#include <string>

#include "attrition/dataset.hpp"

namespace attrition {

/// Feature name -> positive multiplier.
using WeightMap = std::map<std::string, double>;

/// The multipliers used when feature weighting is switched on without an
/// explicit map.
WeightMap default_feature_weights();

/// Parses "name=value[,name=value...]". Throws ArgumentError on malformed
/// entries or non-positive values.
WeightMap parse_weight_map(const std::string& text);
std::string format_weight_map(const WeightMap& weights);

/// Scales each weighted column of every row by its multiplier.
EncodedTable apply_feature_weights(const EncodedTable& table, const WeightMap& weights);

/// Same scaling applied to a single instance laid out as `feature_names`.
std::vector<double> apply_feature_weights(std::span<const double> x,
                                          const std::vector<std::string>& feature_names,
                                          const WeightMap& weights);

WeightMap inverse_weights(const WeightMap& weights);

}  // namespace attrition
