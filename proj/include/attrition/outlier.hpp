#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "attrition/dataset.hpp"

namespace attrition {

/// One isolation tree in flat form. Internal nodes send x[feature] < split
/// to `left`; external nodes (feature == -1) record how many subsample rows
/// reached them.
struct IsolationTree {
  struct Node {
    int feature = -1;
    double split = 0.0;
    int left = -1;
    int right = -1;
    std::size_t size = 0;
    int depth = 0;

    bool operator==(const Node&) const = default;
  };
  std::vector<Node> nodes;

  /// Path length of x including the c(size) adjustment at the external node.
  double path_length(std::span<const double> x) const;
  int depth() const;

  bool operator==(const IsolationTree&) const = default;
};

struct IsolationForest {
  std::vector<IsolationTree> trees;
  std::size_t subsample_size = 0;
  std::size_t n_features = 0;
  std::uint64_t seed = 0;

  bool operator==(const IsolationForest&) const = default;
};

struct IsolationForestParams {
  std::size_t n_trees = 100;
  std::size_t subsample = 256;
};

/// Average unsuccessful-search path length in a binary search tree of m
/// nodes: 2 H(m-1) - 2 (m-1)/m with H(i) = ln(i) + Euler's constant;
/// zero for m <= 1.
double average_path_length(std::size_t m);

/// Fits each tree on its own seeded subsample (drawn without replacement).
/// A subsample larger than the table is clamped to the table size.
IsolationForest fit_isolation_forest(const EncodedTable& table, const IsolationForestParams& params,
                                     std::uint64_t seed);

/// 2^(-E[h(x)] / c(subsample_size)), strictly inside (0, 1).
double anomaly_score(const IsolationForest& forest, std::span<const double> x);

/// Scores of every row of `points`; parallel over rows.
std::vector<double> anomaly_scores(const IsolationForest& forest, const Matrix& points);
/// Single-threaded reference for anomaly_scores.
std::vector<double> anomaly_scores_serial(const IsolationForest& forest, const Matrix& points);

struct OutlierRemoval {
  EncodedTable table;
  std::vector<std::size_t> removed;  ///< ascending row indices of the input
};

/// Removes the ceil(contamination * n) highest-scoring rows; equal scores
/// remove the lower index first.
OutlierRemoval remove_outliers(const EncodedTable& table, const IsolationForest& forest,
                               double contamination = 0.05);

}  // namespace attrition
