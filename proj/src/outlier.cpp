#include "attrition/outlier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "attrition/error.hpp"
#include "attrition/rng.hpp"

namespace attrition {
namespace {

constexpr double kEulerGamma = 0.57721566490153286061;

int height_limit(std::size_t subsample) {
  return static_cast<int>(std::ceil(std::log2(static_cast<double>(subsample))));
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& points, int max_depth, Rng& rng)
      : points_(points), max_depth_(max_depth), rng_(rng) {}

  IsolationTree build(std::vector<std::size_t> rows) {
    tree_.nodes.clear();
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  int grow(std::span<std::size_t> rows, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[id].size = rows.size();
    tree_.nodes[id].depth = depth;
    if (depth >= max_depth_ || rows.size() <= 1) return id;

    // Only features that vary inside the node can be split strictly
    // between their minimum and maximum.
    std::vector<std::size_t> splittable;
    std::vector<std::pair<double, double>> ranges;
    for (std::size_t f = 0; f < points_.cols(); ++f) {
      double lo = points_(rows[0], f), hi = lo;
      for (std::size_t r : rows) {
        lo = std::min(lo, points_(r, f));
        hi = std::max(hi, points_(r, f));
      }
      if (lo < hi) {
        splittable.push_back(f);
        ranges.emplace_back(lo, hi);
      }
    }
    if (splittable.empty()) return id;

    const std::size_t pick = rng_.below(splittable.size());
    const auto [lo, hi] = ranges[pick];
    double split = rng_.uniform(lo, hi);
    if (!(split > lo && split < hi)) split = lo + 0.5 * (hi - lo);
    if (!(split > lo && split < hi)) split = hi;  // adjacent doubles: everything below hi goes left
    const std::size_t feature = splittable[pick];

    auto mid = std::partition(rows.begin(), rows.end(),
                              [&](std::size_t r) { return points_(r, feature) < split; });
    const auto n_left = static_cast<std::size_t>(mid - rows.begin());
    tree_.nodes[id].feature = static_cast<int>(feature);
    tree_.nodes[id].split = split;
    const int left = grow(rows.subspan(0, n_left), depth + 1);
    const int right = grow(rows.subspan(n_left), depth + 1);
    tree_.nodes[id].left = left;
    tree_.nodes[id].right = right;
    return id;
  }

  const Matrix& points_;
  int max_depth_;
  Rng& rng_;
  IsolationTree tree_;
};

}  // namespace

double average_path_length(std::size_t m) {
  if (m <= 1) return 0.0;
  const double mm = static_cast<double>(m);
  const double harmonic = std::log(mm - 1.0) + kEulerGamma;
  return 2.0 * harmonic - 2.0 * (mm - 1.0) / mm;
}

double IsolationTree::path_length(std::span<const double> x) const {
  int node = 0;
  while (nodes[node].feature >= 0) {
    const auto& n = nodes[node];
    node = x[static_cast<std::size_t>(n.feature)] < n.split ? n.left : n.right;
  }
  return nodes[node].depth + average_path_length(nodes[node].size);
}

int IsolationTree::depth() const {
  int d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

IsolationForest fit_isolation_forest(const EncodedTable& table, const IsolationForestParams& params,
                                     std::uint64_t seed) {
  if (params.subsample < 2) throw ArgumentError("isolation forest subsample must be at least 2");
  if (params.n_trees == 0) throw ArgumentError("isolation forest needs at least one tree");
  if (table.n_rows() < 2) throw DataError("isolation forest needs at least two rows");

  IsolationForest forest;
  forest.subsample_size = std::min(params.subsample, table.n_rows());
  forest.n_features = table.n_features();
  forest.seed = seed;
  forest.trees.resize(params.n_trees);
  const int max_depth = height_limit(forest.subsample_size);

  const auto n_trees = static_cast<std::ptrdiff_t>(params.n_trees);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < n_trees; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> rows(table.n_rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    // Partial Fisher-Yates: the first subsample_size entries are the draw.
    for (std::size_t i = 0; i < forest.subsample_size; ++i) {
      std::swap(rows[i], rows[i + rng.below(rows.size() - i)]);
    }
    rows.resize(forest.subsample_size);
    TreeBuilder builder(table.features, max_depth, rng);
    forest.trees[static_cast<std::size_t>(t)] = builder.build(std::move(rows));
  }
  return forest;
}

double anomaly_score(const IsolationForest& forest, std::span<const double> x) {
  if (x.size() != forest.n_features) {
    throw ArgumentError("anomaly_score: expected " + std::to_string(forest.n_features) +
                        " features, got " + std::to_string(x.size()));
  }
  double total = 0.0;
  for (const auto& tree : forest.trees) total += tree.path_length(x);
  const double mean_path = total / static_cast<double>(forest.trees.size());
  return std::exp2(-mean_path / average_path_length(forest.subsample_size));
}

std::vector<double> anomaly_scores_serial(const IsolationForest& forest, const Matrix& points) {
  std::vector<double> out(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) out[i] = anomaly_score(forest, points.row(i));
  return out;
}

std::vector<double> anomaly_scores(const IsolationForest& forest, const Matrix& points) {
  if (points.rows() > 0 && points.cols() != forest.n_features) {
    throw ArgumentError("anomaly_scores: dimension mismatch");
  }
  std::vector<double> out(points.rows());
  const auto n = static_cast<std::ptrdiff_t>(points.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = anomaly_score(forest, points.row(static_cast<std::size_t>(i)));
  }
  return out;
}

OutlierRemoval remove_outliers(const EncodedTable& table, const IsolationForest& forest,
                               double contamination) {
  if (!(contamination >= 0.0 && contamination < 0.5)) {
    throw ArgumentError("contamination must lie in [0, 0.5)");
  }
  const double exact = contamination * static_cast<double>(table.n_rows());
  // Guard against products like (1/201) * 201 landing a hair above an integer.
  const auto quota = static_cast<std::size_t>(std::ceil(exact - 1e-9));

  OutlierRemoval out;
  if (quota > 0) {
    const auto scores = anomaly_scores(forest, table.features);
    std::vector<std::size_t> order(table.n_rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    out.removed.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(quota));
    std::sort(out.removed.begin(), out.removed.end());
  }
  std::vector<std::size_t> keep;
  std::size_t r = 0;
  for (std::size_t i = 0; i < table.n_rows(); ++i) {
    if (r < out.removed.size() && out.removed[r] == i) {
      ++r;
      continue;
    }
    keep.push_back(i);
  }
  out.table = table.select_rows(keep);
  return out;
}

}  // namespace attrition
