#include <algorithm>
#include <cmath>
#include <numeric>

#include "attrition/error.hpp"
#include "attrition/rng.hpp"
#include "learners.hpp"

namespace attrition::detail {
namespace {

struct CartConfig {
  int max_depth = 0;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = 0;  // >= n_features means "all, in column order"
};

struct SplitChoice {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double score = -1.0;  // weighted impurity decrease
};

double gini_mass(double w0, double w1) {
  const double w = w0 + w1;
  if (w <= 0.0) return 0.0;
  return w - (w0 * w0 + w1 * w1) / w;  // = w * gini
}

// Greedy Gini CART over rows weighted by integer multiplicities (bootstrap
// counts; all ones for a plain tree).
class CartBuilder {
 public:
  CartBuilder(const EncodedTable& table, std::vector<double> weight, const CartConfig& config,
              Rng* rng)
      : table_(table), weight_(std::move(weight)), config_(config), rng_(rng) {}

  Tree build() {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < weight_.size(); ++i) {
      if (weight_[i] > 0.0) rows.push_back(i);
    }
    tree_.nodes.clear();
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t>& rows, int depth) {
    double w0 = 0.0, w1 = 0.0;
    for (std::size_t r : rows) (table_.labels[r] == 1 ? w1 : w0) += weight_[r];
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[id].value = w1 / (w0 + w1);

    const double total = w0 + w1;
    const bool pure = w0 == 0.0 || w1 == 0.0;
    const bool depth_capped = config_.max_depth > 0 && depth >= config_.max_depth;
    if (pure || depth_capped || total < static_cast<double>(config_.min_samples_split)) return id;

    const SplitChoice best = find_split(rows, w0, w1);
    if (!best.found) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (table_.features(r, best.feature) <= best.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    tree_.nodes[id].feature = static_cast<int>(best.feature);
    tree_.nodes[id].threshold = best.threshold;
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  SplitChoice find_split(const std::vector<std::size_t>& rows, double w0, double w1) {
    const std::size_t d = table_.n_features();
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t budget = d;
    if (config_.max_features < d) {
      rng_->shuffle(std::span(order));
      budget = config_.max_features;
    }
    const double parent = gini_mass(w0, w1);
    const double min_leaf = static_cast<double>(config_.min_samples_leaf);

    SplitChoice best;
    std::vector<std::pair<double, std::size_t>> sorted(rows.size());
    std::size_t evaluated = 0;
    for (std::size_t f : order) {
      if (evaluated >= budget && best.found) break;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        sorted[i] = {table_.features(rows[i], f), rows[i]};
      }
      std::sort(sorted.begin(), sorted.end());
      if (sorted.front().first == sorted.back().first) continue;  // constant here
      ++evaluated;
      double l0 = 0.0, l1 = 0.0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const std::size_t r = sorted[i].second;
        (table_.labels[r] == 1 ? l1 : l0) += weight_[r];
        const double a = sorted[i].first, b = sorted[i + 1].first;
        if (a == b) continue;
        const double wl = l0 + l1, wr = w0 + w1 - wl;
        if (wl < min_leaf || wr < min_leaf) continue;
        const double score = parent - gini_mass(l0, l1) - gini_mass(w0 - l0, w1 - l1);
        if (score > best.score) {
          double thr = a + (b - a) / 2.0;
          if (!(thr < b)) thr = a;
          best = {true, f, thr, score};
        }
      }
      if (evaluated >= budget && best.found) break;
    }
    return best;
  }

  const EncodedTable& table_;
  std::vector<double> weight_;
  CartConfig config_;
  Rng* rng_;
  Tree tree_;
};

}  // namespace

ForestState fit_decision_tree(const EncodedTable& table, const DecisionTreeParams& params) {
  CartConfig config{params.max_depth, params.min_samples_split, params.min_samples_leaf,
                    table.n_features()};
  CartBuilder builder(table, std::vector<double>(table.n_rows(), 1.0), config, nullptr);
  ForestState state;
  state.trees.push_back(builder.build());
  return state;
}

ForestState fit_random_forest(const EncodedTable& table, const RandomForestParams& params,
                              std::uint64_t seed) {
  const std::size_t d = table.n_features();
  std::size_t max_features = params.max_features;
  if (max_features == 0) {
    max_features = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
  }
  CartConfig config{params.max_depth, params.min_samples_split, params.min_samples_leaf,
                    std::min(max_features, d)};

  ForestState state;
  state.trees.resize(params.n_trees);
  const auto n_trees = static_cast<std::ptrdiff_t>(params.n_trees);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < n_trees; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<double> weight(table.n_rows(), 1.0);
    if (params.bootstrap) {
      std::fill(weight.begin(), weight.end(), 0.0);
      for (std::size_t i = 0; i < table.n_rows(); ++i) weight[rng.below(table.n_rows())] += 1.0;
    }
    CartBuilder builder(table, std::move(weight), config, &rng);
    state.trees[static_cast<std::size_t>(t)] = builder.build();
  }
  return state;
}

}  // namespace attrition::detail
