#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "attrition/error.hpp"
#include "learners.hpp"
#include "spdlog/spdlog.h"

namespace attrition::detail {
namespace {

struct GradStats {
  double g = 0.0;
  double h = 0.0;
  std::size_t count = 0;

  void add(double gi, double hi) {
    g += gi;
    h += hi;
    ++count;
  }
};

double leaf_objective(double g, double h, double l2) { return g * g / (h + l2); }

double split_gain(const GradStats& left, const GradStats& parent, double l2) {
  const GradStats right{parent.g - left.g, parent.h - left.h, parent.count - left.count};
  return 0.5 * (leaf_objective(left.g, left.h, l2) + leaf_objective(right.g, right.h, l2) -
                leaf_objective(parent.g, parent.h, l2));
}

double prior_logit(std::span<const int> labels) {
  const double pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double p = pos / static_cast<double>(labels.size());
  return std::log(p / (1.0 - p));
}

void compute_gradients(std::span<const int> labels, std::span<const double> margin,
                       std::vector<double>& grad, std::vector<double>& hess) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = logistic(margin[i]);
    grad[i] = p - labels[i];
    hess[i] = p * (1.0 - p);
  }
}

void check_loss_history(const std::vector<double>& history, const char* learner) {
  for (std::size_t r = 1; r < history.size(); ++r) {
    if (history[r] > history[r - 1] + 1e-12) {
      spdlog::warn("{}: training loss rose at round {} ({} -> {})", learner, r, history[r - 1],
                   history[r]);
      return;
    }
  }
}

// ---------------------------------------------------------------------------
// Depth-wise exact greedy growth over presorted columns.

class ExactTreeBuilder {
 public:
  ExactTreeBuilder(const EncodedTable& table, const std::vector<std::vector<std::size_t>>& sorted,
                   const XgbParams& params)
      : table_(table), sorted_(sorted), params_(params) {}

  Tree build(const std::vector<double>& grad, const std::vector<double>& hess) {
    const std::size_t n = table_.n_rows();
    Tree tree;
    tree.nodes.push_back({});
    std::vector<int> node_of(n, 0);
    std::vector<int> frontier{0};
    std::vector<GradStats> stats(1);
    for (std::size_t i = 0; i < n; ++i) stats[0].add(grad[i], hess[i]);

    for (int depth = 0; depth < params_.max_depth && !frontier.empty(); ++depth) {
      // slot[node id] -> position in the frontier, -1 when not being split
      std::vector<int> slot(tree.nodes.size(), -1);
      for (std::size_t k = 0; k < frontier.size(); ++k) slot[frontier[k]] = static_cast<int>(k);

      struct Best {
        double gain = 0.0;
        int feature = -1;
        double threshold = 0.0;
      };
      std::vector<Best> best(frontier.size());
      std::vector<GradStats> running(frontier.size());
      std::vector<double> last_value(frontier.size());
      std::vector<bool> seen(frontier.size());

      for (std::size_t f = 0; f < table_.n_features(); ++f) {
        std::fill(running.begin(), running.end(), GradStats{});
        std::fill(seen.begin(), seen.end(), false);
        for (std::size_t row : sorted_[f]) {
          const int node = node_of[row];
          if (node < 0 || slot[node] < 0) continue;
          const auto k = static_cast<std::size_t>(slot[node]);
          const double v = table_.features(row, f);
          if (seen[k] && v != last_value[k]) {
            const GradStats& parent = stats[static_cast<std::size_t>(node)];
            const GradStats& left = running[k];
            const double h_right = parent.h - left.h;
            if (left.h >= params_.min_child_hessian && h_right >= params_.min_child_hessian) {
              const double gain = split_gain(left, parent, params_.l2) - params_.min_split_gain;
              if (gain > best[k].gain) {
                double thr = last_value[k] + (v - last_value[k]) / 2.0;
                if (!(thr < v)) thr = last_value[k];
                best[k] = {gain, static_cast<int>(f), thr};
              }
            }
          }
          running[k].add(grad[row], hess[row]);
          last_value[k] = v;
          seen[k] = true;
        }
      }

      std::vector<int> next;
      for (std::size_t k = 0; k < frontier.size(); ++k) {
        if (best[k].feature < 0) continue;
        const int id = frontier[k];
        const int l = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});
        tree.nodes.push_back({});
        stats.resize(tree.nodes.size());
        tree.nodes[id].feature = best[k].feature;
        tree.nodes[id].threshold = best[k].threshold;
        tree.nodes[id].left = l;
        tree.nodes[id].right = l + 1;
        next.push_back(l);
        next.push_back(l + 1);
      }
      stats.resize(tree.nodes.size());
      for (int id : next) stats[static_cast<std::size_t>(id)] = {};
      for (std::size_t i = 0; i < n; ++i) {
        const int node = node_of[i];
        if (node < 0) continue;
        const TreeNode& tn = tree.nodes[node];
        if (tn.is_leaf() || slot[node] < 0) {
          node_of[i] = -1;  // settled in a final leaf
          continue;
        }
        const int child = table_.features(i, static_cast<std::size_t>(tn.feature)) <= tn.threshold
                              ? tn.left
                              : tn.right;
        node_of[i] = child;
        stats[static_cast<std::size_t>(child)].add(grad[i], hess[i]);
      }
      frontier = std::move(next);
    }

    for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
      if (tree.nodes[id].is_leaf()) {
        tree.nodes[id].value =
            -stats[id].g / (stats[id].h + params_.l2) * params_.learning_rate;
      } else {
        tree.nodes[id].value = 0.0;
      }
    }
    return tree;
  }

 private:
  const EncodedTable& table_;
  const std::vector<std::vector<std::size_t>>& sorted_;
  const XgbParams& params_;
};

// ---------------------------------------------------------------------------
// Histogram binning and leaf-wise growth.

struct FeatureBins {
  std::vector<double> upper;  // bin b holds values <= upper[b]; last bin is open-ended
  std::size_t bin_of(double v) const {
    return static_cast<std::size_t>(std::lower_bound(upper.begin(), upper.end(), v) -
                                    upper.begin());
  }
  std::size_t n_bins() const { return upper.size() + 1; }
};

FeatureBins make_bins(std::vector<double> values, std::size_t max_bins) {
  std::sort(values.begin(), values.end());
  std::vector<double> distinct;
  std::vector<std::size_t> counts;
  for (double v : values) {
    if (distinct.empty() || v != distinct.back()) {
      distinct.push_back(v);
      counts.push_back(0);
    }
    ++counts.back();
  }
  FeatureBins bins;
  auto boundary = [&](std::size_t i) {
    const double a = distinct[i], b = distinct[i + 1];
    double t = a + (b - a) / 2.0;
    if (!(t < b)) t = a;
    return t;
  };
  if (distinct.size() <= max_bins) {
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) bins.upper.push_back(boundary(i));
    return bins;
  }
  // Equal-frequency boundaries placed between distinct values.
  const double per_bin = static_cast<double>(values.size()) / static_cast<double>(max_bins);
  double cumulative = 0.0;
  double next_cut = per_bin;
  for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
    cumulative += static_cast<double>(counts[i]);
    if (cumulative >= next_cut && bins.upper.size() + 1 < max_bins) {
      bins.upper.push_back(boundary(i));
      while (next_cut <= cumulative) next_cut += per_bin;
    }
  }
  return bins;
}

class HistogramTreeBuilder {
 public:
  HistogramTreeBuilder(const std::vector<FeatureBins>& bins,
                       const std::vector<std::vector<std::uint16_t>>& binned, std::size_t n_rows,
                       const LgbmParams& params)
      : bins_(bins), binned_(binned), n_rows_(n_rows), params_(params) {}

  Tree build(const std::vector<double>& grad, const std::vector<double>& hess) {
    Tree tree;
    std::vector<Leaf> leaves;
    Leaf root;
    root.node = 0;
    root.rows.resize(n_rows_);
    std::iota(root.rows.begin(), root.rows.end(), std::size_t{0});
    tree.nodes.push_back({});
    evaluate(root, grad, hess);
    leaves.push_back(std::move(root));

    while (leaves.size() < params_.max_leaves) {
      // Best-gain leaf; ties keep the earliest-created leaf.
      std::size_t pick = leaves.size();
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (leaves[i].split_feature < 0) continue;
        if (pick == leaves.size() || leaves[i].gain > leaves[pick].gain) pick = i;
      }
      if (pick == leaves.size()) break;

      Leaf parent = std::move(leaves[pick]);
      const auto f = static_cast<std::size_t>(parent.split_feature);
      Leaf left, right;
      for (std::size_t r : parent.rows) {
        (binned_[f][r] <= parent.split_bin ? left : right).rows.push_back(r);
      }
      const int l = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back({});
      tree.nodes.push_back({});
      TreeNode& pn = tree.nodes[parent.node];
      pn.feature = parent.split_feature;
      pn.threshold = bins_[f].upper[parent.split_bin];
      pn.left = l;
      pn.right = l + 1;
      left.node = l;
      right.node = l + 1;
      evaluate(left, grad, hess);
      evaluate(right, grad, hess);
      leaves[pick] = std::move(left);
      leaves.push_back(std::move(right));
    }

    for (const Leaf& leaf : leaves) {
      tree.nodes[leaf.node].value =
          -leaf.stats.g / (leaf.stats.h + params_.l2) * params_.learning_rate;
    }
    return tree;
  }

 private:
  struct Leaf {
    int node = 0;
    std::vector<std::size_t> rows;
    GradStats stats;
    int split_feature = -1;
    std::size_t split_bin = 0;
    double gain = 0.0;
  };

  void evaluate(Leaf& leaf, const std::vector<double>& grad, const std::vector<double>& hess) {
    leaf.stats = {};
    for (std::size_t r : leaf.rows) leaf.stats.add(grad[r], hess[r]);
    leaf.split_feature = -1;
    leaf.gain = 0.0;
    if (leaf.rows.size() < 2 * params_.min_data_in_leaf) return;

    std::vector<GradStats> hist;
    for (std::size_t f = 0; f < bins_.size(); ++f) {
      if (bins_[f].upper.empty()) continue;
      hist.assign(bins_[f].n_bins(), GradStats{});
      for (std::size_t r : leaf.rows) hist[binned_[f][r]].add(grad[r], hess[r]);
      GradStats left;
      for (std::size_t b = 0; b + 1 < hist.size(); ++b) {
        left.g += hist[b].g;
        left.h += hist[b].h;
        left.count += hist[b].count;
        if (hist[b].count == 0) continue;  // same partition as the previous bin
        const std::size_t n_right = leaf.stats.count - left.count;
        if (left.count < params_.min_data_in_leaf || n_right < params_.min_data_in_leaf) continue;
        if (left.h < params_.min_child_hessian ||
            leaf.stats.h - left.h < params_.min_child_hessian) {
          continue;
        }
        const double gain = split_gain(left, leaf.stats, params_.l2) - params_.min_split_gain;
        if (gain > leaf.gain) {
          leaf.gain = gain;
          leaf.split_feature = static_cast<int>(f);
          leaf.split_bin = b;
        }
      }
    }
  }

  const std::vector<FeatureBins>& bins_;
  const std::vector<std::vector<std::uint16_t>>& binned_;
  std::size_t n_rows_;
  const LgbmParams& params_;
};

template <typename BuildTree>
GbdtState boost(const EncodedTable& table, std::size_t rounds, BuildTree&& build_tree,
                const char* learner) {
  const std::size_t n = table.n_rows();
  GbdtState state;
  state.base_score = prior_logit(table.labels);
  std::vector<double> margin(n, state.base_score);
  std::vector<double> grad(n), hess(n);
  state.loss_history.push_back(mean_log_loss(table.labels, margin));
  for (std::size_t round = 0; round < rounds; ++round) {
    compute_gradients(table.labels, margin, grad, hess);
    Tree tree = build_tree(grad, hess);
    for (std::size_t i = 0; i < n; ++i) margin[i] += tree.predict(table.row(i));
    state.trees.push_back(std::move(tree));
    state.loss_history.push_back(mean_log_loss(table.labels, margin));
  }
  check_loss_history(state.loss_history, learner);
  return state;
}

}  // namespace

double mean_log_loss(std::span<const int> labels, std::span<const double> margins) {
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    // log(1 + e^{-m}) for y=1, log(1 + e^{m}) for y=0, computed stably
    const double m = labels[i] == 1 ? margins[i] : -margins[i];
    total += m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
  }
  return total / static_cast<double>(labels.size());
}

GbdtState fit_xgb(const EncodedTable& table, const XgbParams& params) {
  std::vector<std::vector<std::size_t>> sorted(table.n_features());
  for (std::size_t f = 0; f < table.n_features(); ++f) {
    auto& order = sorted[f];
    order.resize(table.n_rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return table.features(a, f) < table.features(b, f);
    });
  }
  ExactTreeBuilder builder(table, sorted, params);
  return boost(
      table, params.n_rounds,
      [&](const std::vector<double>& g, const std::vector<double>& h) { return builder.build(g, h); },
      "XGBStyleGBDT");
}

GbdtState fit_lgbm(const EncodedTable& table, const LgbmParams& params) {
  if (params.max_bins > 65535) throw ArgumentError("max_bins must fit in 16 bits");
  std::vector<FeatureBins> bins(table.n_features());
  std::vector<std::vector<std::uint16_t>> binned(table.n_features());
  for (std::size_t f = 0; f < table.n_features(); ++f) {
    bins[f] = make_bins(table.features.column(f), params.max_bins);
    binned[f].resize(table.n_rows());
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
      binned[f][i] = static_cast<std::uint16_t>(bins[f].bin_of(table.features(i, f)));
    }
  }
  HistogramTreeBuilder builder(bins, binned, table.n_rows(), params);
  return boost(
      table, params.n_rounds,
      [&](const std::vector<double>& g, const std::vector<double>& h) { return builder.build(g, h); },
      "LGBMStyleGBDT");
}

}  // namespace attrition::detail
