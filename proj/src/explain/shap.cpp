#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <mutex>
#include <numeric>
#include <optional>

#include "attrition/error.hpp"
#include "attrition/explain.hpp"
#include "attrition/rng.hpp"

namespace attrition {
namespace {

std::mutex stats_mutex;
EfficiencyStats stats;

void check_inputs(std::span<const double> x, const Matrix& bg) {
  if (bg.rows() == 0) throw ArgumentError("empty background set");
  if (bg.cols() != x.size()) {
    throw ArgumentError("background has " + std::to_string(bg.cols()) + " features, instance has " +
                        std::to_string(x.size()));
  }
}

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

// s! (M - s - 1)! / M!
double shapley_weight(std::size_t m, std::size_t s) {
  return 1.0 / (static_cast<double>(m) * binomial(m - 1, s));
}

// (a - 1)! b! / (a + b)!, the share of a leaf value credited to each of the
// a features that must come from the instance when b must come from the
// reference row.
class LeafWeights {
 public:
  static double get(std::size_t a, std::size_t b) {
    static const LeafWeights table;
    if (a < kSize && b < kSize) return table.w_[a][b];
    return direct(a, b);
  }

 private:
  static constexpr std::size_t kSize = 64;
  static double direct(std::size_t a, std::size_t b) {
    if (a == 0) return 0.0;
    return 1.0 / (static_cast<double>(a + b) * binomial(a + b - 1, a - 1));
  }
  LeafWeights() {
    for (std::size_t a = 0; a < kSize; ++a) {
      for (std::size_t b = 0; b < kSize; ++b) w_[a][b] = direct(a, b);
    }
  }
  double w_[kSize][kSize];
};

enum : std::uint8_t { kFree = 0, kFromX = 1, kFromZ = 2 };

struct PairWalker {
  const Tree& tree;
  std::span<const double> x;
  std::span<const double> z;
  std::vector<std::uint8_t>& state;
  std::vector<int>& path;
  std::vector<double>& phi;

  void walk(int node, std::size_t nx, std::size_t nz) {
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(node)];
    if (n.is_leaf()) {
      if (nx + nz == 0 || n.value == 0.0) return;
      const double wx = n.value * LeafWeights::get(nx, nz);
      const double wz = n.value * LeafWeights::get(nz, nx);
      for (int f : path) {
        if (state[static_cast<std::size_t>(f)] == kFromX) phi[static_cast<std::size_t>(f)] += wx;
        else phi[static_cast<std::size_t>(f)] -= wz;
      }
      return;
    }
    const auto f = static_cast<std::size_t>(n.feature);
    const int gx = x[f] <= n.threshold ? n.left : n.right;
    const int gz = z[f] <= n.threshold ? n.left : n.right;
    if (state[f] == kFromX) {
      walk(gx, nx, nz);
    } else if (state[f] == kFromZ) {
      walk(gz, nx, nz);
    } else if (gx == gz) {
      walk(gx, nx, nz);
    } else {
      path.push_back(n.feature);
      state[f] = kFromX;
      walk(gx, nx + 1, nz);
      state[f] = kFromZ;
      walk(gz, nx, nz + 1);
      state[f] = kFree;
      path.pop_back();
    }
  }
};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

ShapExplanation::ShapExplanation(std::vector<double> phi, double base_value, double output_value,
                                 OutputSpace space, std::vector<double> feature_values,
                                 std::vector<std::string> feature_names)
    : phi_(std::move(phi)),
      base_value_(base_value),
      output_value_(output_value),
      space_(space),
      feature_values_(std::move(feature_values)),
      feature_names_(std::move(feature_names)) {
  if (phi_.size() != feature_names_.size() || feature_values_.size() != feature_names_.size()) {
    throw ArgumentError("explanation vectors differ in length");
  }
  const double r = residual();
  {
    std::lock_guard lock(stats_mutex);
    ++stats.count;
    stats.max_residual = std::max(stats.max_residual, r);
  }
  if (!(r < kEfficiencyTolerance)) {
    throw Error("local accuracy violated: |base + sum(phi) - output| = " + std::to_string(r));
  }
}

double ShapExplanation::residual() const {
  double sum = base_value_;
  for (double p : phi_) sum += p;
  return std::abs(sum - output_value_);
}

EfficiencyStats efficiency_stats() {
  std::lock_guard lock(stats_mutex);
  return stats;
}

BackgroundSet sample_background(const Matrix& rows, std::size_t n, std::uint64_t seed) {
  if (rows.rows() == 0) throw ArgumentError("cannot sample a background from no rows");
  if (n == 0) throw ArgumentError("background size must be positive");
  std::vector<std::size_t> idx(rows.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (n < idx.size()) {
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
  }
  BackgroundSet bg;
  bg.rows = Matrix(idx.size(), rows.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy(rows.row(idx[i]).begin(), rows.row(idx[i]).end(), bg.rows.row(i).begin());
  }
  return bg;
}

Attribution exact_shapley(const ModelFunction& f, std::span<const double> x, const Matrix& bg) {
  check_inputs(x, bg);
  const std::size_t m = x.size();
  if (m > kMaxExactFeatures) {
    throw ArgumentError("exact Shapley values need at most " + std::to_string(kMaxExactFeatures) +
                        " features, got " + std::to_string(m));
  }
  const std::size_t n_masks = std::size_t{1} << m;
  std::vector<double> v(n_masks, 0.0);
  std::vector<double> composite(m);
  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    double total = 0.0;
    for (std::size_t r = 0; r < bg.rows(); ++r) {
      const auto z = bg.row(r);
      for (std::size_t j = 0; j < m; ++j) composite[j] = (mask >> j) & 1 ? x[j] : z[j];
      total += f(composite);
    }
    v[mask] = total / static_cast<double>(bg.rows());
  }

  Attribution a;
  a.phi.assign(m, 0.0);
  a.base_value = v[0];
  a.output_value = f(x);
  std::vector<double> weight(m);
  for (std::size_t s = 0; s < m; ++s) weight[s] = shapley_weight(m, s);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t bit = std::size_t{1} << j;
    double sum = 0.0;
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
      if (mask & bit) continue;
      sum += weight[static_cast<std::size_t>(std::popcount(mask))] * (v[mask | bit] - v[mask]);
    }
    a.phi[j] = sum;
  }
  return a;
}

Attribution tree_shap(const Tree& tree, std::span<const double> x, const Matrix& bg) {
  check_inputs(x, bg);
  const std::size_t m = x.size();
  Attribution a;
  a.phi.assign(m, 0.0);
  a.output_value = tree.predict(x);
  std::vector<std::uint8_t> state(m, kFree);
  std::vector<int> path;
  std::vector<double> acc(m, 0.0);
  double base = 0.0;
  for (std::size_t r = 0; r < bg.rows(); ++r) {
    const auto z = bg.row(r);
    base += tree.predict(z);
    PairWalker walker{tree, x, z, state, path, acc};
    walker.walk(0, 0, 0);
  }
  const double n = static_cast<double>(bg.rows());
  a.base_value = base / n;
  for (std::size_t j = 0; j < m; ++j) a.phi[j] = acc[j] / n;
  return a;
}

Attribution tree_shap(const TrainedModel& model, std::span<const double> x, const Matrix& bg) {
  if (!is_tree_kind(model.kind)) {
    throw UnsupportedKind("tree_shap does not apply to " + to_string(model.kind));
  }
  const auto combine = [&](const std::vector<Tree>& trees, double scale, double offset) {
    Attribution total;
    total.phi.assign(x.size(), 0.0);
    total.base_value = 0.0;
    for (const auto& t : trees) {
      const Attribution a = tree_shap(t, x, bg);
      for (std::size_t j = 0; j < x.size(); ++j) total.phi[j] += a.phi[j];
      total.base_value += a.base_value;
    }
    for (double& p : total.phi) p *= scale;
    total.base_value = offset + total.base_value * scale;
    total.output_value = explanation_output(model, x);
    return total;
  };
  return std::visit(
      Overloaded{
          [&](const ForestState& s) {
            return combine(s.trees, 1.0 / static_cast<double>(s.trees.size()), 0.0);
          },
          [&](const GbdtState& s) { return combine(s.trees, 1.0, s.base_score); },
          [&](const ConstantState&) {
            check_inputs(x, bg);
            const double out = predict_proba(model, x);
            return Attribution{std::vector<double>(x.size(), 0.0), out, out};
          },
          [&](const auto&) -> Attribution {
            throw UnsupportedKind("model state has no trees");
          },
      },
      model.state);
}

Attribution linear_shap(const LinearState& state, std::span<const double> x, const Matrix& bg) {
  check_inputs(x, bg);
  if (state.weights.size() != x.size()) throw ArgumentError("weight vector length mismatch");
  const std::size_t m = x.size();
  Attribution a;
  a.phi.resize(m);
  a.base_value = state.bias;
  a.output_value = state.bias;
  const double n = static_cast<double>(bg.rows());
  for (std::size_t j = 0; j < m; ++j) {
    double mean = 0.0;
    for (std::size_t r = 0; r < bg.rows(); ++r) mean += bg(r, j);
    mean /= n;
    a.phi[j] = state.weights[j] * (x[j] - mean);
    a.base_value += state.weights[j] * mean;
    a.output_value += state.weights[j] * x[j];
  }
  return a;
}

Attribution kernel_shap(const ModelFunction& f, std::span<const double> x, const Matrix& bg,
                        std::size_t n_samples, std::uint64_t seed) {
  check_inputs(x, bg);
  const std::size_t m = x.size();
  const std::size_t all_coalitions = m < 63 ? (std::size_t{1} << m) - 2 : SIZE_MAX;
  const std::size_t minimum = std::min(m + 2, all_coalitions);
  if (m > 1 && n_samples < minimum) {
    throw ArgumentError("kernel_shap needs at least " + std::to_string(minimum) +
                        " coalition samples");
  }
  std::vector<double> composite(m);
  const auto value = [&](const std::vector<std::uint8_t>& in) {
    double total = 0.0;
    for (std::size_t r = 0; r < bg.rows(); ++r) {
      const auto z = bg.row(r);
      for (std::size_t j = 0; j < m; ++j) composite[j] = in[j] ? x[j] : z[j];
      total += f(composite);
    }
    return total / static_cast<double>(bg.rows());
  };

  Attribution a;
  a.phi.assign(m, 0.0);
  a.base_value = value(std::vector<std::uint8_t>(m, 0));
  a.output_value = f(x);
  const double delta = a.output_value - a.base_value;
  if (m == 1) {
    a.phi[0] = delta;
    return a;
  }

  std::vector<std::vector<std::uint8_t>> coalitions;
  std::vector<double> weights;
  const bool enumerate = n_samples >= all_coalitions;
  if (enumerate) {
    const std::size_t n_masks = std::size_t{1} << m;
    for (std::size_t mask = 1; mask + 1 < n_masks; ++mask) {
      std::vector<std::uint8_t> in(m);
      for (std::size_t j = 0; j < m; ++j) in[j] = (mask >> j) & 1;
      const auto s = static_cast<std::size_t>(std::popcount(mask));
      coalitions.push_back(std::move(in));
      weights.push_back(static_cast<double>(m - 1) /
                        (binomial(m, s) * static_cast<double>(s) * static_cast<double>(m - s)));
    }
  } else {
    // Sizes drawn with probability proportional to (M-1)/(s(M-s)); each
    // sampled coalition then carries unit weight.
    std::vector<double> cdf(m - 1);
    double total = 0.0;
    for (std::size_t s = 1; s < m; ++s) {
      total += static_cast<double>(m - 1) / (static_cast<double>(s) * static_cast<double>(m - s));
      cdf[s - 1] = total;
    }
    Rng rng(seed);
    std::vector<std::size_t> perm(m);
    for (std::size_t t = 0; t < n_samples; ++t) {
      const double u = rng.uniform() * total;
      const std::size_t s =
          static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()) + 1;
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::vector<std::uint8_t> in(m, 0);
      for (std::size_t i = 0; i < std::min(s, m - 1); ++i) {
        std::swap(perm[i], perm[i + rng.below(m - i)]);
        in[perm[i]] = 1;
      }
      coalitions.push_back(std::move(in));
      weights.push_back(1.0);
    }
  }

  // Substituting phi_M = delta - sum_{j<M} phi_j leaves an unconstrained
  // problem in the first M-1 coordinates.
  const auto rows = static_cast<Eigen::Index>(coalitions.size());
  const auto cols = static_cast<Eigen::Index>(m - 1);
  Eigen::MatrixXd design(rows, cols);
  Eigen::VectorXd target(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& in = coalitions[static_cast<std::size_t>(r)];
    const double sw = std::sqrt(weights[static_cast<std::size_t>(r)]);
    const double last = in[m - 1];
    for (Eigen::Index j = 0; j < cols; ++j) {
      design(r, j) = sw * (in[static_cast<std::size_t>(j)] - last);
    }
    target(r) = sw * (value(in) - a.base_value - last * delta);
  }
  const Eigen::VectorXd beta = design.completeOrthogonalDecomposition().solve(target);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < cols; ++j) {
    a.phi[static_cast<std::size_t>(j)] = beta(j);
    sum += beta(j);
  }
  a.phi[m - 1] = delta - sum;
  return a;
}

Explainer::Explainer(Predictor predictor, const Matrix& background, ExplainOptions options)
    : predictor_(std::move(predictor)), options_(options) {
  if (background.rows() == 0) throw ArgumentError("empty background set");
  background_.rows = predictor_.transform(background);
  const TrainedModel& model = predictor_.model();
  engine_ = options.engine;
  if (engine_ == ShapEngine::automatic) {
    if (is_tree_kind(model.kind) || model.is_constant()) engine_ = ShapEngine::tree;
    else if (std::holds_alternative<LinearState>(model.state)) engine_ = ShapEngine::linear;
    else engine_ = ShapEngine::kernel;
  }
  if (engine_ == ShapEngine::linear && !std::holds_alternative<LinearState>(model.state)) {
    throw UnsupportedKind("linear engine needs a linear model");
  }
  if (engine_ == ShapEngine::tree && !is_tree_kind(model.kind) && !model.is_constant()) {
    throw UnsupportedKind("tree engine needs a tree model");
  }
}

double Explainer::output(std::span<const double> x) const {
  return explanation_output(predictor_.model(), predictor_.transform(x));
}

ShapExplanation Explainer::explain(std::span<const double> x) const {
  const std::vector<double> xt = predictor_.transform(x);
  const TrainedModel& model = predictor_.model();
  const Matrix& bg = background_.rows;
  const ModelFunction f = [&model](std::span<const double> v) {
    return explanation_output(model, v);
  };
  Attribution a;
  if (model.is_constant()) {
    const double out = explanation_output(model, xt);
    a = {std::vector<double>(xt.size(), 0.0), out, out};
  } else {
    switch (engine_) {
      case ShapEngine::tree: a = tree_shap(model, xt, bg); break;
      case ShapEngine::linear: a = linear_shap(std::get<LinearState>(model.state), xt, bg); break;
      case ShapEngine::exact: a = exact_shapley(f, xt, bg); break;
      case ShapEngine::kernel:
      case ShapEngine::automatic:
        a = kernel_shap(f, xt, bg, options_.kernel_samples, options_.seed);
        break;
    }
  }
  return ShapExplanation(std::move(a.phi), a.base_value, a.output_value, space(),
                         std::vector<double>(x.begin(), x.end()), predictor_.feature_names());
}

std::vector<ShapExplanation> Explainer::explain_all(const Matrix& rows) const {
  std::vector<std::optional<ShapExplanation>> slots(rows.rows());
  std::vector<std::string> errors(rows.rows());
  const auto n = static_cast<long>(rows.rows());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      slots[static_cast<std::size_t>(i)].emplace(explain(rows.row(static_cast<std::size_t>(i))));
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  std::vector<ShapExplanation> out;
  out.reserve(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!errors[i].empty()) throw Error("row " + std::to_string(i) + ": " + errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

std::vector<ShapExplanation> Explainer::explain_all_serial(const Matrix& rows) const {
  std::vector<ShapExplanation> out;
  out.reserve(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) out.push_back(explain(rows.row(i)));
  return out;
}

}  // namespace attrition
