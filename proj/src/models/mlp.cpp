#include <Eigen/Dense>
#include <cmath>
#include <numeric>

#include "attrition/rng.hpp"
#include "learners.hpp"

namespace attrition::detail {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Adam {
  explicit Adam(Eigen::Index size) : m(Eigen::VectorXd::Zero(size)), v(Eigen::VectorXd::Zero(size)) {}

  template <typename Params, typename Grad>
  void step(Params& params, const Grad& grad, double lr, std::size_t t) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    const double rate = lr * std::sqrt(c2) / c1;
    params.array() -= rate * m.array() / (v.array().sqrt() + eps);
  }

  Eigen::VectorXd m, v;
};

}  // namespace

// One ReLU hidden layer, logistic output, log-loss with L2 on the weights,
// minibatch Adam over a seeded shuffle each epoch.
MlpState fit_mlp(const EncodedTable& table, const MlpParams& params, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(table.n_rows());
  const auto d = static_cast<Eigen::Index>(table.n_features());
  const auto h = static_cast<Eigen::Index>(params.hidden);
  const Standardizer s = standardizer_for(table.features);

  RowMatrix x(n, d);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      x(i, j) = (table.features(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) -
                 s.mean[static_cast<std::size_t>(j)]) /
                s.scale[static_cast<std::size_t>(j)];
    }
    y(i) = table.labels[static_cast<std::size_t>(i)];
  }

  Rng rng(seed);
  auto glorot = [&](Eigen::Index fan_in, Eigen::Index fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    return rng.uniform(-limit, limit);
  };
  RowMatrix w1(h, d);
  for (Eigen::Index a = 0; a < h; ++a)
    for (Eigen::Index b = 0; b < d; ++b) w1(a, b) = glorot(d, h);
  Eigen::VectorXd b1(h);
  for (Eigen::Index a = 0; a < h; ++a) b1(a) = glorot(d, h);
  Eigen::VectorXd w2(h);
  for (Eigen::Index a = 0; a < h; ++a) w2(a) = glorot(h, 1);
  double b2 = glorot(h, 1);

  Adam opt_w1(h * d), opt_b1(h), opt_w2(h), opt_b2(1);
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<Eigen::Index>(std::min<std::size_t>(params.batch_size, order.size()));
  std::size_t t = 0;

  RowMatrix xb, hidden;
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index m = std::min(batch, n - start);
      xb.resize(m, d);
      Eigen::VectorXd yb(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        const auto r = static_cast<Eigen::Index>(order[static_cast<std::size_t>(start + i)]);
        xb.row(i) = x.row(r);
        yb(i) = y(r);
      }
      hidden = (xb * w1.transpose()).rowwise() + b1.transpose();
      hidden = hidden.cwiseMax(0.0);
      Eigen::VectorXd out = hidden * w2;
      out.array() += b2;
      Eigen::VectorXd delta(m);
      for (Eigen::Index i = 0; i < m; ++i) delta(i) = (logistic(out(i)) - yb(i)) / static_cast<double>(m);

      const double reg = params.l2 / static_cast<double>(m);
      Eigen::VectorXd g_w2 = hidden.transpose() * delta + reg * w2;
      const double g_b2 = delta.sum();
      RowMatrix back = delta * w2.transpose();
      back = back.cwiseProduct((hidden.array() > 0.0).cast<double>().matrix());
      RowMatrix g_w1 = back.transpose() * xb + reg * w1;
      Eigen::VectorXd g_b1 = back.colwise().sum().transpose();

      ++t;
      Eigen::Map<Eigen::VectorXd> w1_flat(w1.data(), h * d);
      Eigen::Map<const Eigen::VectorXd> g_w1_flat(g_w1.data(), h * d);
      opt_w1.step(w1_flat, g_w1_flat, params.learning_rate, t);
      opt_b1.step(b1, g_b1, params.learning_rate, t);
      opt_w2.step(w2, g_w2, params.learning_rate, t);
      Eigen::VectorXd b2v = Eigen::VectorXd::Constant(1, b2);
      opt_b2.step(b2v, Eigen::VectorXd::Constant(1, g_b2), params.learning_rate, t);
      b2 = b2v(0);
    }
  }

  MlpState state;
  state.input_mean = s.mean;
  state.input_scale = s.scale;
  state.hidden = params.hidden;
  state.w1.assign(w1.data(), w1.data() + h * d);
  state.b1.assign(b1.data(), b1.data() + h);
  state.w2.assign(w2.data(), w2.data() + h);
  state.b2 = b2;
  return state;
}

double mlp_proba(const MlpState& state, std::span<const double> x) {
  const std::size_t d = state.input_mean.size();
  double out = state.b2;
  for (std::size_t a = 0; a < state.hidden; ++a) {
    double z = state.b1[a];
    const double* w = state.w1.data() + a * d;
    for (std::size_t j = 0; j < d; ++j) z += w[j] * ((x[j] - state.input_mean[j]) / state.input_scale[j]);
    if (z > 0.0) out += state.w2[a] * z;
  }
  return logistic(out);
}

}  // namespace attrition::detail
