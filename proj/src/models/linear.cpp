#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "attrition/error.hpp"
#include "learners.hpp"
#include "spdlog/spdlog.h"

namespace attrition::detail {
namespace {

Eigen::MatrixXd standardized_design(const EncodedTable& table, const Standardizer& s) {
  const std::size_t n = table.n_rows(), d = table.n_features();
  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (table.features(i, j) - s.mean[j]) / s.scale[j];
    }
  }
  return x;
}

// Maps coefficients fitted on standardized inputs back to raw coordinates.
LinearState to_raw(const Eigen::VectorXd& w, double b, const Standardizer& s) {
  LinearState state;
  state.weights.resize(s.mean.size());
  state.bias = b;
  for (std::size_t j = 0; j < s.mean.size(); ++j) {
    state.weights[j] = w(static_cast<Eigen::Index>(j)) / s.scale[j];
    state.bias -= state.weights[j] * s.mean[j];
  }
  return state;
}

double penalized_loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                      double b, double l2) {
  const Eigen::VectorXd m = (x * w).array() + b;
  double total = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double z = y(i) > 0.5 ? m(i) : -m(i);
    total += z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
  }
  return total + 0.5 * l2 * w.squaredNorm();
}

}  // namespace

Standardizer standardizer_for(const Matrix& x) {
  Standardizer s;
  s.mean.assign(x.cols(), 0.0);
  s.scale.assign(x.cols(), 1.0);
  const double n = static_cast<double>(x.rows());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) sum += x(i, j);
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) ss += (x(i, j) - mean) * (x(i, j) - mean);
    const double sd = std::sqrt(ss / n);
    s.mean[j] = mean;
    s.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

// Penalized maximum likelihood by damped Newton iterations on standardized
// inputs; the intercept is not penalized.
LinearState fit_logistic(const EncodedTable& table, const LogisticParams& params) {
  const Standardizer s = standardizer_for(table.features);
  const Eigen::MatrixXd x = standardized_design(table, s);
  const auto n = x.rows();
  const auto d = x.cols();
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = table.labels[static_cast<std::size_t>(i)];

  // Augmented parameter vector: [w; b].
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  Eigen::MatrixXd xa(n, d + 1);
  xa.leftCols(d) = x;
  xa.col(d).setOnes();
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(d + 1, params.l2);
  penalty(d) = 0.0;

  bool converged = false;
  for (std::size_t iter = 0; iter < params.max_iterations; ++iter) {
    const Eigen::VectorXd m = xa * theta;
    Eigen::VectorXd p(n), wdiag(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p(i) = logistic(m(i));
      wdiag(i) = p(i) * (1.0 - p(i));
    }
    const Eigen::VectorXd grad = xa.transpose() * (p - y) + penalty.cwiseProduct(theta);
    if (grad.cwiseAbs().maxCoeff() / static_cast<double>(n) < params.tolerance) {
      converged = true;
      break;
    }
    Eigen::MatrixXd hess = xa.transpose() * wdiag.asDiagonal() * xa;
    hess.diagonal() += penalty;
    hess.diagonal().array() += 1e-10;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);

    const double current = penalized_loss(x, y, theta.head(d), theta(d), params.l2);
    double t = 1.0;
    Eigen::VectorXd candidate = theta - step;
    while (t > 1e-10 &&
           penalized_loss(x, y, candidate.head(d), candidate(d), params.l2) > current) {
      t *= 0.5;
      candidate = theta - t * step;
    }
    theta = candidate;
  }
  if (!converged) {
    spdlog::warn("LogisticRegression: gradient tolerance not reached in {} iterations",
                 params.max_iterations);
  }
  return to_raw(theta.head(d), theta(d), s);
}

// Full-batch Pegasos: lambda/2 |w|^2 + mean hinge, step 1/(lambda t), with
// the bias carried as an extra (penalized) constant input. The returned
// coefficients average the second half of the iterates.
LinearState fit_linear_svm(const EncodedTable& table, const SvmParams& params) {
  const Standardizer s = standardizer_for(table.features);
  const Eigen::MatrixXd x = standardized_design(table, s);
  const auto n = x.rows();
  const auto d = x.cols();
  Eigen::MatrixXd xa(n, d + 1);
  xa.leftCols(d) = x;
  xa.col(d).setOnes();
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = table.labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;

  const double lambda = 1.0 / (params.c * static_cast<double>(n));
  const double radius = 1.0 / std::sqrt(lambda);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(d + 1);
  std::size_t averaged = 0;
  const std::size_t burn_in = params.epochs / 2;
  for (std::size_t t = 1; t <= params.epochs; ++t) {
    const double eta = 1.0 / (lambda * static_cast<double>(t));
    const Eigen::VectorXd margin = (xa * w).cwiseProduct(y);
    Eigen::VectorXd sub = Eigen::VectorXd::Zero(d + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (margin(i) < 1.0) sub += y(i) * xa.row(i).transpose();
    }
    w = (1.0 - eta * lambda) * w + (eta / static_cast<double>(n)) * sub;
    const double norm = w.norm();
    if (norm > radius) w *= radius / norm;
    if (t > burn_in) {
      avg += w;
      ++averaged;
    }
  }
  avg /= static_cast<double>(std::max<std::size_t>(averaged, 1));
  return to_raw(avg.head(d), avg(d), s);
}

}  // namespace attrition::detail
