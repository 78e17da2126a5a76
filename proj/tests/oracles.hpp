#pragma once

// Brute-force references for the resampling code, shared by the unit tests
// and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "attrition/resample.hpp"
#include "support.hpp"

namespace attrition::oracles {

// Brute-force nearest neighbour with the (distance, index) order.
inline std::vector<std::size_t> brute_knn(const Matrix& x, std::size_t q, const std::vector<std::size_t>& cand,
                                          std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (auto c : cand) {
    if (c == q) continue;
    double s = 0;
    for (std::size_t j = 0; j < x.cols(); ++j) s += (x(q, j) - x(c, j)) * (x(q, j) - x(c, j));
    d.emplace_back(s, c);
  }
  std::sort(d.begin(), d.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(d[i].second);
  return out;
}

inline std::vector<RowPair> brute_tomek(const EncodedTable& t) {
  const std::size_t n = t.n_rows();
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> nn(n);
  for (std::size_t i = 0; i < n; ++i) nn[i] = brute_knn(t.features, i, all, 1)[0];
  std::vector<RowPair> out;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (nn[a] == b && nn[b] == a && t.labels[a] != t.labels[b]) out.emplace_back(a, b);
    }
  }
  return out;
}

inline EncodedTable toy_2d(Rng& rng, std::size_t majority, std::size_t minority) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < majority; ++i) {
    rows.push_back({rng.normal(), rng.normal()});
    labels.push_back(0);
  }
  for (std::size_t i = 0; i < minority; ++i) {
    rows.push_back({2 + 0.7 * rng.normal(), 1 + 0.7 * rng.normal()});
    labels.push_back(1);
  }
  return fixtures::make_table(rows, labels);
}

// True if p lies on the segment from a to one of a's k nearest minority
// neighbours, for some original minority row a.
inline bool on_some_segment(std::span<const double> p, const EncodedTable& t, const std::vector<std::size_t>& minority,
                            std::size_t k, double tol) {
  for (auto a : minority) {
    for (auto b : brute_knn(t.features, a, minority, k)) {
      const auto xa = t.row(a), xb = t.row(b);
      double num = 0, den = 0;
      for (std::size_t j = 0; j < p.size(); ++j) {
        num += (p[j] - xa[j]) * (xb[j] - xa[j]);
        den += (xb[j] - xa[j]) * (xb[j] - xa[j]);
      }
      const double u = den > 0 ? num / den : 0.0;
      if (u < -tol || u > 1 + tol) continue;
      double err = 0;
      for (std::size_t j = 0; j < p.size(); ++j) err = std::max(err, std::abs(xa[j] + u * (xb[j] - xa[j]) - p[j]));
      if (err <= tol) return true;
    }
  }
  return false;
}

}  // namespace attrition::oracles
