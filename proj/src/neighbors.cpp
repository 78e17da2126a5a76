#include "attrition/neighbors.hpp"

#include <algorithm>
#include <cstddef>
#include <utility>

#include "attrition/error.hpp"

namespace attrition {
namespace {

using Candidate = std::pair<double, std::size_t>;

void check_k(std::size_t k, std::size_t n_candidates) {
  if (k == 0) throw ArgumentError("neighbor count must be positive");
  if (k > n_candidates) throw ArgumentError("neighbor count exceeds candidate count");
}

// Bounded insertion into a sorted list of at most k entries.
void query_one(const Matrix& points, std::size_t q, std::span<const std::size_t> candidates,
               std::size_t k, std::vector<Candidate>& best, std::size_t* out) {
  best.clear();
  const auto x = points.row(q);
  for (std::size_t c : candidates) {
    if (c == q) continue;
    const Candidate cand{squared_distance(x, points.row(c)), c};
    if (best.size() == k && !(cand < best.back())) continue;
    auto pos = std::upper_bound(best.begin(), best.end(), cand);
    best.insert(pos, cand);
    if (best.size() > k) best.pop_back();
  }
  if (best.size() < k) throw ArgumentError("not enough neighbors besides the query row");
  for (std::size_t i = 0; i < k; ++i) out[i] = best[i].second;
}

}  // namespace

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

NeighborLists nearest_neighbors_serial(const Matrix& points, std::span<const std::size_t> queries,
                                       std::span<const std::size_t> candidates, std::size_t k) {
  check_k(k, candidates.size());
  NeighborLists out{k, std::vector<std::size_t>(queries.size() * k)};
  std::vector<Candidate> best;
  best.reserve(k + 1);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    query_one(points, queries[q], candidates, k, best, out.indices.data() + q * k);
  }
  return out;
}

NeighborLists nearest_neighbors(const Matrix& points, std::span<const std::size_t> queries,
                                std::span<const std::size_t> candidates, std::size_t k) {
  check_k(k, candidates.size());
  NeighborLists out{k, std::vector<std::size_t>(queries.size() * k)};
  const auto n = static_cast<std::ptrdiff_t>(queries.size());
  bool short_list = false;
#pragma omp parallel
  {
    std::vector<Candidate> best;
    best.reserve(k + 1);
#pragma omp for schedule(static)
    for (std::ptrdiff_t q = 0; q < n; ++q) {
      try {
        query_one(points, queries[q], candidates, k, best, out.indices.data() + q * k);
      } catch (const ArgumentError&) {
#pragma omp atomic write
        short_list = true;
      }
    }
  }
  if (short_list) throw ArgumentError("not enough neighbors besides the query row");
  return out;
}

}  // namespace attrition
