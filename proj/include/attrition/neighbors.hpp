#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "attrition/matrix.hpp"

namespace attrition {

/// Result of a k-nearest-neighbor query: for query q, the neighbors are
/// indices[q * k .. q * k + k), sorted by (squared distance, row index).
struct NeighborLists {
  std::size_t k = 0;
  std::vector<std::size_t> indices;

  std::span<const std::size_t> of(std::size_t query) const {
    return {indices.data() + query * k, k};
  }
  bool operator==(const NeighborLists&) const = default;
};

double squared_distance(std::span<const double> a, std::span<const double> b);

/// For every row in `queries`, the k nearest rows among `candidates`
/// (both are row indices into `points`), never returning the query row
/// itself. Ties go to the lower row index. Requires k <= candidates.size()
/// minus one if a query also appears among the candidates.
NeighborLists nearest_neighbors(const Matrix& points, std::span<const std::size_t> queries,
                                std::span<const std::size_t> candidates, std::size_t k);

/// Single-threaded reference for nearest_neighbors; results are identical.
NeighborLists nearest_neighbors_serial(const Matrix& points, std::span<const std::size_t> queries,
                                       std::span<const std::size_t> candidates, std::size_t k);

}  // namespace attrition
