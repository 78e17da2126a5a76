#pragma once

#include <span>
#include <vector>

namespace attrition {

/// Binary decision tree in flat form; x[feature] <= threshold goes left.
/// Leaves carry feature == -1 and their output in `value`.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;

  int leaf_index(std::span<const double> x) const {
    int n = 0;
    while (!nodes[n].is_leaf()) {
      const auto& node = nodes[n];
      n = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    }
    return n;
  }
  double predict(std::span<const double> x) const { return nodes[leaf_index(x)].value; }

  std::size_t n_leaves() const {
    std::size_t c = 0;
    for (const auto& n : nodes) c += n.is_leaf();
    return c;
  }
  int depth() const { return depth_from(0); }

  bool operator==(const Tree&) const = default;

 private:
  int depth_from(int n) const {
    if (nodes[n].is_leaf()) return 0;
    const int l = depth_from(nodes[n].left);
    const int r = depth_from(nodes[n].right);
    return 1 + (l > r ? l : r);
  }
};

}  // namespace attrition
