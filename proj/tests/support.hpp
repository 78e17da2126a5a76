#pragma once

// Shared fixtures for the unit tests and the acceptance binary.

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "attrition/dataset.hpp"
#include "attrition/rng.hpp"
#include "attrition/tree.hpp"

namespace attrition::fixtures {

inline std::filesystem::path data_dir() { return ATTRITION_DATA_DIR; }
inline std::filesystem::path ibm_csv() { return data_dir() / "ibm_hr_attrition.csv"; }
inline std::filesystem::path lexicon_tsv() { return data_dir() / "retention_lexicon.tsv"; }

/// Fresh directory under the system temp dir, removed by the destructor.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("attrition-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// All-numeric table from rows and labels.
inline EncodedTable make_table(const std::vector<std::vector<double>>& rows,
                               const std::vector<int>& labels) {
  EncodedTable t;
  const std::size_t m = rows.empty() ? 0 : rows[0].size();
  t.features = Matrix(0, m);
  for (const auto& r : rows) t.features.append_row(r);
  t.labels = labels;
  for (std::size_t j = 0; j < m; ++j) {
    t.feature_names.push_back("f" + std::to_string(j));
    t.column_kinds.push_back(ColumnKind::numeric);
  }
  return t;
}

/// Uniform random features; labels Bernoulli(positive_rate), forced to
/// contain both classes.
inline EncodedTable random_table(Rng& rng, std::size_t n, std::size_t m, double positive_rate,
                                 bool integer_grid = false) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(m));
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : rows[i]) v = integer_grid ? static_cast<double>(rng.below(5)) : rng.uniform(-1, 1);
    labels[i] = rng.uniform() < positive_rate ? 1 : 0;
  }
  if (n >= 2) {
    labels[0] = 0;
    labels[1] = 1;
  }
  return make_table(rows, labels);
}

/// Random binary tree over m features with at most `max_depth` levels.
/// Thresholds are drawn from the same range as random rows.
inline Tree random_tree(Rng& rng, std::size_t m, int max_depth) {
  Tree tree;
  struct Pending {
    int node;
    int depth;
  };
  tree.nodes.push_back({});
  std::vector<Pending> stack{{0, 0}};
  while (!stack.empty()) {
    const Pending p = stack.back();
    stack.pop_back();
    const bool split = p.depth < max_depth && (p.depth == 0 || rng.uniform() < 0.75);
    if (!split) {
      tree.nodes[p.node].value = rng.uniform(-2, 2);
      continue;
    }
    const int left = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes.push_back({});
    auto& node = tree.nodes[p.node];
    node.feature = static_cast<int>(rng.below(m));
    node.threshold = rng.uniform(-0.8, 0.8);
    node.left = left;
    node.right = left + 1;
    stack.push_back({left, p.depth + 1});
    stack.push_back({left + 1, p.depth + 1});
  }
  return tree;
}

inline Matrix random_matrix(Rng& rng, std::size_t n, std::size_t m) {
  Matrix out(n, m);
  for (auto& v : out.data()) v = rng.uniform(-1, 1);
  return out;
}

}  // namespace attrition::fixtures
