#include "attrition/resample.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "attrition/error.hpp"
#include "attrition/neighbors.hpp"
#include "attrition/rng.hpp"

namespace attrition {
namespace {

struct ClassLayout {
  int minority = 1;
  std::vector<std::size_t> minority_rows;
  std::size_t deficit = 0;
};

ClassLayout layout_of(const EncodedTable& table) {
  const auto counts = table.class_counts();
  if (counts[0] == 0 || counts[1] == 0) {
    throw DataError("resampling needs both classes present");
  }
  ClassLayout layout;
  layout.minority = counts[1] <= counts[0] ? 1 : 0;
  layout.deficit = counts[1 - layout.minority] - counts[layout.minority];
  for (std::size_t i = 0; i < table.n_rows(); ++i) {
    if (table.labels[i] == layout.minority) layout.minority_rows.push_back(i);
  }
  return layout;
}

void require_neighbors(const ClassLayout& layout, std::size_t k) {
  if (k == 0) throw ArgumentError("neighbor count must be positive");
  if (layout.minority_rows.size() < k + 1) {
    throw ArgumentError("minority class has " + std::to_string(layout.minority_rows.size()) +
                        " rows, needs at least k+1 = " + std::to_string(k + 1));
  }
}

void append_synthetic(EncodedTable& out, const EncodedTable& src, std::size_t base,
                      std::size_t neighbor, double u, int label) {
  const auto x = src.row(base);
  const auto x_nn = src.row(neighbor);
  std::vector<double> synth(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    synth[j] = x[j] + u * (x_nn[j] - x[j]);
    if (src.column_kinds[j] == ColumnKind::categorical) synth[j] = std::round(synth[j]);
  }
  out.features.append_row(synth);
  out.labels.push_back(label);
}

Resampled finish(EncodedTable table, ResampleMethod method, std::size_t synthetic) {
  Resampled out{std::move(table), {}};
  out.report.method = method;
  out.report.synthetic_count = synthetic;
  out.report.final_class_counts = out.table.class_counts();
  return out;
}

// Uniform base-row selection shared by SMOTE and the degenerate ADASYN case.
std::size_t smote_fill(EncodedTable& out, const EncodedTable& table, const ClassLayout& layout,
                       const NeighborLists& nn, std::size_t k, Rng& rng) {
  for (std::size_t s = 0; s < layout.deficit; ++s) {
    const std::size_t m = rng.below(layout.minority_rows.size());
    const std::size_t neighbor = nn.of(m)[rng.below(k)];
    const double u = rng.uniform();
    append_synthetic(out, table, layout.minority_rows[m], neighbor, u, layout.minority);
  }
  return layout.deficit;
}

}  // namespace

std::string to_string(ResampleMethod method) {
  switch (method) {
    case ResampleMethod::smote: return "SMOTE";
    case ResampleMethod::adasyn: return "ADASYN";
    case ResampleMethod::smote_tomek: return "SMOTE_TOMEK";
  }
  return "?";
}

ResampleMethod parse_resample_method(const std::string& text) {
  std::string t;
  for (char c : text) t.push_back(c == '-' || c == '+' ? '_' : static_cast<char>(std::tolower(c)));
  if (t == "smote") return ResampleMethod::smote;
  if (t == "adasyn") return ResampleMethod::adasyn;
  if (t == "smote_tomek" || t == "smotetomek") return ResampleMethod::smote_tomek;
  throw ArgumentError("unknown resampling method '" + text + "'");
}

Resampled smote(const EncodedTable& table, std::size_t k, std::uint64_t seed) {
  const ClassLayout layout = layout_of(table);
  if (layout.deficit == 0) return finish(table, ResampleMethod::smote, 0);
  require_neighbors(layout, k);

  const NeighborLists nn =
      nearest_neighbors(table.features, layout.minority_rows, layout.minority_rows, k);
  EncodedTable out = table;
  out.features.reserve_rows(table.n_rows() + layout.deficit);
  Rng rng(seed);
  const std::size_t made = smote_fill(out, table, layout, nn, k, rng);
  return finish(std::move(out), ResampleMethod::smote, made);
}

Resampled adasyn(const EncodedTable& table, std::size_t k, std::uint64_t seed) {
  const ClassLayout layout = layout_of(table);
  if (layout.deficit == 0) return finish(table, ResampleMethod::adasyn, 0);
  require_neighbors(layout, k);

  std::vector<std::size_t> all(table.n_rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const NeighborLists density = nearest_neighbors(table.features, layout.minority_rows, all, k);
  const NeighborLists nn =
      nearest_neighbors(table.features, layout.minority_rows, layout.minority_rows, k);

  const std::size_t m = layout.minority_rows.size();
  std::vector<double> ratio(m, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t majority = 0;
    for (std::size_t j : density.of(i)) majority += table.labels[j] != layout.minority;
    ratio[i] = static_cast<double>(majority) / static_cast<double>(k);
    total += ratio[i];
  }

  EncodedTable out = table;
  Rng rng(seed);
  if (total == 0.0) {
    const std::size_t made = smote_fill(out, table, layout, nn, k, rng);
    Resampled res = finish(std::move(out), ResampleMethod::adasyn, made);
    res.report.warning =
        "every minority row has an all-minority neighborhood; used uniform SMOTE allocation";
    return res;
  }

  std::size_t made = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double share = ratio[i] / total * static_cast<double>(layout.deficit);
    const auto g = static_cast<std::size_t>(std::nearbyint(share));
    for (std::size_t s = 0; s < g; ++s) {
      const std::size_t neighbor = nn.of(i)[rng.below(k)];
      const double u = rng.uniform();
      append_synthetic(out, table, layout.minority_rows[i], neighbor, u, layout.minority);
    }
    made += g;
  }
  return finish(std::move(out), ResampleMethod::adasyn, made);
}

std::vector<RowPair> tomek_links(const EncodedTable& table) {
  const auto counts = table.class_counts();
  std::vector<RowPair> links;
  if (counts[0] == 0 || counts[1] == 0 || table.n_rows() < 2) return links;
  std::vector<std::size_t> all(table.n_rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const NeighborLists nn = nearest_neighbors(table.features, all, all, 1);
  for (std::size_t a = 0; a < table.n_rows(); ++a) {
    const std::size_t b = nn.of(a)[0];
    if (a < b && nn.of(b)[0] == a && table.labels[a] != table.labels[b]) links.emplace_back(a, b);
  }
  return links;
}

Resampled smote_tomek(const EncodedTable& table, std::size_t k, std::uint64_t seed) {
  Resampled over = smote(table, k, seed);
  const auto links = tomek_links(over.table);
  std::vector<bool> removed(over.table.n_rows(), false);
  for (const auto& [a, b] : links) removed[a] = removed[b] = true;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < removed.size(); ++i) {
    if (!removed[i]) keep.push_back(i);
  }
  Resampled out = finish(over.table.select_rows(keep), ResampleMethod::smote_tomek,
                         over.report.synthetic_count);
  out.report.removed_count = over.table.n_rows() - keep.size();
  return out;
}

Resampled resample(const EncodedTable& table, ResampleMethod method, std::size_t k,
                   std::uint64_t seed) {
  switch (method) {
    case ResampleMethod::smote: return smote(table, k, seed);
    case ResampleMethod::adasyn: return adasyn(table, k, seed);
    case ResampleMethod::smote_tomek: return smote_tomek(table, k, seed);
  }
  throw ArgumentError("unknown resampling method");
}

}  // namespace attrition
