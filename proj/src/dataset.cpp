#include "attrition/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "attrition/error.hpp"
#include "attrition/rng.hpp"

namespace attrition {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

}  // namespace

std::optional<std::size_t> RawTable::column_index(const std::string& name) const {
  const auto it = std::find(column_names.begin(), column_names.end(), name);
  if (it == column_names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - column_names.begin());
}

void CategoryCodebook::add_column(std::string name, std::vector<std::string> categories) {
  columns_.push_back({std::move(name), std::move(categories)});
}

const CategoryCodebook::Column* CategoryCodebook::find(const std::string& name) const {
  for (const auto& c : columns_) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

int CategoryCodebook::encode(const std::string& column, const std::string& text) const {
  const Column* c = find(column);
  if (c == nullptr) throw DataError("no codebook entry for column '" + column + "'");
  const auto it = std::find(c->categories.begin(), c->categories.end(), text);
  if (it == c->categories.end()) {
    throw DataError("unknown category '" + text + "' for column '" + column + "'");
  }
  return static_cast<int>(it - c->categories.begin());
}

const std::string& CategoryCodebook::decode(const std::string& column, int code) const {
  const Column* c = find(column);
  if (c == nullptr) throw DataError("no codebook entry for column '" + column + "'");
  if (code < 0 || static_cast<std::size_t>(code) >= c->categories.size()) {
    throw DataError("code " + std::to_string(code) + " out of range for column '" + column +
                    "'");
  }
  return c->categories[static_cast<std::size_t>(code)];
}

std::optional<std::size_t> EncodedTable::feature_index(const std::string& name) const {
  const auto it = std::find(feature_names.begin(), feature_names.end(), name);
  if (it == feature_names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - feature_names.begin());
}

std::size_t EncodedTable::require_feature(const std::string& name) const {
  const auto idx = feature_index(name);
  if (!idx) throw ArgumentError("unknown feature '" + name + "'");
  return *idx;
}

std::array<std::size_t, 2> EncodedTable::class_counts() const {
  std::array<std::size_t, 2> counts{0, 0};
  for (int y : labels) ++counts[y == 1 ? 1 : 0];
  return counts;
}

EncodedTable EncodedTable::select_rows(std::span<const std::size_t> indices) const {
  EncodedTable out = empty_like();
  out.features = Matrix(indices.size(), n_features());
  out.labels.resize(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.features.row(i).begin());
    out.labels[i] = labels[indices[i]];
  }
  return out;
}

EncodedTable EncodedTable::empty_like() const {
  EncodedTable out;
  out.features = Matrix(0, n_features());
  out.feature_names = feature_names;
  out.column_kinds = column_kinds;
  return out;
}

void EncodedTable::validate() const {
  if (features.rows() != labels.size()) {
    throw DataError("feature rows (" + std::to_string(features.rows()) +
                    ") differ from label count (" + std::to_string(labels.size()) + ")");
  }
  if (features.rows() > 0 && features.cols() != feature_names.size()) {
    throw DataError("feature matrix width differs from feature name count");
  }
  if (column_kinds.size() != feature_names.size()) {
    throw DataError("column kind count differs from feature name count");
  }
  std::vector<std::string> sorted = feature_names;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw DataError("duplicate feature names");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw DataError("labels must be 0 or 1");
  }
}

RawTable parse_csv(std::string_view text) {
  RawTable table;
  std::vector<std::vector<std::string_view>> cells;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (trim(line).empty()) {
      if (pos > text.size()) break;
      continue;
    }
    auto parts = split_line(line);
    if (!have_header) {
      if (line_no == 1 && line.size() >= 3 && line.substr(0, 3) == "\xEF\xBB\xBF") {
        parts.front().remove_prefix(3);
      }
      for (auto p : parts) table.column_names.emplace_back(p);
      have_header = true;
      continue;
    }
    if (parts.size() != table.column_names.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(table.column_names.size()) + " cells, found " +
                      std::to_string(parts.size()));
    }
    for (std::size_t c = 0; c < parts.size(); ++c) {
      if (parts[c].empty()) {
        throw DataError("line " + std::to_string(line_no) + ": missing value in column '" +
                        table.column_names[c] + "'");
      }
    }
    cells.push_back(std::move(parts));
  }
  if (!have_header) throw DataError("line 1: empty file, no header row");

  const std::size_t n_cols = table.column_names.size();
  table.column_kinds.assign(n_cols, ColumnKind::numeric);
  for (std::size_t c = 0; c < n_cols; ++c) {
    for (const auto& r : cells) {
      if (!parse_number(r[c])) {
        table.column_kinds[c] = ColumnKind::categorical;
        break;
      }
    }
  }
  table.rows.reserve(cells.size());
  for (const auto& r : cells) {
    std::vector<Cell> row;
    row.reserve(n_cols);
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (table.column_kinds[c] == ColumnKind::numeric) {
        row.emplace_back(*parse_number(r[c]));
      } else {
        row.emplace_back(std::string(r[c]));
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

RawTable load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("line 0: cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw DataError("line 0: read failure on '" + path.string() + "'");
  return parse_csv(buffer.str());
}

std::vector<std::string> constant_columns(const RawTable& raw, const std::string& target) {
  std::vector<std::string> out;
  if (raw.rows.empty()) return out;
  for (std::size_t c = 0; c < raw.column_names.size(); ++c) {
    if (raw.column_names[c] == target) continue;
    const Cell& first = raw.rows.front()[c];
    const bool constant = std::all_of(raw.rows.begin(), raw.rows.end(),
                                      [&](const auto& r) { return r[c] == first; });
    if (constant) out.push_back(raw.column_names[c]);
  }
  return out;
}

Preprocessed preprocess(const RawTable& raw, const PreprocessOptions& options) {
  const auto target_idx = raw.column_index(options.target);
  if (!target_idx) throw DataError("target column '" + options.target + "' not found");
  std::vector<bool> dropped(raw.column_names.size(), false);
  for (const auto& name : options.drop) {
    const auto idx = raw.column_index(name);
    if (!idx) throw DataError("drop list names unknown column '" + name + "'");
    if (*idx == *target_idx) throw DataError("cannot drop the target column");
    dropped[*idx] = true;
  }

  Preprocessed out;
  EncodedTable& table = out.table;
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < raw.column_names.size(); ++c) {
    if (c == *target_idx || dropped[c]) continue;
    keep.push_back(c);
    table.feature_names.push_back(raw.column_names[c]);
    table.column_kinds.push_back(raw.column_kinds[c]);
  }

  std::vector<std::unordered_map<std::string, int>> codes(keep.size());
  std::vector<std::vector<std::string>> categories(keep.size());
  table.features = Matrix(raw.n_rows(), keep.size());
  table.labels.resize(raw.n_rows());
  for (std::size_t r = 0; r < raw.n_rows(); ++r) {
    const auto& row = raw.rows[r];
    const auto* label = std::get_if<std::string>(&row[*target_idx]);
    if (label == nullptr || (*label != options.positive && *label != options.negative)) {
      throw DataError("row " + std::to_string(r + 1) + ": target must be '" + options.positive +
                      "' or '" + options.negative + "'");
    }
    table.labels[r] = (*label == options.positive) ? 1 : 0;
    for (std::size_t j = 0; j < keep.size(); ++j) {
      const Cell& cell = row[keep[j]];
      if (table.column_kinds[j] == ColumnKind::numeric) {
        table.features(r, j) = std::get<double>(cell);
        continue;
      }
      const auto& text = std::get<std::string>(cell);
      auto [it, inserted] = codes[j].try_emplace(text, static_cast<int>(categories[j].size()));
      if (inserted) {
        categories[j].push_back(text);
        if (categories[j].size() > options.max_categories) {
          throw DataError("column '" + table.feature_names[j] + "' exceeds " +
                          std::to_string(options.max_categories) + " categories");
        }
      }
      table.features(r, j) = it->second;
    }
  }
  for (std::size_t j = 0; j < keep.size(); ++j) {
    if (table.column_kinds[j] == ColumnKind::categorical) {
      out.codebook.add_column(table.feature_names[j], std::move(categories[j]));
    }
  }
  table.validate();
  return out;
}

DataSplit train_test_split(const EncodedTable& table, double test_ratio, std::uint64_t seed) {
  if (!(test_ratio > 0.0 && test_ratio < 1.0)) {
    throw ArgumentError("test ratio must lie in (0, 1)");
  }
  const auto counts = table.class_counts();
  if (counts[0] < 2 || counts[1] < 2) {
    throw ArgumentError("stratified split needs at least 2 rows per class");
  }
  const std::size_t n = table.n_rows();
  const auto total_test = static_cast<std::size_t>(std::llround(test_ratio * static_cast<double>(n)));

  // Largest-remainder apportionment of the test budget to the two classes.
  std::array<std::size_t, 2> quota{};
  std::array<double, 2> remainder{};
  std::size_t assigned = 0;
  for (int c = 0; c < 2; ++c) {
    const double exact = test_ratio * static_cast<double>(counts[c]);
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    remainder[c] = exact - std::floor(exact);
    assigned += quota[c];
  }
  while (assigned < total_test) {
    const int c = remainder[1] > remainder[0] ? 1 : 0;
    ++quota[c];
    remainder[c] = -1.0;
    ++assigned;
  }

  Rng rng(seed);
  std::vector<bool> is_test(n, false);
  for (int c = 0; c < 2; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      if (table.labels[i] == c) members.push_back(i);
    }
    rng.shuffle(std::span(members));
    for (std::size_t k = 0; k < quota[c]; ++k) is_test[members[k]] = true;
  }

  DataSplit split;
  split.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    (is_test[i] ? split.test_indices : split.train_indices).push_back(i);
  }
  split.train = table.select_rows(split.train_indices);
  split.test = table.select_rows(split.test_indices);
  return split;
}

CorrelationMatrix correlation_matrix(const EncodedTable& table) {
  const std::size_t d = table.n_features();
  const std::size_t n = table.n_rows();
  if (n < 2) throw DataError("correlation needs at least two rows");
  std::vector<std::vector<double>> centered(d);
  std::vector<double> norms(d);
  for (std::size_t j = 0; j < d; ++j) {
    auto col = table.features.column(j);
    const double mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double& v : col) {
      v -= mean;
      ss += v * v;
    }
    if (ss == 0.0) {
      throw DataError("column '" + table.feature_names[j] + "' has zero variance");
    }
    norms[j] = std::sqrt(ss);
    centered[j] = std::move(col);
  }
  CorrelationMatrix out{table.feature_names, Matrix(d, d)};
  for (std::size_t a = 0; a < d; ++a) {
    out.values(a, a) = 1.0;
    for (std::size_t b = a + 1; b < d; ++b) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += centered[a][i] * centered[b][i];
      const double r = std::clamp(dot / (norms[a] * norms[b]), -1.0, 1.0);
      out.values(a, b) = r;
      out.values(b, a) = r;
    }
  }
  return out;
}

}  // namespace attrition
