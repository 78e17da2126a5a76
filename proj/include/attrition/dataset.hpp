#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "attrition/matrix.hpp"

namespace attrition {

enum class ColumnKind { numeric, categorical };

using Cell = std::variant<double, std::string>;

/// CSV contents with per-column type inference applied: a column whose
/// every cell parses as a number holds doubles, any other column holds text.
struct RawTable {
  std::vector<std::string> column_names;
  std::vector<ColumnKind> column_kinds;
  std::vector<std::vector<Cell>> rows;

  std::size_t n_rows() const { return rows.size(); }
  std::optional<std::size_t> column_index(const std::string& name) const;
};

/// Ordinal code assignment for every categorical column, in first-appearance
/// order. Codes are consecutive from zero.
class CategoryCodebook {
 public:
  struct Column {
    std::string name;
    std::vector<std::string> categories;
  };

  void add_column(std::string name, std::vector<std::string> categories);

  bool empty() const { return columns_.empty(); }
  const std::vector<Column>& columns() const { return columns_; }
  const Column* find(const std::string& name) const;

  /// Throws DataError for an unknown column or category.
  int encode(const std::string& column, const std::string& text) const;
  const std::string& decode(const std::string& column, int code) const;

  bool operator==(const CategoryCodebook&) const = default;

 private:
  std::vector<Column> columns_;
};

/// Numeric feature matrix plus binary labels (1 = attrition).
struct EncodedTable {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::string> feature_names;
  std::vector<ColumnKind> column_kinds;

  std::size_t n_rows() const { return features.rows(); }
  std::size_t n_features() const { return feature_names.size(); }
  std::span<const double> row(std::size_t i) const { return features.row(i); }

  std::optional<std::size_t> feature_index(const std::string& name) const;
  /// Same as feature_index but throws ArgumentError naming the feature.
  std::size_t require_feature(const std::string& name) const;

  /// {count of label 0, count of label 1}
  std::array<std::size_t, 2> class_counts() const;

  /// Rows in the given order; metadata copied.
  EncodedTable select_rows(std::span<const std::size_t> indices) const;
  /// Same columns, no rows.
  EncodedTable empty_like() const;

  /// Throws DataError if the shape invariants are broken.
  void validate() const;

  bool operator==(const EncodedTable&) const = default;
};

struct PreprocessOptions {
  std::vector<std::string> drop{"Over18", "EmployeeCount", "EmployeeNumber", "StandardHours"};
  std::string target = "Attrition";
  std::string positive = "Yes";
  std::string negative = "No";
  std::size_t max_categories = 64;
};

struct Preprocessed {
  EncodedTable table;
  CategoryCodebook codebook;
};

struct DataSplit {
  EncodedTable train;
  EncodedTable test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  std::uint64_t seed = 0;
};

struct CorrelationMatrix {
  std::vector<std::string> names;
  Matrix values;
};

/// Parses a comma-delimited file with a header row. Errors (I/O, ragged
/// rows, empty file) are DataError with the offending line number.
RawTable load_csv(const std::filesystem::path& path);
RawTable parse_csv(std::string_view text);

/// Drops the listed columns, extracts the target as 0/1 labels and ordinal
/// encodes every remaining text column.
Preprocessed preprocess(const RawTable& raw, const PreprocessOptions& options = {});

/// Names of columns (other than the target) whose values are all equal.
std::vector<std::string> constant_columns(const RawTable& raw, const std::string& target);

/// Stratified split. The test set receives round(test_ratio * n) rows,
/// apportioned to the classes by largest remainder. Rows keep their source
/// order within each side.
DataSplit train_test_split(const EncodedTable& table, double test_ratio, std::uint64_t seed);

/// Pearson correlation of every pair of feature columns.
CorrelationMatrix correlation_matrix(const EncodedTable& table);

}  // namespace attrition
