#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "attrition/dataset.hpp"

namespace attrition {

enum class ResampleMethod { smote, adasyn, smote_tomek };

std::string to_string(ResampleMethod method);
/// Accepts "smote", "adasyn", "smote_tomek" (or "smote-tomek").
ResampleMethod parse_resample_method(const std::string& text);

struct ResampleReport {
  ResampleMethod method = ResampleMethod::smote;
  std::size_t synthetic_count = 0;
  std::size_t removed_count = 0;
  std::array<std::size_t, 2> final_class_counts{0, 0};
  std::optional<std::string> warning;
};

struct Resampled {
  EncodedTable table;
  ResampleReport report;
};

using RowPair = std::pair<std::size_t, std::size_t>;

/// Oversamples the minority class to parity by interpolating between each
/// chosen minority row and one of its k nearest minority neighbors. The
/// input rows form a prefix of the output; categorical coordinates are
/// rounded to the nearest code.
Resampled smote(const EncodedTable& table, std::size_t k = 5, std::uint64_t seed = 0);

/// Adaptive variant: minority rows whose k-neighborhood (searched among all
/// rows) holds more majority rows receive proportionally more samples.
Resampled adasyn(const EncodedTable& table, std::size_t k = 5, std::uint64_t seed = 0);

/// Opposite-class mutual nearest-neighbor pairs (a < b), sorted by a.
std::vector<RowPair> tomek_links(const EncodedTable& table);

/// smote followed by removal of both endpoints of every Tomek link.
Resampled smote_tomek(const EncodedTable& table, std::size_t k = 5, std::uint64_t seed = 0);

Resampled resample(const EncodedTable& table, ResampleMethod method, std::size_t k,
                   std::uint64_t seed);

}  // namespace attrition
