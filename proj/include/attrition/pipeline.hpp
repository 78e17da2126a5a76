#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "attrition/artifacts.hpp"
#include "attrition/evaluate.hpp"
#include "json.hpp"

namespace attrition {

struct RunConfig {
  std::filesystem::path data;
  std::vector<std::string> drop = PreprocessOptions{}.drop;
  double test_ratio = 0.2;
  PipelineConfig pipeline;
  std::size_t background_size = 100;
  std::size_t kernel_samples = 512;
  std::filesystem::path out_dir = "out";
};

nlohmann::json run_config_to_json(const RunConfig& config);

/// Every number printed in a report.
struct RunSummary {
  std::string data_name;  ///< file name only, so reports do not depend on the checkout path
  std::size_t n_rows = 0;
  std::size_t n_features = 0;
  std::array<std::size_t, 2> label_counts{0, 0};
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  PipelineFlags flags;
  std::uint64_t seed = 0;
  std::size_t folds = 0;
  std::size_t outliers_removed = 0;
  std::optional<ResampleReport> resample;
  WeightMap weights;
  std::size_t processed_rows = 0;
  std::array<std::size_t, 2> processed_counts{0, 0};
  std::vector<KindEvaluation> kinds;  ///< configuration order
  std::vector<std::vector<double>> fold_accuracies;
  ModelKind best_kind = ModelKind::RandomForest;
  double best_accuracy = 0.0;
};

std::string render_report_text(const RunSummary& summary);
nlohmann::json render_report_json(const RunSummary& summary);

/// Ingest, split, process, select, evaluate and persist every artifact
/// under config.out_dir (created if missing).
RunSummary run_pipeline(const RunConfig& config);

/// Recomputes the report from the artifacts in `dir` alone: cross-validation
/// from the processed training set, test metrics from the saved models.
RunSummary evaluate_artifacts(const std::filesystem::path& dir);

/// Writes the plot-data files into dir/plots from the saved artifacts.
void export_plots(const std::filesystem::path& dir);

/// Test row with the highest predicted attrition probability (lowest index
/// on ties).
std::size_t highest_risk_row(const Predictor& predictor, const EncodedTable& test);

}  // namespace attrition
