#pragma once

#include <filesystem>
#include <string>

#include "attrition/dataset.hpp"
#include "attrition/explain.hpp"
#include "attrition/featureweight.hpp"
#include "attrition/models.hpp"
#include "json.hpp"

namespace attrition {

// File names inside an output directory.
inline constexpr const char* kModelFile = "model.json";
inline constexpr const char* kCodebookFile = "codebook.json";
inline constexpr const char* kBackgroundFile = "background.json";
inline constexpr const char* kTestSetFile = "test_set.json";
inline constexpr const char* kTrainSetFile = "train_processed.json";
inline constexpr const char* kPipelineFile = "pipeline.json";
inline constexpr const char* kReportFile = "report.txt";
inline constexpr const char* kReportJsonFile = "report.json";

inline constexpr int kArtifactVersion = 1;

nlohmann::json codebook_to_json(const CategoryCodebook& codebook);
CategoryCodebook codebook_from_json(const nlohmann::json& doc);

nlohmann::json table_to_json(const EncodedTable& table);
EncodedTable table_from_json(const nlohmann::json& doc);

nlohmann::json matrix_to_json(const Matrix& m, const std::vector<std::string>& names);
Matrix matrix_from_json(const nlohmann::json& doc, const std::vector<std::string>& names);

nlohmann::json weights_to_json(const WeightMap& weights);
WeightMap weights_from_json(const nlohmann::json& doc);

/// Wraps a payload as {"format", "version", "data"}.
nlohmann::json wrap_artifact(const std::string& format, nlohmann::json data);
/// Checks the envelope and returns the payload; ArtifactError otherwise.
nlohmann::json unwrap_artifact(const nlohmann::json& doc, const std::string& format);

/// Writes `doc` with one-space indentation and a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);
/// ArtifactError naming the file on I/O or parse failure.
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Everything the explanation service and the evaluate command need.
struct PipelineArtifacts {
  TrainedModel model;
  CategoryCodebook codebook;
  Matrix background;         ///< unweighted encoded rows
  EncodedTable test;         ///< unweighted
  WeightMap weights;         ///< applied at prediction time
  ExplainOptions explain;
  nlohmann::json pipeline;   ///< the whole pipeline.json payload
};

/// Fails fast with the offending file named in the ArtifactError.
PipelineArtifacts load_pipeline_artifacts(const std::filesystem::path& dir);

}  // namespace attrition
