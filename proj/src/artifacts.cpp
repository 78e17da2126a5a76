#include "attrition/artifacts.hpp"

#include <fstream>

#include "attrition/error.hpp"

namespace attrition {

using nlohmann::json;

json codebook_to_json(const CategoryCodebook& codebook) {
  json cols = json::array();
  for (const auto& c : codebook.columns()) {
    cols.push_back({{"name", c.name}, {"categories", c.categories}});
  }
  return cols;
}

CategoryCodebook codebook_from_json(const json& doc) {
  CategoryCodebook cb;
  for (const auto& c : doc) {
    cb.add_column(c.at("name").get<std::string>(),
                  c.at("categories").get<std::vector<std::string>>());
  }
  return cb;
}

json matrix_to_json(const Matrix& m, const std::vector<std::string>& names) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  }
  return {{"feature_names", names}, {"rows", rows}};
}

Matrix matrix_from_json(const json& doc, const std::vector<std::string>& names) {
  if (doc.at("feature_names").get<std::vector<std::string>>() != names) {
    throw ArtifactError("feature names do not match the model");
  }
  Matrix m;
  for (const auto& r : doc.at("rows")) {
    const auto v = r.get<std::vector<double>>();
    if (v.size() != names.size()) throw ArtifactError("row width does not match feature count");
    m.append_row(v);
  }
  return m;
}

json table_to_json(const EncodedTable& table) {
  std::vector<std::string> kinds;
  for (auto k : table.column_kinds) kinds.push_back(k == ColumnKind::numeric ? "numeric" : "categorical");
  json doc = matrix_to_json(table.features, table.feature_names);
  doc["column_kinds"] = kinds;
  doc["labels"] = table.labels;
  return doc;
}

EncodedTable table_from_json(const json& doc) {
  EncodedTable t;
  t.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
  for (const auto& k : doc.at("column_kinds").get<std::vector<std::string>>()) {
    if (k == "numeric") t.column_kinds.push_back(ColumnKind::numeric);
    else if (k == "categorical") t.column_kinds.push_back(ColumnKind::categorical);
    else throw ArtifactError("unknown column kind '" + k + "'");
  }
  t.features = matrix_from_json(doc, t.feature_names);
  if (t.features.rows() == 0) t.features = Matrix(0, t.feature_names.size());
  t.labels = doc.at("labels").get<std::vector<int>>();
  try {
    t.validate();
  } catch (const DataError& e) {
    throw ArtifactError(e.what());
  }
  return t;
}

json weights_to_json(const WeightMap& weights) {
  json doc = json::object();
  for (const auto& [k, v] : weights) doc[k] = v;
  return doc;
}

WeightMap weights_from_json(const json& doc) {
  WeightMap w;
  for (const auto& item : doc.items()) {
    const double v = item.value().get<double>();
    if (!(v > 0.0)) throw ArtifactError("non-positive weight for " + item.key());
    w[item.key()] = v;
  }
  return w;
}

json wrap_artifact(const std::string& format, json data) {
  return {{"format", format}, {"version", kArtifactVersion}, {"data", std::move(data)}};
}

json unwrap_artifact(const json& doc, const std::string& format) {
  if (!doc.is_object() || !doc.contains("format") || doc["format"] != format) {
    throw ArtifactError("expected a '" + format + "' artifact");
  }
  if (doc.value("version", -1) != kArtifactVersion) {
    throw ArtifactError("unsupported " + format + " version");
  }
  return doc.at("data");
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactError("cannot write " + path.string());
  out << doc.dump(1) << '\n';
  if (!out) throw ArtifactError("write failed for " + path.string());
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError(path.string() + ": cannot open");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ArtifactError(path.string() + ": " + e.what());
  }
}

PipelineArtifacts load_pipeline_artifacts(const std::filesystem::path& dir) {
  PipelineArtifacts a;
  a.model = load_model(dir / kModelFile);
  const auto guarded = [&](const char* file, auto&& body) {
    const auto path = dir / file;
    try {
      body(read_json_file(path));
    } catch (const ArtifactError& e) {
      const std::string what = e.what();
      if (what.rfind(path.string(), 0) == 0) throw;
      throw ArtifactError(path.string() + ": " + what);
    } catch (const std::exception& e) {
      throw ArtifactError(path.string() + ": " + e.what());
    }
  };
  guarded(kCodebookFile, [&](const json& doc) {
    a.codebook = codebook_from_json(unwrap_artifact(doc, "attrition-codebook"));
  });
  guarded(kBackgroundFile, [&](const json& doc) {
    a.background = matrix_from_json(unwrap_artifact(doc, "attrition-background"),
                                    a.model.feature_names);
    if (a.background.rows() == 0) throw ArtifactError("empty background set");
  });
  guarded(kTestSetFile, [&](const json& doc) {
    a.test = table_from_json(unwrap_artifact(doc, "attrition-table"));
    if (a.test.feature_names != a.model.feature_names) {
      throw ArtifactError("feature names do not match the model");
    }
  });
  guarded(kPipelineFile, [&](const json& doc) {
    a.pipeline = unwrap_artifact(doc, "attrition-pipeline");
    a.weights = weights_from_json(a.pipeline.at("applied_weights"));
    const auto& ex = a.pipeline.at("explain");
    a.explain.kernel_samples = ex.at("kernel_samples").get<std::size_t>();
    a.explain.seed = ex.at("seed").get<std::uint64_t>();
  });
  for (const auto& c : a.codebook.columns()) {
    if (std::find(a.model.feature_names.begin(), a.model.feature_names.end(), c.name) ==
        a.model.feature_names.end()) {
      throw ArtifactError((dir / kCodebookFile).string() + ": column '" + c.name +
                          "' is not a model feature");
    }
  }
  for (std::size_t j = 0; j < a.test.column_kinds.size(); ++j) {
    if (a.test.column_kinds[j] == ColumnKind::categorical && !a.codebook.find(a.test.feature_names[j])) {
      throw ArtifactError((dir / kCodebookFile).string() + ": no categories for '" +
                          a.test.feature_names[j] + "'");
    }
  }
  return a;
}

}  // namespace attrition
