#include "attrition/pipeline.hpp"

#include <cstdio>
#include <fstream>

#include "attrition/error.hpp"
#include "attrition/rng.hpp"
#include "spdlog/spdlog.h"

namespace attrition {
namespace {

using nlohmann::json;

constexpr std::uint64_t kExplainStream = 7;

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

const char* yes_no(bool b) { return b ? "yes" : "no"; }

json flags_to_json(const PipelineFlags& f) {
  return {{"outlier_detect", f.outlier_detect},
          {"imblearn", f.imblearn},
          {"weighted_feature", f.weighted_feature}};
}

PipelineFlags flags_from_json(const json& doc) {
  return {doc.at("outlier_detect").get<bool>(), doc.at("imblearn").get<bool>(),
          doc.at("weighted_feature").get<bool>()};
}

json resample_to_json(const ResampleReport& r) {
  json doc{{"method", to_string(r.method)},
           {"synthetic_count", r.synthetic_count},
           {"removed_count", r.removed_count},
           {"final_class_counts", r.final_class_counts}};
  if (r.warning) doc["warning"] = *r.warning;
  return doc;
}

ResampleReport resample_from_json(const json& doc) {
  ResampleReport r;
  r.method = parse_resample_method(doc.at("method").get<std::string>());
  r.synthetic_count = doc.at("synthetic_count").get<std::size_t>();
  r.removed_count = doc.at("removed_count").get<std::size_t>();
  r.final_class_counts = doc.at("final_class_counts").get<std::array<std::size_t, 2>>();
  if (doc.contains("warning")) r.warning = doc.at("warning").get<std::string>();
  return r;
}

std::filesystem::path model_path(const std::filesystem::path& dir, ModelKind kind) {
  return dir / "models" / (to_string(kind) + ".json");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactError("cannot write " + path.string());
  out << text;
  if (!out) throw ArtifactError("write failed for " + path.string());
}

template <class Writer>
void write_tsv(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactError("cannot write " + path.string());
  writer(out);
  if (!out) throw ArtifactError("write failed for " + path.string());
}

void write_correlation(const std::filesystem::path& path, const CorrelationMatrix& corr) {
  write_tsv(path, [&](std::ostream& out) {
    out << "feature_a\tfeature_b\tpearson\n";
    char buf[32];
    for (std::size_t i = 0; i < corr.names.size(); ++i) {
      for (std::size_t j = 0; j < corr.names.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", corr.values(i, j));
        out << corr.names[i] << '\t' << corr.names[j] << '\t' << buf << '\n';
      }
    }
  });
}

std::array<std::size_t, 2> counts_of(const EncodedTable& t) { return t.class_counts(); }

}  // namespace

json run_config_to_json(const RunConfig& c) {
  std::vector<std::string> kinds;
  for (auto k : c.pipeline.kinds) kinds.push_back(to_string(k));
  return {{"data", c.data.filename().string()},
          {"drop", c.drop},
          {"test_ratio", c.test_ratio},
          {"seed", c.pipeline.seed},
          {"flags", flags_to_json(c.pipeline.flags)},
          {"resample_method", to_string(c.pipeline.resample_method)},
          {"resample_k", c.pipeline.resample_k},
          {"forest_trees", c.pipeline.forest.n_trees},
          {"forest_subsample", c.pipeline.forest.subsample},
          {"contamination", c.pipeline.contamination},
          {"weights", weights_to_json(c.pipeline.weights)},
          {"folds", c.pipeline.folds},
          {"models", kinds},
          {"background_size", c.background_size},
          {"kernel_samples", c.kernel_samples}};
}

std::string render_report_text(const RunSummary& s) {
  std::string t;
  const auto line = [&](const std::string& l) { t += l + "\n"; };
  line("attrition model selection report");
  line("data: " + s.data_name + "  rows " + std::to_string(s.n_rows) + "  features " +
       std::to_string(s.n_features) + "  labels " + std::to_string(s.label_counts[0]) + " No / " +
       std::to_string(s.label_counts[1]) + " Yes");
  line("split: train " + std::to_string(s.train_rows) + "  test " + std::to_string(s.test_rows) +
       "  seed " + std::to_string(s.seed));
  line(std::string("pipeline: outlier_detect=") + yes_no(s.flags.outlier_detect) +
       " imblearn=" + yes_no(s.flags.imblearn) + " weighted_feature=" + yes_no(s.flags.weighted_feature));
  line("outliers removed: " + std::to_string(s.outliers_removed));
  if (s.resample) {
    std::string r = "resampling: " + to_string(s.resample->method) + "  synthetic " +
                    std::to_string(s.resample->synthetic_count) + "  removed " +
                    std::to_string(s.resample->removed_count);
    if (s.resample->warning) r += "  warning: " + *s.resample->warning;
    line(r);
  } else {
    line("resampling: none");
  }
  line("weights: " + (s.weights.empty() ? std::string("none") : format_weight_map(s.weights)));
  line("training rows after processing: " + std::to_string(s.processed_rows) + " (" +
       std::to_string(s.processed_counts[0]) + " No / " + std::to_string(s.processed_counts[1]) +
       " Yes)");
  line("cross-validation: " + std::to_string(s.folds) + " stratified folds");
  for (const auto& k : s.kinds) {
    line("");
    line("[" + to_string(k.kind) + "]");
    line("cv_accuracy    " + fixed6(k.cv_accuracy));
    line("test_accuracy  " + fixed6(k.test.accuracy));
    line("precision      " + fixed6(k.test.precision));
    line("recall         " + fixed6(k.test.recall));
    line("f1             " + fixed6(k.test.f1));
    line("auc            " + (k.test.auc ? fixed6(*k.test.auc) : std::string("n/a")));
    line("confusion      tp " + std::to_string(k.confusion.tp) + "  fp " +
         std::to_string(k.confusion.fp) + "  fn " + std::to_string(k.confusion.fn) + "  tn " +
         std::to_string(k.confusion.tn));
  }
  line("");
  line("best model: " + to_string(s.best_kind) + "  cv_accuracy " + fixed6(s.best_accuracy));
  return t;
}

json render_report_json(const RunSummary& s) {
  json kinds = json::array();
  for (std::size_t i = 0; i < s.kinds.size(); ++i) {
    const auto& k = s.kinds[i];
    json roc = json::array();
    for (const auto& p : k.test.roc_points) roc.push_back({p.fpr, p.tpr});
    kinds.push_back({{"kind", to_string(k.kind)},
                     {"cv_accuracy", k.cv_accuracy},
                     {"fold_accuracies", i < s.fold_accuracies.size() ? s.fold_accuracies[i] : std::vector<double>{}},
                     {"test_accuracy", k.test.accuracy},
                     {"precision", k.test.precision},
                     {"recall", k.test.recall},
                     {"f1", k.test.f1},
                     {"auc", k.test.auc ? json(*k.test.auc) : json(nullptr)},
                     {"roc_points", roc},
                     {"confusion",
                      {{"tp", k.confusion.tp}, {"fp", k.confusion.fp}, {"fn", k.confusion.fn}, {"tn", k.confusion.tn}}}});
  }
  return {{"data", s.data_name},
          {"rows", s.n_rows},
          {"features", s.n_features},
          {"label_counts", s.label_counts},
          {"train_rows", s.train_rows},
          {"test_rows", s.test_rows},
          {"seed", s.seed},
          {"flags", flags_to_json(s.flags)},
          {"outliers_removed", s.outliers_removed},
          {"resampling", s.resample ? resample_to_json(*s.resample) : json(nullptr)},
          {"weights", weights_to_json(s.weights)},
          {"processed_rows", s.processed_rows},
          {"processed_counts", s.processed_counts},
          {"folds", s.folds},
          {"models", kinds},
          {"best_kind", to_string(s.best_kind)},
          {"best_cv_accuracy", s.best_accuracy}};
}

std::size_t highest_risk_row(const Predictor& predictor, const EncodedTable& test) {
  if (test.n_rows() == 0) throw ArgumentError("empty test set");
  const auto p = predictor.proba(test.features);
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return best;
}

RunSummary run_pipeline(const RunConfig& config) {
  const PipelineConfig& pc = config.pipeline;
  const auto seeds = PipelineSeeds::from(pc.seed);
  const RawTable raw = load_csv(config.data);
  PreprocessOptions po;
  po.drop = config.drop;
  const Preprocessed pre = preprocess(raw, po);
  spdlog::info("loaded {} rows, {} features", pre.table.n_rows(), pre.table.n_features());

  const DataSplit split = train_test_split(pre.table, config.test_ratio, seeds.split);
  const ProcessedTraining processed = process_training(split.train, pc);
  spdlog::info("training rows after processing: {}", processed.table.n_rows());
  const ModelSelectionReport selection = select_best(processed.table, pc);
  spdlog::info("best model {} (cv accuracy {:.6f})", to_string(selection.best_kind),
               selection.best_accuracy);

  Hyperparams hp = pc.hp;
  hp.seed = seeds.models;
  const EncodedTable test_w =
      processed.weights.empty() ? split.test : apply_feature_weights(split.test, processed.weights);

  const auto& dir = config.out_dir;
  std::filesystem::create_directories(dir / "models");
  std::filesystem::create_directories(dir / "plots");

  RunSummary s;
  s.data_name = config.data.filename().string();
  s.n_rows = pre.table.n_rows();
  s.n_features = pre.table.n_features();
  s.label_counts = pre.table.class_counts();
  s.train_rows = split.train.n_rows();
  s.test_rows = split.test.n_rows();
  s.flags = pc.flags;
  s.seed = pc.seed;
  s.folds = pc.folds;
  s.outliers_removed = processed.removed_outliers.size();
  s.resample = processed.resample_report;
  s.weights = processed.weights;
  s.processed_rows = processed.table.n_rows();
  s.processed_counts = counts_of(processed.table);
  s.best_kind = selection.best_kind;
  s.best_accuracy = selection.best_accuracy;
  for (const auto& score : selection.per_model) {
    const TrainedModel model =
        score.kind == selection.best_kind ? selection.refit : fit(score.kind, processed.table, hp);
    save_model(model, model_path(dir, score.kind), kCodebookFile);
    s.kinds.push_back(evaluate_on(model, score.cv_accuracy, test_w));
    s.fold_accuracies.push_back(score.fold_accuracies);
  }

  const BackgroundSet bg = sample_background(split.train.features, config.background_size, seeds.background);
  save_model(selection.refit, dir / kModelFile, kCodebookFile);
  write_json_file(dir / kCodebookFile, wrap_artifact("attrition-codebook", codebook_to_json(pre.codebook)));
  write_json_file(dir / kBackgroundFile,
                  wrap_artifact("attrition-background", matrix_to_json(bg.rows, pre.table.feature_names)));
  write_json_file(dir / kTestSetFile, wrap_artifact("attrition-table", table_to_json(split.test)));
  write_json_file(dir / kTrainSetFile, wrap_artifact("attrition-table", table_to_json(processed.unweighted)));

  std::vector<std::string> kinds;
  for (auto k : pc.kinds) kinds.push_back(to_string(k));
  const json pipeline{
      {"config", run_config_to_json(config)},
      {"seeds",
       {{"split", seeds.split}, {"outlier", seeds.outlier}, {"resample", seeds.resample},
        {"folds", seeds.folds}, {"models", seeds.models}, {"background", seeds.background}}},
      {"flags", flags_to_json(pc.flags)},
      {"applied_weights", weights_to_json(processed.weights)},
      {"hyperparams", hyperparams_to_json(hp)},
      {"explain", {{"kernel_samples", config.kernel_samples}, {"seed", derive_seed(pc.seed, kExplainStream)}}},
      {"models", kinds},
      {"best_kind", to_string(selection.best_kind)},
      {"summary",
       {{"data", s.data_name},
        {"rows", s.n_rows},
        {"features", s.n_features},
        {"label_counts", s.label_counts},
        {"train_rows", s.train_rows},
        {"test_rows", s.test_rows},
        {"removed_outliers", processed.removed_outliers},
        {"resampling", s.resample ? resample_to_json(*s.resample) : json(nullptr)}}},
      {"train_indices", split.train_indices},
      {"test_indices", split.test_indices}};
  write_json_file(dir / kPipelineFile, wrap_artifact("attrition-pipeline", pipeline));

  write_correlation(dir / "plots" / "correlation.tsv", correlation_matrix(pre.table));
  export_plots(dir);

  write_text(dir / kReportFile, render_report_text(s));
  write_json_file(dir / kReportJsonFile, render_report_json(s));
  return s;
}

RunSummary evaluate_artifacts(const std::filesystem::path& dir) {
  const PipelineArtifacts a = load_pipeline_artifacts(dir);
  const json& p = a.pipeline;
  const json& sum = p.at("summary");
  const Hyperparams hp = hyperparams_from_json(p.at("hyperparams"));
  const std::uint64_t fold_seed = p.at("seeds").at("folds").get<std::uint64_t>();
  const std::size_t folds = p.at("config").at("folds").get<std::size_t>();

  EncodedTable train =
      table_from_json(unwrap_artifact(read_json_file(dir / kTrainSetFile), "attrition-table"));
  const EncodedTable train_w = a.weights.empty() ? train : apply_feature_weights(train, a.weights);
  const EncodedTable test_w = a.weights.empty() ? a.test : apply_feature_weights(a.test, a.weights);

  RunSummary s;
  s.data_name = sum.at("data").get<std::string>();
  s.n_rows = sum.at("rows").get<std::size_t>();
  s.n_features = sum.at("features").get<std::size_t>();
  s.label_counts = sum.at("label_counts").get<std::array<std::size_t, 2>>();
  s.train_rows = sum.at("train_rows").get<std::size_t>();
  s.test_rows = sum.at("test_rows").get<std::size_t>();
  s.flags = flags_from_json(p.at("flags"));
  s.seed = p.at("config").at("seed").get<std::uint64_t>();
  s.folds = folds;
  s.outliers_removed = sum.at("removed_outliers").size();
  if (!sum.at("resampling").is_null()) s.resample = resample_from_json(sum.at("resampling"));
  s.weights = a.weights;
  s.processed_rows = train_w.n_rows();
  s.processed_counts = counts_of(train_w);

  bool first = true;
  for (const auto& name : p.at("models")) {
    const ModelKind kind = parse_model_kind(name.get<std::string>());
    const auto acc = cross_val_accuracies(kind, train_w, folds, hp, fold_seed);
    double total = 0.0;
    for (double v : acc) total += v;
    const double cv = total / static_cast<double>(acc.size());
    if (first || cv > s.best_accuracy) {
      s.best_kind = kind;
      s.best_accuracy = cv;
      first = false;
    }
    s.kinds.push_back(evaluate_on(load_model(model_path(dir, kind)), cv, test_w));
    s.fold_accuracies.push_back(acc);
  }
  return s;
}

void export_plots(const std::filesystem::path& dir) {
  const PipelineArtifacts a = load_pipeline_artifacts(dir);
  const auto plots = dir / "plots";
  std::filesystem::create_directories(plots);
  const Explainer explainer(Predictor(a.model, a.weights), a.background, a.explain);
  const auto population = explainer.explain_all(a.test.features);

  write_tsv(plots / "summary.tsv", [&](std::ostream& out) { write_summary_tsv(out, summary_data(population)); });
  const auto ranking = mean_abs_importance(population);
  write_tsv(plots / "importance.tsv", [&](std::ostream& out) { write_importance_tsv(out, ranking); });
  const std::size_t risk = highest_risk_row(explainer.predictor(), a.test);
  write_tsv(plots / "force_highest_risk.tsv",
            [&](std::ostream& out) { write_force_tsv(out, force_data(population[risk])); });
  for (std::size_t r = 0; r < std::min<std::size_t>(3, ranking.size()); ++r) {
    const auto& name = ranking[r].name;
    write_tsv(plots / ("dependence_" + name + ".tsv"), [&](std::ostream& out) {
      write_dependence_tsv(out, name, dependence_data(population, name));
    });
  }

  const auto scores = explainer.predictor().proba(a.test.features);
  std::vector<int> pred(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) pred[i] = scores[i] >= 0.5 ? 1 : 0;
  const ConfusionMatrix cm = confusion(a.test.labels, pred);
  const MetricsReport m = metrics(cm, scores, a.test.labels);
  write_tsv(plots / "confusion.tsv", [&](std::ostream& out) {
    out << "actual\tpredicted\tcount\n";
    out << "Yes\tYes\t" << cm.tp << "\nNo\tYes\t" << cm.fp << "\nYes\tNo\t" << cm.fn << "\nNo\tNo\t"
        << cm.tn << '\n';
  });
  write_tsv(plots / "roc.tsv", [&](std::ostream& out) {
    out << "fpr\ttpr\n";
    char buf[64];
    for (const auto& pt : m.roc_points) {
      std::snprintf(buf, sizeof buf, "%.17g\t%.17g\n", pt.fpr, pt.tpr);
      out << buf;
    }
  });
}

}  // namespace attrition
