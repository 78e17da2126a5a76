// attrition: command-line front end of the attrition engine.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "attrition/artifacts.hpp"
#include "attrition/error.hpp"
#include "attrition/narrate.hpp"
#include "attrition/pipeline.hpp"
#include "attrition/serve.hpp"

namespace {

using namespace attrition;
using nlohmann::json;

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError(path.string() + ": cannot open");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

double parse_number(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || p != end) throw ArgumentError("bad number '" + text + "' for " + what);
  return v;
}

// Values given on the command line win; file items only fill options the
// command line left unset.
void apply_config_file(CLI::App& cmd, const std::string& path) {
  if (!std::filesystem::exists(path)) throw ArgumentError(path + ": config file not found");
  std::vector<CLI::ConfigItem> items;
  try {
    std::ifstream in(path);
    items = CLI::ConfigINI().from_config(in);
  } catch (const std::exception& e) {
    throw ArgumentError(path + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    std::string name = item.fullname();
    std::replace(name.begin(), name.end(), '_', '-');
    CLI::Option* opt = nullptr;
    try {
      opt = cmd.get_option("--" + name);
    } catch (const CLI::OptionNotFound&) {
      throw ArgumentError(path + ": unknown key '" + item.fullname() + "'");
    }
    if (name == "config") throw ArgumentError(path + ": nested config files are not supported");
    if (opt->count() > 0) continue;
    if (opt->get_items_expected_max() == 1 && item.inputs.size() > 1) {
      // "a,b" is read as a list; single-valued options take the text back.
      opt->add_result(CLI::detail::join(item.inputs, ","));
    } else {
      opt->add_result(item.inputs);
    }
    opt->run_callback();
  }
}

json parse_instance_file(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ArgumentError(path + ": " + e.what());
  }
  if (doc.is_object() && doc.contains("instance")) doc = doc["instance"];
  if (!doc.is_object()) throw ArgumentError(path + ": expected a JSON object of feature values");
  return doc;
}

json instance_request(int row, const std::string& instance_file) {
  if (!instance_file.empty()) return {{"instance", parse_instance_file(instance_file)}};
  return {{"row", row}};
}

PolicyRules load_rules(const std::string& path) {
  PolicyRules rules;
  if (path.empty()) return rules;
  std::stringstream ss(read_text(path));
  for (std::string line; std::getline(ss, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    rules.rules.push_back(line);
  }
  return rules;
}

// Without --lexicon the checked-in table is used when it is still present.
Lexicon load_lexicon(const std::string& path) {
  if (!path.empty()) return Lexicon::load(path);
#ifdef ATTRITION_DEFAULT_LEXICON
  if (std::filesystem::exists(ATTRITION_DEFAULT_LEXICON)) return Lexicon::load(ATTRITION_DEFAULT_LEXICON);
#endif
  return {};
}

void print_json(const json& doc) { std::cout << doc.dump(2) << '\n'; }

[[noreturn]] void fail_response(const Response& r) {
  throw Error("request rejected (" + std::to_string(r.status) + "): " + r.body.dump());
}

// "name=value" with value an absolute number, "+d"/"-d" (offset), "*f"
// (factor), or a category label for categorical features.
json resolve_edits(const std::vector<std::string>& sets, const Response& current,
                   const CategoryCodebook& codebook) {
  const auto names = current.body.at("feature_names").get<std::vector<std::string>>();
  const auto values = current.body.at("feature_values").get<std::vector<double>>();
  json edits = json::object();
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ArgumentError("--set expects name=value, got '" + s + "'");
    const std::string name = s.substr(0, eq);
    const std::string value = s.substr(eq + 1);
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw ArgumentError("unknown feature '" + name + "'");
    const double old = values[static_cast<std::size_t>(it - names.begin())];
    if (codebook.find(name)) {
      edits[name] = value;
    } else if (!value.empty() && value[0] == '*') {
      edits[name] = old * parse_number(value.substr(1), name);
    } else if (!value.empty() && value[0] == '+') {
      edits[name] = old + parse_number(value.substr(1), name);
    } else if (value.size() > 1 && value[0] == '-' && value[1] == '-') {
      edits[name] = old - parse_number(value.substr(2), name);
    } else {
      edits[name] = parse_number(value, name);
    }
  }
  return edits;
}

struct RunOptions {
  std::string config;
  std::string data;
  std::string drop;
  double test_ratio = 0.2;
  std::uint64_t seed = 0;
  bool outlier = false;
  double contamination = 0.05;
  std::size_t trees = 100;
  std::size_t subsample = 256;
  std::string imblearn;
  std::size_t resample_k = 5;
  std::string weights;
  bool weighted = false;
  std::size_t folds = 9;
  std::string models;
  std::string out = "out";
  std::size_t background = 100;
  std::size_t kernel_samples = 512;
  std::vector<std::string> hp;
};

RunConfig to_run_config(const RunOptions& o) {
  RunConfig c;
  if (o.data.empty()) throw ArgumentError("--data is required");
  c.data = o.data;
  if (!o.drop.empty()) c.drop = split_list(o.drop);
  c.test_ratio = o.test_ratio;
  c.out_dir = o.out;
  c.background_size = o.background;
  c.kernel_samples = o.kernel_samples;
  auto& p = c.pipeline;
  p.seed = o.seed;
  p.flags.outlier_detect = o.outlier;
  p.contamination = o.contamination;
  p.forest.n_trees = o.trees;
  p.forest.subsample = o.subsample;
  if (!o.imblearn.empty()) {
    p.flags.imblearn = true;
    p.resample_method = parse_resample_method(o.imblearn);
  }
  p.resample_k = o.resample_k;
  if (!o.weights.empty()) {
    p.flags.weighted_feature = true;
    p.weights = parse_weight_map(o.weights);
  } else if (o.weighted) {
    p.flags.weighted_feature = true;
  }
  p.folds = o.folds;
  if (!o.models.empty()) {
    p.kinds.clear();
    for (const auto& m : split_list(o.models)) p.kinds.push_back(parse_model_kind(m));
  }
  if (!o.hp.empty()) {
    json doc = hyperparams_to_json(p.hp);
    for (const auto& kv : o.hp) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ArgumentError("--hp expects key=value, got '" + kv + "'");
      const std::string key = kv.substr(0, eq);
      if (!doc.contains(key)) throw ArgumentError("unknown hyperparameter '" + key + "'");
      try {
        doc[key] = json::parse(kv.substr(eq + 1));
      } catch (const json::exception&) {
        throw ArgumentError("bad value for hyperparameter " + key);
      }
    }
    p.hp = hyperparams_from_json(doc);
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("attrition"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Attrition prediction, explanation and what-if analysis"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  RunOptions ro;
  auto* run = app.add_subcommand("run", "Train, select and persist the full pipeline");
  run->add_option("--config", ro.config, "key=value file; command-line flags override it");
  run->add_option("--data", ro.data, "Input CSV");
  run->add_option("--drop", ro.drop, "Comma-separated columns to drop");
  run->add_option("--test-ratio", ro.test_ratio, "Held-out fraction")->check(CLI::Range(0.0, 1.0));
  run->add_option("--seed", ro.seed, "Single reproducibility seed");
  run->add_flag("--outlier", ro.outlier, "Remove isolation-forest outliers");
  run->add_option("--contamination", ro.contamination, "Fraction of rows removed as outliers");
  run->add_option("--trees", ro.trees, "Isolation trees");
  run->add_option("--subsample", ro.subsample, "Isolation subsample size");
  run->add_option("--imblearn", ro.imblearn, "Resample the training split: smote, adasyn, smote_tomek");
  run->add_option("--resample-k", ro.resample_k, "Neighbours used by the resampler");
  run->add_option("--weights", ro.weights, "Feature weights name=value[,name=value...]");
  run->add_flag("--weighted", ro.weighted, "Apply the default feature weights");
  run->add_option("--folds", ro.folds, "Cross-validation folds");
  run->add_option("--models", ro.models, "Comma-separated model kinds");
  run->add_option("--out", ro.out, "Output directory");
  run->add_option("--background", ro.background, "Background rows for explanations");
  run->add_option("--kernel-samples", ro.kernel_samples, "Coalitions per KernelSHAP explanation");
  run->add_option("--hp", ro.hp, "Hyperparameter override key=value (repeatable)");

  std::string artifacts = "out";
  bool check = false;
  auto* evaluate = app.add_subcommand("evaluate", "Recompute the report from saved artifacts");
  evaluate->add_option("--artifacts", artifacts, "Artifact directory");
  evaluate->add_flag("--check", check, "Exit 1 unless the result equals the saved report");

  int row = 0;
  std::string instance_file, rules_file, lexicon_file;
  std::size_t top_k = 5;
  CompletionConfig completion;
  auto* explain = app.add_subcommand("explain", "Explain one prediction");
  explain->add_option("--artifacts", artifacts, "Artifact directory");
  auto* ex_row = explain->add_option("--row", row, "Test-set row");
  explain->add_option("--instance", instance_file, "JSON file of feature values")->excludes(ex_row);
  explain->add_option("--top-k", top_k, "Factors in the narrative");
  explain->add_option("--rules", rules_file, "Company rules, one per line");
  explain->add_option("--lexicon", lexicon_file, "Retention actions TSV");
  explain->add_option("--completion-url", completion.url, "Text-completion endpoint");
  explain->add_option("--completion-model", completion.model, "Model name sent to the endpoint");
  explain->add_option("--credential-env", completion.credential_env, "Variable holding the bearer token");

  std::vector<std::string> sets;
  auto* whatif = app.add_subcommand("whatif", "Re-predict after editing features");
  whatif->add_option("--artifacts", artifacts, "Artifact directory");
  auto* wi_row = whatif->add_option("--row", row, "Test-set row");
  whatif->add_option("--instance", instance_file, "JSON file of feature values")->excludes(wi_row);
  whatif->add_option("--set", sets, "name=value, name=+d, name=--d or name=*f (repeatable)")->required();
  whatif->add_option("--top-k", top_k, "Factors in the narrative");
  whatif->add_option("--lexicon", lexicon_file, "Retention actions TSV");

  auto* plots = app.add_subcommand("export-plots", "Write plot-data files under <artifacts>/plots");
  plots->add_option("--artifacts", artifacts, "Artifact directory");

  ServiceConfig sc;
  auto* serve = app.add_subcommand("serve", "Serve the JSON API");
  serve->add_option("--artifacts", artifacts, "Artifact directory");
  serve->add_option("--host", sc.host, "Bind address");
  serve->add_option("--port", sc.port, "Port")->check(CLI::Range(0, 65535));
  serve->add_option("--lexicon", lexicon_file, "Retention actions TSV");
  serve->add_option("--top-k", sc.narrative_top_k, "Factors in narratives");
  serve->add_option("--completion-url", sc.completion.url, "Text-completion endpoint");
  serve->add_option("--completion-model", sc.completion.model, "Model name sent to the endpoint");
  serve->add_option("--credential-env", sc.completion.credential_env, "Variable holding the bearer token");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);

  try {
    if (run->parsed()) {
      if (!ro.config.empty()) apply_config_file(*run, ro.config);
      const RunConfig config = to_run_config(ro);
      const RunSummary summary = run_pipeline(config);
      std::cout << render_report_text(summary);
      return 0;
    }
    if (evaluate->parsed()) {
      const std::string recomputed = render_report_text(evaluate_artifacts(artifacts));
      std::cout << recomputed;
      if (check) {
        const std::string saved = read_text(std::filesystem::path(artifacts) / kReportFile);
        if (saved != recomputed) {
          std::cerr << "attrition: error: recomputed report differs from "
                    << (std::filesystem::path(artifacts) / kReportFile).string() << '\n';
          return 1;
        }
        spdlog::info("report matches {}", (std::filesystem::path(artifacts) / kReportFile).string());
      }
      return 0;
    }
    if (explain->parsed()) {
      PipelineArtifacts a = load_pipeline_artifacts(artifacts);
      const Lexicon lexicon = load_lexicon(lexicon_file);
      const Explainer explainer(Predictor(a.model, a.weights), a.background, a.explain);
      const json request = instance_request(row, instance_file);
      std::vector<double> x;
      if (request.contains("row")) {
        if (row < 0 || static_cast<std::size_t>(row) >= a.test.n_rows()) {
          throw ArgumentError("--row must be in [0, " + std::to_string(a.test.n_rows()) + ")");
        }
        const auto r = a.test.row(static_cast<std::size_t>(row));
        x.assign(r.begin(), r.end());
      } else {
        auto decoded = decode_instance(request["instance"], a.model.feature_names, a.codebook);
        if (!decoded.ok()) fail_response({422, decoded.error});
        x = std::move(decoded.row);
      }
      const ShapExplanation expl = explainer.explain(x);
      const Prompt prompt = build_prompt(expl, load_rules(rules_file));
      const Narrative narrative = completion.url.empty()
                                      ? template_narrative(expl, top_k, lexicon)
                                      : complete(prompt, completion, expl, top_k, lexicon);
      const double p = explainer.predictor().proba(x);
      json contributions = json::array();
      for (const auto& c : force_data(expl).contributions) {
        contributions.push_back(
            {{"feature", c.name}, {"value", c.feature_value}, {"shap", c.phi}, {"sign", c.sign}});
      }
      print_json({{"proba", p},
                  {"label", p >= 0.5 ? 1 : 0},
                  {"space", to_string(expl.space())},
                  {"base_value", expl.base_value()},
                  {"output_value", expl.output_value()},
                  {"instance", instance_to_json(x, a.model.feature_names, a.codebook)},
                  {"contributions", contributions},
                  {"prompt", prompt.text},
                  {"narrative",
                   {{"reasons", narrative.reasons},
                    {"suggestions", narrative.suggestions},
                    {"source", to_string(narrative.source)}}}});
      return 0;
    }
    if (whatif->parsed()) {
      ServiceConfig cfg;
      cfg.narrative_top_k = top_k;
      const Service service(load_pipeline_artifacts(artifacts), load_lexicon(lexicon_file), cfg);
      json request = instance_request(row, instance_file);
      const Response current = service.explain(request);
      if (current.status != 200) fail_response(current);
      request["edits"] = resolve_edits(sets, current, service.artifacts().codebook);
      const Response r = service.whatif(request);
      if (r.status != 200) fail_response(r);
      print_json(r.body);
      return 0;
    }
    if (plots->parsed()) {
      export_plots(artifacts);
      return 0;
    }
    if (serve->parsed()) {
      Service service(load_pipeline_artifacts(artifacts), load_lexicon(lexicon_file), sc);
      spdlog::info("serving {} on {}:{}", artifacts, sc.host, sc.port);
      service.listen();
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "attrition: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
