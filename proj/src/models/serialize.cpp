#include <fstream>
#include <sstream>

#include "attrition/error.hpp"
#include "attrition/models.hpp"

namespace attrition {
namespace {

using nlohmann::json;

json tree_to_json(const Tree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes) {
    if (n.is_leaf()) {
      nodes.push_back({{"value", n.value}});
    } else {
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"value", n.value}});
    }
  }
  return nodes;
}

Tree tree_from_json(const json& doc, std::size_t n_features) {
  Tree tree;
  const auto count = static_cast<int>(doc.size());
  if (count == 0) throw ArtifactError("tree with no nodes");
  for (const auto& item : doc) {
    TreeNode n;
    n.value = item.at("value").get<double>();
    if (item.contains("feature")) {
      n.feature = item.at("feature").get<int>();
      n.threshold = item.at("threshold").get<double>();
      n.left = item.at("left").get<int>();
      n.right = item.at("right").get<int>();
      if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= n_features) {
        throw ArtifactError("split feature index out of range");
      }
      const int self = static_cast<int>(tree.nodes.size());
      if (n.left <= self || n.right <= self || n.left >= count || n.right >= count) {
        throw ArtifactError("child index out of range");
      }
    }
    tree.nodes.push_back(n);
  }
  return tree;
}

json trees_to_json(const std::vector<Tree>& trees) {
  json out = json::array();
  for (const auto& t : trees) out.push_back(tree_to_json(t));
  return out;
}

std::vector<Tree> trees_from_json(const json& doc, std::size_t n_features) {
  std::vector<Tree> out;
  for (const auto& t : doc) out.push_back(tree_from_json(t, n_features));
  return out;
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void expect_size(const std::vector<double>& v, std::size_t n, const char* what) {
  if (v.size() != n) throw ArtifactError(std::string("wrong length for ") + what);
}

}  // namespace

nlohmann::json model_to_json(const TrainedModel& model, const std::string& codebook_ref) {
  json doc;
  doc["format"] = kModelFormat;
  doc["version"] = kModelFormatVersion;
  doc["kind"] = to_string(model.kind);
  doc["feature_names"] = model.feature_names;
  doc["codebook"] = codebook_ref;
  doc["params"] = std::visit(
      Overloaded{
          [](const ConstantState& s) { return json{{"state", "constant"}, {"label", s.label}}; },
          [](const ForestState& s) {
            return json{{"state", "forest"}, {"trees", trees_to_json(s.trees)}};
          },
          [](const GbdtState& s) {
            return json{{"state", "gbdt"},
                        {"base_score", s.base_score},
                        {"trees", trees_to_json(s.trees)},
                        {"loss_history", s.loss_history}};
          },
          [](const LinearState& s) {
            return json{{"state", "linear"}, {"weights", s.weights}, {"bias", s.bias}};
          },
          [](const NaiveBayesState& s) {
            return json{{"state", "naive_bayes"},
                        {"log_prior", s.log_prior},
                        {"mean", s.mean},
                        {"variance", s.variance}};
          },
          [](const MlpState& s) {
            return json{{"state", "mlp"},         {"input_mean", s.input_mean},
                        {"input_scale", s.input_scale}, {"hidden", s.hidden},
                        {"w1", s.w1},             {"b1", s.b1},
                        {"w2", s.w2},             {"b2", s.b2}};
          },
      },
      model.state);
  return doc;
}

TrainedModel model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != kModelFormat) {
      throw ArtifactError("not a model artifact");
    }
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw ArtifactError("unsupported model format version " + std::to_string(version));
    }
    TrainedModel model;
    model.kind = parse_model_kind(doc.at("kind").get<std::string>());
    model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    const std::size_t d = model.feature_names.size();
    const json& p = doc.at("params");
    const std::string state = p.at("state").get<std::string>();
    if (state == "constant") {
      model.state = ConstantState{p.at("label").get<int>()};
    } else if (state == "forest") {
      model.state = ForestState{trees_from_json(p.at("trees"), d)};
    } else if (state == "gbdt") {
      GbdtState s;
      s.base_score = p.at("base_score").get<double>();
      s.trees = trees_from_json(p.at("trees"), d);
      s.loss_history = p.at("loss_history").get<std::vector<double>>();
      model.state = std::move(s);
    } else if (state == "linear") {
      LinearState s;
      s.weights = p.at("weights").get<std::vector<double>>();
      s.bias = p.at("bias").get<double>();
      expect_size(s.weights, d, "weights");
      model.state = std::move(s);
    } else if (state == "naive_bayes") {
      NaiveBayesState s;
      s.log_prior = p.at("log_prior").get<std::array<double, 2>>();
      s.mean = p.at("mean").get<std::array<std::vector<double>, 2>>();
      s.variance = p.at("variance").get<std::array<std::vector<double>, 2>>();
      for (int c = 0; c < 2; ++c) {
        expect_size(s.mean[c], d, "mean");
        expect_size(s.variance[c], d, "variance");
      }
      model.state = std::move(s);
    } else if (state == "mlp") {
      MlpState s;
      s.input_mean = p.at("input_mean").get<std::vector<double>>();
      s.input_scale = p.at("input_scale").get<std::vector<double>>();
      s.hidden = p.at("hidden").get<std::size_t>();
      s.w1 = p.at("w1").get<std::vector<double>>();
      s.b1 = p.at("b1").get<std::vector<double>>();
      s.w2 = p.at("w2").get<std::vector<double>>();
      s.b2 = p.at("b2").get<double>();
      expect_size(s.input_mean, d, "input_mean");
      expect_size(s.input_scale, d, "input_scale");
      expect_size(s.w1, s.hidden * d, "w1");
      expect_size(s.b1, s.hidden, "b1");
      expect_size(s.w2, s.hidden, "w2");
      model.state = std::move(s);
    } else {
      throw ArtifactError("unknown model state '" + state + "'");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError(std::string("malformed model artifact: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ArtifactError(std::string("malformed model artifact: ") + e.what());
  }
}

void save_model(const TrainedModel& model, const std::filesystem::path& path,
                const std::string& codebook_ref) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactError("cannot write " + path.string());
  out << model_to_json(model, codebook_ref).dump(1) << '\n';
  if (!out) throw ArtifactError("write failed for " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ArtifactError(path.string() + ": " + e.what());
  }
  try {
    return model_from_json(doc);
  } catch (const ArtifactError& e) {
    throw ArtifactError(path.string() + ": " + e.what());
  }
}

}  // namespace attrition

namespace attrition {
namespace {

// One table drives both directions so the key set cannot drift.
template <class F>
void visit_hyperparams(Hyperparams& hp, F&& f) {
  f("tree.max_depth", hp.tree.max_depth);
  f("tree.min_samples_split", hp.tree.min_samples_split);
  f("tree.min_samples_leaf", hp.tree.min_samples_leaf);
  f("forest.n_trees", hp.forest.n_trees);
  f("forest.max_depth", hp.forest.max_depth);
  f("forest.min_samples_split", hp.forest.min_samples_split);
  f("forest.min_samples_leaf", hp.forest.min_samples_leaf);
  f("forest.max_features", hp.forest.max_features);
  f("forest.bootstrap", hp.forest.bootstrap);
  f("xgb.n_rounds", hp.xgb.n_rounds);
  f("xgb.learning_rate", hp.xgb.learning_rate);
  f("xgb.max_depth", hp.xgb.max_depth);
  f("xgb.l2", hp.xgb.l2);
  f("xgb.min_split_gain", hp.xgb.min_split_gain);
  f("xgb.min_child_hessian", hp.xgb.min_child_hessian);
  f("lgbm.n_rounds", hp.lgbm.n_rounds);
  f("lgbm.learning_rate", hp.lgbm.learning_rate);
  f("lgbm.max_leaves", hp.lgbm.max_leaves);
  f("lgbm.l2", hp.lgbm.l2);
  f("lgbm.min_split_gain", hp.lgbm.min_split_gain);
  f("lgbm.min_data_in_leaf", hp.lgbm.min_data_in_leaf);
  f("lgbm.min_child_hessian", hp.lgbm.min_child_hessian);
  f("lgbm.max_bins", hp.lgbm.max_bins);
  f("logistic.l2", hp.logistic.l2);
  f("logistic.tolerance", hp.logistic.tolerance);
  f("logistic.max_iterations", hp.logistic.max_iterations);
  f("svm.c", hp.svm.c);
  f("svm.epochs", hp.svm.epochs);
  f("mlp.hidden", hp.mlp.hidden);
  f("mlp.epochs", hp.mlp.epochs);
  f("mlp.batch_size", hp.mlp.batch_size);
  f("mlp.learning_rate", hp.mlp.learning_rate);
  f("mlp.l2", hp.mlp.l2);
  f("naive_bayes.var_smoothing", hp.naive_bayes.var_smoothing);
  f("seed", hp.seed);
}

}  // namespace

nlohmann::json hyperparams_to_json(const Hyperparams& hp) {
  nlohmann::json doc = nlohmann::json::object();
  Hyperparams copy = hp;
  visit_hyperparams(copy, [&](const char* key, auto& value) { doc[key] = value; });
  return doc;
}

Hyperparams hyperparams_from_json(const nlohmann::json& doc) {
  Hyperparams hp;
  if (!doc.is_object()) throw ArgumentError("hyperparameters must be a JSON object");
  std::size_t matched = 0;
  visit_hyperparams(hp, [&](const char* key, auto& value) {
    if (!doc.contains(key)) return;
    ++matched;
    try {
      doc.at(key).get_to(value);
    } catch (const nlohmann::json::exception&) {
      throw ArgumentError(std::string("bad value for hyperparameter ") + key);
    }
  });
  if (matched != doc.size()) {
    Hyperparams probe;
    for (const auto& item : doc.items()) {
      bool known = false;
      visit_hyperparams(probe, [&](const char* key, auto&) { known = known || item.key() == key; });
      if (!known) throw ArgumentError("unknown hyperparameter '" + item.key() + "'");
    }
  }
  return hp;
}

}  // namespace attrition
