#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "attrition/error.hpp"
#include "attrition/models.hpp"
#include "learners.hpp"

namespace attrition {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_dims(const TrainedModel& model, std::span<const double> x) {
  if (x.size() != model.n_features()) {
    throw ArgumentError("expected " + std::to_string(model.n_features()) + " features, got " +
                        std::to_string(x.size()));
  }
}

double forest_proba(const ForestState& s, std::span<const double> x) {
  double total = 0.0;
  for (const auto& t : s.trees) total += t.predict(x);
  return total / static_cast<double>(s.trees.size());
}

double gbdt_margin(const GbdtState& s, std::span<const double> x) {
  double m = s.base_score;
  for (const auto& t : s.trees) m += t.predict(x);
  return m;
}

double linear_margin(const LinearState& s, std::span<const double> x) {
  double m = s.bias;
  for (std::size_t j = 0; j < x.size(); ++j) m += s.weights[j] * x[j];
  return m;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ArgumentError("invalid hyperparameter: " + what);
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::RandomForest: return "RandomForest";
    case ModelKind::DecisionTree: return "DecisionTree";
    case ModelKind::GaussianNB: return "GaussianNB";
    case ModelKind::LogisticRegression: return "LogisticRegression";
    case ModelKind::MLP: return "MLP";
    case ModelKind::LGBMStyleGBDT: return "LGBMStyleGBDT";
    case ModelKind::LinearSVM: return "LinearSVM";
    case ModelKind::XGBStyleGBDT: return "XGBStyleGBDT";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& text) {
  std::string t;
  for (char c : text) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  for (ModelKind k : kAllModelKinds) {
    std::string name = to_string(k);
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (t == name) return k;
  }
  if (t == "rf") return ModelKind::RandomForest;
  if (t == "dt") return ModelKind::DecisionTree;
  if (t == "gnb" || t == "nb") return ModelKind::GaussianNB;
  if (t == "lr" || t == "logistic") return ModelKind::LogisticRegression;
  if (t == "lgbm") return ModelKind::LGBMStyleGBDT;
  if (t == "svm") return ModelKind::LinearSVM;
  if (t == "xgb") return ModelKind::XGBStyleGBDT;
  throw ArgumentError("unknown model kind '" + text + "'");
}

bool is_tree_kind(ModelKind kind) {
  return kind == ModelKind::DecisionTree || kind == ModelKind::RandomForest ||
         kind == ModelKind::XGBStyleGBDT || kind == ModelKind::LGBMStyleGBDT;
}

std::string to_string(OutputSpace space) {
  return space == OutputSpace::margin ? "margin" : "probability";
}

void Hyperparams::validate(ModelKind kind) const {
  switch (kind) {
    case ModelKind::DecisionTree:
      require(tree.max_depth >= 0, "tree.max_depth >= 0");
      require(tree.min_samples_split >= 2, "tree.min_samples_split >= 2");
      require(tree.min_samples_leaf >= 1, "tree.min_samples_leaf >= 1");
      break;
    case ModelKind::RandomForest:
      require(forest.n_trees >= 1, "forest.n_trees >= 1");
      require(forest.max_depth >= 0, "forest.max_depth >= 0");
      require(forest.min_samples_split >= 2, "forest.min_samples_split >= 2");
      require(forest.min_samples_leaf >= 1, "forest.min_samples_leaf >= 1");
      break;
    case ModelKind::XGBStyleGBDT:
      require(xgb.learning_rate > 0.0 && xgb.learning_rate <= 1.0, "xgb.learning_rate in (0, 1]");
      require(xgb.max_depth >= 1, "xgb.max_depth >= 1");
      require(xgb.l2 >= 0.0, "xgb.l2 >= 0");
      require(xgb.min_split_gain >= 0.0, "xgb.min_split_gain >= 0");
      require(xgb.min_child_hessian >= 0.0, "xgb.min_child_hessian >= 0");
      break;
    case ModelKind::LGBMStyleGBDT:
      require(lgbm.learning_rate > 0.0 && lgbm.learning_rate <= 1.0, "lgbm.learning_rate in (0, 1]");
      require(lgbm.max_leaves >= 2, "lgbm.max_leaves >= 2");
      require(lgbm.l2 >= 0.0, "lgbm.l2 >= 0");
      require(lgbm.min_data_in_leaf >= 1, "lgbm.min_data_in_leaf >= 1");
      require(lgbm.max_bins >= 2 && lgbm.max_bins <= 65535, "lgbm.max_bins in [2, 65535]");
      break;
    case ModelKind::LogisticRegression:
      require(logistic.l2 >= 0.0, "logistic.l2 >= 0");
      require(logistic.tolerance > 0.0, "logistic.tolerance > 0");
      require(logistic.max_iterations >= 1, "logistic.max_iterations >= 1");
      break;
    case ModelKind::LinearSVM:
      require(svm.c > 0.0, "svm.c > 0");
      require(svm.epochs >= 1, "svm.epochs >= 1");
      break;
    case ModelKind::MLP:
      require(mlp.hidden >= 1, "mlp.hidden >= 1");
      require(mlp.batch_size >= 1, "mlp.batch_size >= 1");
      require(mlp.learning_rate > 0.0, "mlp.learning_rate > 0");
      require(mlp.l2 >= 0.0, "mlp.l2 >= 0");
      break;
    case ModelKind::GaussianNB:
      require(naive_bayes.var_smoothing > 0.0, "naive_bayes.var_smoothing > 0");
      break;
  }
}

TrainedModel fit(ModelKind kind, const EncodedTable& table, const Hyperparams& hp) {
  hp.validate(kind);
  if (table.n_rows() == 0) throw DataError("cannot fit on an empty table");
  table.validate();

  TrainedModel model;
  model.kind = kind;
  model.feature_names = table.feature_names;
  const auto counts = table.class_counts();
  if (counts[0] == 0 || counts[1] == 0) {
    model.state = ConstantState{counts[1] > 0 ? 1 : 0};
    return model;
  }
  switch (kind) {
    case ModelKind::DecisionTree: model.state = detail::fit_decision_tree(table, hp.tree); break;
    case ModelKind::RandomForest:
      model.state = detail::fit_random_forest(table, hp.forest, hp.seed);
      break;
    case ModelKind::XGBStyleGBDT: model.state = detail::fit_xgb(table, hp.xgb); break;
    case ModelKind::LGBMStyleGBDT: model.state = detail::fit_lgbm(table, hp.lgbm); break;
    case ModelKind::LogisticRegression: model.state = detail::fit_logistic(table, hp.logistic); break;
    case ModelKind::LinearSVM: model.state = detail::fit_linear_svm(table, hp.svm); break;
    case ModelKind::GaussianNB: model.state = detail::fit_naive_bayes(table, hp.naive_bayes); break;
    case ModelKind::MLP: model.state = detail::fit_mlp(table, hp.mlp, hp.seed); break;
  }
  return model;
}

double predict_proba(const TrainedModel& model, std::span<const double> x) {
  check_dims(model, x);
  return std::visit(
      Overloaded{
          [](const ConstantState& s) { return static_cast<double>(s.label); },
          [&](const ForestState& s) { return forest_proba(s, x); },
          [&](const GbdtState& s) { return logistic(gbdt_margin(s, x)); },
          [&](const LinearState& s) { return logistic(linear_margin(s, x)); },
          [&](const NaiveBayesState& s) { return detail::naive_bayes_proba(s, x); },
          [&](const MlpState& s) { return detail::mlp_proba(s, x); },
      },
      model.state);
}

int predict(const TrainedModel& model, std::span<const double> x) {
  return predict_proba(model, x) >= 0.5 ? 1 : 0;
}

std::vector<double> predict_proba(const TrainedModel& model, const Matrix& rows) {
  std::vector<double> out(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = predict_proba(model, rows.row(i));
  return out;
}

std::vector<int> predict(const TrainedModel& model, const Matrix& rows) {
  std::vector<int> out(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = predict(model, rows.row(i));
  return out;
}

bool has_margin(const TrainedModel& model) {
  return !std::holds_alternative<NaiveBayesState>(model.state) &&
         !std::holds_alternative<MlpState>(model.state) &&
         model.kind != ModelKind::GaussianNB && model.kind != ModelKind::MLP;
}

double decision_margin(const TrainedModel& model, std::span<const double> x) {
  if (!has_margin(model)) {
    throw UnsupportedKind(to_string(model.kind) + " has no additive decision margin");
  }
  check_dims(model, x);
  return std::visit(
      Overloaded{
          [](const ConstantState& s) {
            return s.label == 1 ? std::numeric_limits<double>::infinity()
                                : -std::numeric_limits<double>::infinity();
          },
          [&](const ForestState& s) {
            const double p = std::clamp(forest_proba(s, x), 1e-12, 1.0 - 1e-12);
            return std::log(p / (1.0 - p));
          },
          [&](const GbdtState& s) { return gbdt_margin(s, x); },
          [&](const LinearState& s) { return linear_margin(s, x); },
          [](const auto&) -> double { throw UnsupportedKind("no decision margin"); },
      },
      model.state);
}

OutputSpace explanation_space(const TrainedModel& model) {
  if (std::holds_alternative<GbdtState>(model.state) ||
      std::holds_alternative<LinearState>(model.state)) {
    return OutputSpace::margin;
  }
  return OutputSpace::probability;
}

double explanation_output(const TrainedModel& model, std::span<const double> x) {
  return explanation_space(model) == OutputSpace::margin ? decision_margin(model, x)
                                                         : predict_proba(model, x);
}

}  // namespace attrition
