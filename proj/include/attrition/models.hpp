#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "attrition/dataset.hpp"
#include "attrition/tree.hpp"
#include "json.hpp"

namespace attrition {

/// The eight classifier families, in model-selection order.
enum class ModelKind {
  RandomForest,
  DecisionTree,
  GaussianNB,
  LogisticRegression,
  MLP,
  LGBMStyleGBDT,
  LinearSVM,
  XGBStyleGBDT,
};

inline constexpr std::array<ModelKind, 8> kAllModelKinds{
    ModelKind::RandomForest,       ModelKind::DecisionTree, ModelKind::GaussianNB,
    ModelKind::LogisticRegression, ModelKind::MLP,          ModelKind::LGBMStyleGBDT,
    ModelKind::LinearSVM,          ModelKind::XGBStyleGBDT,
};

std::string to_string(ModelKind kind);
/// Accepts the enum spelling or short aliases (rf, dt, gnb, lr, mlp, lgbm, svm, xgb).
ModelKind parse_model_kind(const std::string& text);
bool is_tree_kind(ModelKind kind);

// Hyperparameter defaults follow the documented defaults of the usual
// reference libraries; see the table in README.md.

struct DecisionTreeParams {
  int max_depth = 0;  ///< 0 = grow until pure
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
};

struct RandomForestParams {
  std::size_t n_trees = 100;
  int max_depth = 0;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = 0;  ///< 0 = floor(sqrt(n_features))
  bool bootstrap = true;
};

struct XgbParams {
  std::size_t n_rounds = 100;
  double learning_rate = 0.3;
  int max_depth = 6;
  double l2 = 1.0;
  double min_split_gain = 0.0;
  double min_child_hessian = 1.0;
};

struct LgbmParams {
  std::size_t n_rounds = 100;
  double learning_rate = 0.1;
  std::size_t max_leaves = 31;
  double l2 = 0.0;
  double min_split_gain = 0.0;
  std::size_t min_data_in_leaf = 20;
  double min_child_hessian = 1e-3;
  std::size_t max_bins = 255;
};

struct LogisticParams {
  double l2 = 1.0;
  double tolerance = 1e-8;  ///< on the max-abs mean gradient
  std::size_t max_iterations = 100;
};

struct SvmParams {
  double c = 1.0;
  std::size_t epochs = 1000;
};

struct MlpParams {
  std::size_t hidden = 64;
  std::size_t epochs = 200;
  std::size_t batch_size = 200;
  double learning_rate = 1e-3;
  double l2 = 1e-4;
};

struct NaiveBayesParams {
  double var_smoothing = 1e-9;
};

struct Hyperparams {
  DecisionTreeParams tree;
  RandomForestParams forest;
  XgbParams xgb;
  LgbmParams lgbm;
  LogisticParams logistic;
  SvmParams svm;
  MlpParams mlp;
  NaiveBayesParams naive_bayes;
  std::uint64_t seed = 0;

  /// Throws ArgumentError naming the first out-of-range value for `kind`.
  void validate(ModelKind kind) const;
};

/// Fitted parameter payloads, one per family.
struct ConstantState {
  int label = 0;
};
/// Decision trees and random forests: leaves hold the class-1 proportion,
/// the probability is the mean over trees.
struct ForestState {
  std::vector<Tree> trees;
};
struct GbdtState {
  double base_score = 0.0;
  std::vector<Tree> trees;  ///< leaf values already include the learning rate
  std::vector<double> loss_history;  ///< mean training log-loss, index 0 = before round 1
};
/// Logistic regression and linear SVM, in raw feature coordinates.
struct LinearState {
  std::vector<double> weights;
  double bias = 0.0;
};
struct NaiveBayesState {
  std::array<double, 2> log_prior{};
  std::array<std::vector<double>, 2> mean;
  std::array<std::vector<double>, 2> variance;
};
struct MlpState {
  std::vector<double> input_mean;
  std::vector<double> input_scale;
  std::size_t hidden = 0;
  std::vector<double> w1;  ///< hidden x n_features, row-major
  std::vector<double> b1;
  std::vector<double> w2;
  double b2 = 0.0;
};

using ModelState =
    std::variant<ConstantState, ForestState, GbdtState, LinearState, NaiveBayesState, MlpState>;

struct TrainedModel {
  ModelKind kind = ModelKind::DecisionTree;
  std::vector<std::string> feature_names;
  ModelState state;

  std::size_t n_features() const { return feature_names.size(); }
  bool is_constant() const { return std::holds_alternative<ConstantState>(state); }
};

/// Deterministic per (kind, table, hp). A table with a single label yields
/// a constant model of that kind.
TrainedModel fit(ModelKind kind, const EncodedTable& table, const Hyperparams& hp = {});

/// 1 iff predict_proba >= 0.5.
int predict(const TrainedModel& model, std::span<const double> x);
/// P(attrition | x).
double predict_proba(const TrainedModel& model, std::span<const double> x);
std::vector<double> predict_proba(const TrainedModel& model, const Matrix& rows);
std::vector<int> predict(const TrainedModel& model, const Matrix& rows);

/// Raw additive score; throws UnsupportedKind for GaussianNB and MLP.
double decision_margin(const TrainedModel& model, std::span<const double> x);
bool has_margin(const TrainedModel& model);

inline double logistic(double margin) { return 1.0 / (1.0 + std::exp(-margin)); }

enum class OutputSpace { margin, probability };
std::string to_string(OutputSpace space);

/// The space in which explanations of this model are additive: margin for
/// boosted, logistic and SVM models, leaf probability for trees and forests,
/// probability for the rest.
OutputSpace explanation_space(const TrainedModel& model);
double explanation_output(const TrainedModel& model, std::span<const double> x);

// Artifact persistence. The JSON document is versioned and self-describing;
// loading then predicting is bit-identical to the in-memory model.
inline constexpr const char* kModelFormat = "attrition-model";
inline constexpr int kModelFormatVersion = 1;

nlohmann::json model_to_json(const TrainedModel& model, const std::string& codebook_ref = "");
TrainedModel model_from_json(const nlohmann::json& doc);
void save_model(const TrainedModel& model, const std::filesystem::path& path,
                const std::string& codebook_ref = "");
TrainedModel load_model(const std::filesystem::path& path);

nlohmann::json hyperparams_to_json(const Hyperparams& hp);
/// Missing keys keep their defaults; unknown keys are an ArgumentError.
Hyperparams hyperparams_from_json(const nlohmann::json& doc);

}  // namespace attrition
