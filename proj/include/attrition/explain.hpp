#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "attrition/dataset.hpp"
#include "attrition/predictor.hpp"

namespace attrition {

/// Reference rows for the interventional value function, in the model's
/// input space.
struct BackgroundSet {
  Matrix rows;
  std::size_t size() const { return rows.rows(); }
};

/// Up to n rows drawn without replacement, kept in source order.
BackgroundSet sample_background(const Matrix& rows, std::size_t n, std::uint64_t seed);

inline constexpr double kEfficiencyTolerance = 1e-6;

/// Per-feature attributions for one instance. Construction checks local
/// accuracy and throws if |base + sum(phi) - output| >= kEfficiencyTolerance.
class ShapExplanation {
 public:
  ShapExplanation(std::vector<double> phi, double base_value, double output_value,
                  OutputSpace space, std::vector<double> feature_values,
                  std::vector<std::string> feature_names);

  const std::vector<double>& phi() const { return phi_; }
  double base_value() const { return base_value_; }
  double output_value() const { return output_value_; }
  OutputSpace space() const { return space_; }
  const std::vector<double>& feature_values() const { return feature_values_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  double residual() const;

 private:
  std::vector<double> phi_;
  double base_value_;
  double output_value_;
  OutputSpace space_;
  std::vector<double> feature_values_;
  std::vector<std::string> feature_names_;
};

/// Process-wide tally of constructed explanations and their worst
/// local-accuracy residual.
struct EfficiencyStats {
  std::uint64_t count = 0;
  double max_residual = 0.0;
};
EfficiencyStats efficiency_stats();

using ModelFunction = std::function<double(std::span<const double>)>;

/// Raw attribution vectors, before packaging into an explanation.
struct Attribution {
  std::vector<double> phi;
  double base_value = 0.0;
  double output_value = 0.0;
};

inline constexpr std::size_t kMaxExactFeatures = 20;

/// Shapley values by enumerating all 2^M coalitions of the interventional
/// value function v(S) = mean over background rows of f(x on S, z elsewhere).
Attribution exact_shapley(const ModelFunction& f, std::span<const double> x, const Matrix& bg);

/// Interventional TreeSHAP for a single tree.
Attribution tree_shap(const Tree& tree, std::span<const double> x, const Matrix& bg);
/// Tree kinds only: summed over trees for boosting, averaged for forests.
Attribution tree_shap(const TrainedModel& model, std::span<const double> x, const Matrix& bg);

/// phi_j = w_j (x_j - mean_bg(x_j)), exact for linear margins.
Attribution linear_shap(const LinearState& state, std::span<const double> x, const Matrix& bg);

/// Shapley-kernel weighted least squares with the efficiency constraint
/// eliminated. With n_samples >= 2^M - 2 every coalition is enumerated and
/// the result equals exact_shapley; otherwise coalition sizes are drawn from
/// the kernel distribution.
Attribution kernel_shap(const ModelFunction& f, std::span<const double> x, const Matrix& bg,
                        std::size_t n_samples, std::uint64_t seed);

enum class ShapEngine { automatic, exact, tree, linear, kernel };

struct ExplainOptions {
  ShapEngine engine = ShapEngine::automatic;
  std::size_t kernel_samples = 512;
  std::uint64_t seed = 0;
};

/// Model-specific engine: tree kinds use tree_shap, logistic and SVM the
/// linear closed form, the rest kernel_shap; a constant model gets zeros.
class Explainer {
 public:
  /// `background` holds unweighted encoded rows.
  Explainer(Predictor predictor, const Matrix& background, ExplainOptions options = {});

  const Predictor& predictor() const { return predictor_; }
  const BackgroundSet& background() const { return background_; }
  OutputSpace space() const { return explanation_space(predictor_.model()); }
  ShapEngine engine() const { return engine_; }

  /// Model output in the explanation space for an unweighted row.
  double output(std::span<const double> x) const;

  ShapExplanation explain(std::span<const double> x) const;
  /// Parallel over rows; identical to explain_all_serial.
  std::vector<ShapExplanation> explain_all(const Matrix& rows) const;
  std::vector<ShapExplanation> explain_all_serial(const Matrix& rows) const;

 private:
  Predictor predictor_;
  BackgroundSet background_;  ///< weighted (model input space)
  ExplainOptions options_;
  ShapEngine engine_;
};

struct SummaryPoint {
  double shap = 0.0;
  double normalized_value = 0.0;  ///< min-max over the population, 0.5 if constant
};
struct SummaryFeature {
  std::string name;
  double mean_abs = 0.0;
  std::vector<SummaryPoint> points;
};
struct SummaryPlotData {
  std::vector<SummaryFeature> features;  ///< by mean |phi| descending, ties by column order
};

struct ForceContribution {
  std::string name;
  double feature_value = 0.0;
  double phi = 0.0;
  int sign = 0;  ///< +1 pushes toward attrition, -1 away
};
struct ForcePlotData {
  double base_value = 0.0;
  double output_value = 0.0;
  std::vector<ForceContribution> contributions;  ///< nonzero phi only, by |phi| descending
};

struct DependencePoint {
  double feature_value = 0.0;
  double shap = 0.0;
};

struct Importance {
  std::string name;
  double mean_abs = 0.0;
};

SummaryPlotData summary_data(std::span<const ShapExplanation> explanations);
ForcePlotData force_data(const ShapExplanation& expl);
std::vector<DependencePoint> dependence_data(std::span<const ShapExplanation> explanations,
                                             const std::string& feature);
/// Descending by mean |phi|, ties by column order. top_k = 0 means all.
std::vector<Importance> mean_abs_importance(std::span<const ShapExplanation> explanations,
                                            std::size_t top_k = 0);

// Tab-separated plot-data files with a header line.
void write_summary_tsv(std::ostream& out, const SummaryPlotData& data);
void write_force_tsv(std::ostream& out, const ForcePlotData& data);
void write_dependence_tsv(std::ostream& out, const std::string& feature,
                          const std::vector<DependencePoint>& points);
void write_importance_tsv(std::ostream& out, const std::vector<Importance>& ranking);

}  // namespace attrition
