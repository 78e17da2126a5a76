#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attrition/dataset.hpp"
#include "attrition/explain.hpp"

namespace attrition {

struct PolicyRules {
  std::vector<std::string> rules;
};

struct Prompt {
  std::string text;
};

enum class NarrativeSource { template_fallback, external };
std::string to_string(NarrativeSource source);

struct Narrative {
  std::vector<std::string> reasons;
  std::vector<std::string> suggestions;
  NarrativeSource source = NarrativeSource::template_fallback;
  std::optional<std::string> warning;  ///< why an external request fell back
};

/// Feature name -> retention action, read from "feature<TAB>action" lines.
/// Blank lines and lines starting with '#' are ignored.
class Lexicon {
 public:
  static Lexicon parse(const std::string& text);
  static Lexicon load(const std::filesystem::path& path);

  void set(std::string feature, std::string action);
  /// The listed action, or a generic review action for unknown features.
  std::string action_for(const std::string& feature) const;
  std::size_t size() const { return actions_.size(); }

 private:
  std::map<std::string, std::string> actions_;
};

inline constexpr const char* kPromptInstruction =
    "Please write the reason of stay or leave in bullet points. "
    "Also provide suggestions how to retain the employee in bullet points.";

/// "The SHAP value for feature '<name>' is <phi to 2 decimals>."
std::string shap_line(const std::string& name, double phi);

/// Rules block (if any), one SHAP line per feature in column order, then
/// the closing instruction.
Prompt build_prompt(const ShapExplanation& expl, const PolicyRules& rules = {});

/// Offline narrative: the top_k features by |phi| as reasons, lexicon
/// actions for those pushing toward attrition as suggestions.
Narrative template_narrative(const ShapExplanation& expl, std::size_t top_k,
                             const Lexicon& lexicon);

struct CompletionConfig {
  std::string url;  ///< empty = offline
  std::string model = "text-completion";
  std::string credential_env = "ATTRITION_COMPLETION_KEY";
  double timeout_seconds = 30.0;
};

/// Bulleted lines of a completion body. Bullets after a line mentioning
/// "suggest" or "retain" become suggestions, earlier ones reasons.
std::optional<Narrative> parse_completion_text(const std::string& text);

/// POSTs {"model", "prompt"} to the endpoint and reads the completion from
/// "text" or "choices"[0]["text"]. Any failure yields the template
/// narrative with `warning` set; errors never propagate.
Narrative complete(const Prompt& prompt, const CompletionConfig& config,
                   const ShapExplanation& expl, std::size_t top_k, const Lexicon& lexicon);

struct FeatureEdit {
  std::string feature;
  double value = 0.0;
};

struct AppliedEdit {
  std::string feature;
  double old_value = 0.0;
  double new_value = 0.0;
};

struct WhatIfResult {
  double original_proba = 0.0;
  double new_proba = 0.0;
  std::vector<AppliedEdit> edits;
  std::vector<double> edited_instance;
  ShapExplanation new_explanation;
};

/// Applies the edits to a copy of the unweighted row, then re-predicts and
/// re-explains. Categorical edits must be codes present in `codebook`.
WhatIfResult what_if(const Explainer& explainer, std::span<const double> x,
                     const std::vector<FeatureEdit>& edits, const CategoryCodebook& codebook);

}  // namespace attrition
