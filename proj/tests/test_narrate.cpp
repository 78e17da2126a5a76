#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "attrition/error.hpp"
#include "attrition/narrate.hpp"
#include "httplib.h"
#include "support.hpp"

using namespace attrition;
using nlohmann::json;

namespace {

ShapExplanation sample_explanation() {
  return ShapExplanation({0.005, -0.3, 0.42, 0.0, -0.001}, -1.0, -0.876,
                         OutputSpace::margin, {1, 2, 3, 4, 5},
                         {"OverTime", "Age", "MonthlyIncome", "Gender", "JobLevel"});
}

// Local stand-in for a text-completion service.
class MockCompletion {
 public:
  explicit MockCompletion(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/v1/completions", [this, handler](const httplib::Request& req, httplib::Response& res) {
      last_body = req.body;
      last_auth = req.get_header_value("Authorization");
      handler(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockCompletion() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/completions"; }

  std::string last_body;
  std::string last_auth;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST(Prompt, LinesRulesAndInstruction) {
  const ShapExplanation e = sample_explanation();
  EXPECT_EQ(shap_line("OverTime", 0.005), "The SHAP value for feature 'OverTime' is 0.01.");
  EXPECT_EQ(shap_line("Age", -0.3), "The SHAP value for feature 'Age' is -0.30.");
  EXPECT_EQ(shap_line("JobLevel", -0.001), "The SHAP value for feature 'JobLevel' is 0.00.");
  const Prompt p = build_prompt(e);
  EXPECT_EQ(p.text,
            "The SHAP value for feature 'OverTime' is 0.01.\n"
            "The SHAP value for feature 'Age' is -0.30.\n"
            "The SHAP value for feature 'MonthlyIncome' is 0.42.\n"
            "The SHAP value for feature 'Gender' is 0.00.\n"
            "The SHAP value for feature 'JobLevel' is 0.00.\n" +
                std::string(kPromptInstruction));
  const Prompt r = build_prompt(e, {{"No overtime beyond 10 hours", "Bonuses are yearly"}});
  EXPECT_EQ(r.text.rfind("Company rules:\n1. No overtime beyond 10 hours\n2. Bonuses are yearly\n\n", 0), 0u);
}

TEST(Lexicon, ParseAndFallback) {
  const Lexicon lex = Lexicon::parse("# comment\nOverTime\tCut overtime\n\nAge\tTalk\n");
  EXPECT_EQ(lex.size(), 2u);
  EXPECT_EQ(lex.action_for("OverTime"), "Cut overtime");
  EXPECT_EQ(lex.action_for("Unknown"), "Review this factor (Unknown) with the employee");
  const Lexicon file = Lexicon::load(fixtures::lexicon_tsv());
  EXPECT_EQ(file.size(), 30u);
  EXPECT_THROW(Lexicon::load("/nonexistent.tsv"), DataError);
}

TEST(TemplateNarrative, ReasonsAndSuggestions) {
  Lexicon lex;
  lex.set("MonthlyIncome", "Review pay");
  const Narrative n = template_narrative(sample_explanation(), 3, lex);
  EXPECT_EQ(n.source, NarrativeSource::template_fallback);
  ASSERT_EQ(n.reasons.size(), 3u);
  EXPECT_EQ(n.reasons[0], "MonthlyIncome pushes toward leaving (SHAP value: 0.42)");
  EXPECT_EQ(n.reasons[1], "Age pushes toward staying (SHAP value: -0.30)");
  EXPECT_EQ(n.suggestions[0], "Review pay");
  EXPECT_EQ(n.suggestions.size(), 2u);

  const Narrative flat = template_narrative(
      ShapExplanation({0.0, 0.0}, 0.2, 0.2, OutputSpace::probability, {0, 0}, {"a", "b"}), 3, lex);
  ASSERT_EQ(flat.reasons.size(), 1u);
  EXPECT_TRUE(flat.suggestions.empty());
  const Narrative staying = template_narrative(
      ShapExplanation({-0.2, 0.0}, 0.4, 0.2, OutputSpace::probability, {0, 0}, {"a", "b"}), 3, lex);
  EXPECT_EQ(staying.suggestions.size(), 1u);
  EXPECT_THROW(template_narrative(sample_explanation(), 0, lex), ArgumentError);
}

TEST(CompletionText, BulletsSplitIntoSections) {
  const auto n = parse_completion_text(
      "Reasons:\n- Works overtime\n* Low income\n\nSuggestions to retain:\n1. Reduce overtime\n2) Raise pay\n");
  ASSERT_TRUE(n);
  EXPECT_EQ(n->reasons, (std::vector<std::string>{"Works overtime", "Low income"}));
  EXPECT_EQ(n->suggestions, (std::vector<std::string>{"Reduce overtime", "Raise pay"}));
  EXPECT_FALSE(parse_completion_text("no bullets at all"));
}

TEST(Completion, ExternalSuccessSendsPromptAndKey) {
  MockCompletion mock([](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"choices", {{{"text", "- Overtime\nHow to retain:\n- Flexible hours"}}}}}.dump(),
                    "application/json");
  });
  ::setenv("ATTRITION_TEST_KEY", "secret-token", 1);
  CompletionConfig cfg;
  cfg.url = mock.url();
  cfg.credential_env = "ATTRITION_TEST_KEY";
  cfg.timeout_seconds = 5;
  const ShapExplanation e = sample_explanation();
  const Prompt p = build_prompt(e);
  const Narrative n = complete(p, cfg, e, 3, Lexicon{});
  EXPECT_EQ(n.source, NarrativeSource::external);
  EXPECT_EQ(n.reasons, (std::vector<std::string>{"Overtime"}));
  EXPECT_EQ(n.suggestions, (std::vector<std::string>{"Flexible hours"}));
  const json sent = json::parse(mock.last_body);
  EXPECT_EQ(sent.at("prompt"), p.text);
  EXPECT_EQ(sent.at("model"), cfg.model);
  EXPECT_EQ(mock.last_auth, "Bearer secret-token");
}

TEST(Completion, FailuresFallBackToTemplate) {
  const ShapExplanation e = sample_explanation();
  const Narrative offline = template_narrative(e, 3, Lexicon{});
  {
    MockCompletion mock([](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    CompletionConfig cfg;
    cfg.url = mock.url();
    const Narrative n = complete(build_prompt(e), cfg, e, 3, Lexicon{});
    EXPECT_EQ(n.source, NarrativeSource::template_fallback);
    ASSERT_TRUE(n.warning);
    EXPECT_NE(n.warning->find("500"), std::string::npos);
    EXPECT_EQ(n.reasons, offline.reasons);
  }
  {
    MockCompletion mock([](const httplib::Request&, httplib::Response& res) {
      res.set_content("{\"text\": \"just prose\"}", "application/json");
    });
    CompletionConfig cfg;
    cfg.url = mock.url();
    EXPECT_EQ(complete(build_prompt(e), cfg, e, 3, Lexicon{}).source, NarrativeSource::template_fallback);
  }
  CompletionConfig unreachable;
  unreachable.url = "http://127.0.0.1:1/v1/completions";
  unreachable.timeout_seconds = 1;
  EXPECT_EQ(complete(build_prompt(e), unreachable, e, 3, Lexicon{}).source,
            NarrativeSource::template_fallback);
  EXPECT_TRUE(complete(build_prompt(e), CompletionConfig{}, e, 3, Lexicon{}).warning);
}

TEST(WhatIf, EditsAreAppliedAndValidated) {
  EncodedTable t;
  Rng rng(3);
  t = fixtures::random_table(rng, 200, 3, 0.4);
  for (std::size_t i = 0; i < t.n_rows(); ++i) {
    t.features(i, 2) = static_cast<double>(i % 3);
    if (t.labels[i]) t.features(i, 0) += 1.5;
  }
  t.feature_names = {"Income", "Age", "OverTime"};
  t.column_kinds[2] = ColumnKind::categorical;
  CategoryCodebook cb;
  cb.add_column("OverTime", {"Yes", "No", "Sometimes"});
  const Explainer ex(Predictor(fit(ModelKind::LogisticRegression, t), {}), t.features);
  const auto x = t.row(0);
  const WhatIfResult r = what_if(ex, x, {{"Income", 3.0}, {"OverTime", 1.0}}, cb);
  EXPECT_EQ(r.original_proba, ex.predictor().proba(x));
  EXPECT_EQ(r.edited_instance[0], 3.0);
  EXPECT_EQ(r.edited_instance[1], x[1]);
  EXPECT_EQ(r.edited_instance[2], 1.0);
  EXPECT_EQ(r.new_proba, ex.predictor().proba(r.edited_instance));
  ASSERT_EQ(r.edits.size(), 2u);
  EXPECT_EQ(r.edits[0].old_value, x[0]);
  EXPECT_EQ(r.new_explanation.feature_values(), r.edited_instance);
  EXPECT_THROW(what_if(ex, x, {{"Nope", 1.0}}, cb), ArgumentError);
  EXPECT_THROW(what_if(ex, x, {{"OverTime", 3.0}}, cb), ArgumentError);
  EXPECT_THROW(what_if(ex, x, {{"OverTime", 0.5}}, cb), ArgumentError);
  const WhatIfResult none = what_if(ex, x, {}, cb);
  EXPECT_EQ(none.new_proba, none.original_proba);
}
