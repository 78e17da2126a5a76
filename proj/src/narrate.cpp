#include "attrition/narrate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "attrition/error.hpp"
#include "httplib.h"
#include "json.hpp"
#include "spdlog/spdlog.h"

namespace attrition {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  if (std::string_view(buf) == "-0.00") return "0.00";
  return buf;
}

std::vector<std::size_t> by_magnitude(const std::vector<double>& phi) {
  std::vector<std::size_t> order(phi.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(phi[a]) > std::abs(phi[b]);
  });
  return order;
}

// Strips a leading "-", "*", "•" or "N." / "N)" marker; nullopt if none.
std::optional<std::string> bullet_body(const std::string& line) {
  const std::string t = trim(line);
  if (t.empty()) return std::nullopt;
  if (t[0] == '-' || t[0] == '*') return trim(std::string_view(t).substr(1));
  if (t.rfind("\xe2\x80\xa2", 0) == 0) return trim(std::string_view(t).substr(3));
  std::size_t d = 0;
  while (d < t.size() && std::isdigit(static_cast<unsigned char>(t[d]))) ++d;
  if (d > 0 && d < t.size() && (t[d] == '.' || t[d] == ')')) return trim(std::string_view(t).substr(d + 1));
  return std::nullopt;
}

struct Endpoint {
  std::string origin;
  std::string path;
};

Endpoint split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ArgumentError("completion URL needs a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

std::string to_string(NarrativeSource source) {
  return source == NarrativeSource::external ? "external" : "template";
}

Lexicon Lexicon::parse(const std::string& text) {
  Lexicon lex;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("lexicon line " + std::to_string(line_no) + ": expected feature<TAB>action");
    }
    lex.set(trim(line.substr(0, tab)), trim(line.substr(tab + 1)));
  }
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open lexicon " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Lexicon::set(std::string feature, std::string action) {
  actions_[std::move(feature)] = std::move(action);
}

std::string Lexicon::action_for(const std::string& feature) const {
  const auto it = actions_.find(feature);
  if (it != actions_.end()) return it->second;
  return "Review this factor (" + feature + ") with the employee";
}

std::string shap_line(const std::string& name, double phi) {
  return "The SHAP value for feature '" + name + "' is " + fixed2(phi) + ".";
}

Prompt build_prompt(const ShapExplanation& expl, const PolicyRules& rules) {
  std::string text;
  if (!rules.rules.empty()) {
    text += "Company rules:\n";
    for (std::size_t i = 0; i < rules.rules.size(); ++i) {
      text += std::to_string(i + 1) + ". " + rules.rules[i] + "\n";
    }
    text += "\n";
  }
  for (std::size_t j = 0; j < expl.phi().size(); ++j) {
    text += shap_line(expl.feature_names()[j], expl.phi()[j]) + "\n";
  }
  text += kPromptInstruction;
  return {text};
}

Narrative template_narrative(const ShapExplanation& expl, std::size_t top_k,
                             const Lexicon& lexicon) {
  if (top_k == 0) throw ArgumentError("top_k must be at least 1");
  Narrative n;
  n.source = NarrativeSource::template_fallback;
  const auto& phi = expl.phi();
  for (std::size_t j : by_magnitude(phi)) {
    if (n.reasons.size() == top_k || phi[j] == 0.0) break;
    const std::string& name = expl.feature_names()[j];
    const char* direction = phi[j] > 0.0 ? "pushes toward leaving" : "pushes toward staying";
    n.reasons.push_back(name + " " + direction + " (SHAP value: " + fixed2(phi[j]) + ")");
    if (phi[j] > 0.0) {
      std::string action = lexicon.action_for(name);
      if (std::find(n.suggestions.begin(), n.suggestions.end(), action) == n.suggestions.end()) {
        n.suggestions.push_back(std::move(action));
      }
    }
  }
  if (n.reasons.empty()) {
    n.reasons.push_back("No dominant factors: the prediction equals the base value");
  } else if (n.suggestions.empty()) {
    n.suggestions.push_back("Maintain the current conditions; none of the leading factors "
                            "pushes toward leaving");
  }
  return n;
}

std::optional<Narrative> parse_completion_text(const std::string& text) {
  Narrative n;
  n.source = NarrativeSource::external;
  bool in_suggestions = false;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (auto body = bullet_body(line)) {
      if (body->empty()) continue;
      (in_suggestions ? n.suggestions : n.reasons).push_back(*body);
    } else {
      const std::string l = lower(line);
      if (l.find("suggest") != std::string::npos || l.find("retain") != std::string::npos) {
        in_suggestions = true;
      }
    }
  }
  if (n.reasons.empty() && n.suggestions.empty()) return std::nullopt;
  return n;
}

Narrative complete(const Prompt& prompt, const CompletionConfig& config,
                   const ShapExplanation& expl, std::size_t top_k, const Lexicon& lexicon) {
  const auto fallback = [&](const std::string& why) {
    if (!config.url.empty()) spdlog::warn("completion endpoint: {}; using template narrative", why);
    Narrative n = template_narrative(expl, top_k, lexicon);
    n.warning = why;
    return n;
  };
  if (config.url.empty()) return fallback("no completion endpoint configured");
  try {
    const Endpoint ep = split_url(config.url);
    httplib::Client client(ep.origin);
    const auto secs = static_cast<time_t>(config.timeout_seconds);
    const auto usecs = static_cast<time_t>((config.timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (const char* key = std::getenv(config.credential_env.c_str()); key != nullptr && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    const nlohmann::json body{{"model", config.model}, {"prompt", prompt.text}};
    auto res = client.Post(ep.path, headers, body.dump(), "application/json");
    if (!res) return fallback("request failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300) {
      return fallback("status " + std::to_string(res->status));
    }
    const auto doc = nlohmann::json::parse(res->body, nullptr, false);
    if (doc.is_discarded()) return fallback("response is not JSON");
    std::string text;
    if (doc.contains("text") && doc["text"].is_string()) {
      text = doc["text"].get<std::string>();
    } else if (doc.contains("choices") && doc["choices"].is_array() && !doc["choices"].empty() &&
               doc["choices"][0].contains("text") && doc["choices"][0]["text"].is_string()) {
      text = doc["choices"][0]["text"].get<std::string>();
    } else {
      return fallback("response has no completion text");
    }
    auto parsed = parse_completion_text(text);
    if (!parsed) return fallback("completion has no bullet points");
    return *parsed;
  } catch (const std::exception& e) {
    return fallback(e.what());
  }
}

WhatIfResult what_if(const Explainer& explainer, std::span<const double> x,
                     const std::vector<FeatureEdit>& edits, const CategoryCodebook& codebook) {
  const auto& names = explainer.predictor().feature_names();
  if (x.size() != names.size()) {
    throw ArgumentError("expected " + std::to_string(names.size()) + " features, got " +
                        std::to_string(x.size()));
  }
  std::vector<double> edited(x.begin(), x.end());
  std::vector<AppliedEdit> applied;
  for (const auto& e : edits) {
    const auto it = std::find(names.begin(), names.end(), e.feature);
    if (it == names.end()) throw ArgumentError("unknown feature '" + e.feature + "'");
    if (!std::isfinite(e.value)) throw ArgumentError("non-finite value for '" + e.feature + "'");
    if (const auto* col = codebook.find(e.feature)) {
      const double code = e.value;
      if (code != std::floor(code) || code < 0.0 ||
          code >= static_cast<double>(col->categories.size())) {
        throw ArgumentError("invalid category code " + fixed2(code) + " for '" + e.feature + "'");
      }
    }
    const auto j = static_cast<std::size_t>(it - names.begin());
    applied.push_back({e.feature, edited[j], e.value});
    edited[j] = e.value;
  }
  const double original = explainer.predictor().proba(x);
  const double updated = explainer.predictor().proba(edited);
  ShapExplanation expl = explainer.explain(edited);
  return WhatIfResult{original, updated, std::move(applied), std::move(edited), std::move(expl)};
}

}  // namespace attrition
