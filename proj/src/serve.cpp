#include "attrition/serve.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

#include "attrition/error.hpp"
#include "httplib.h"

namespace attrition {
namespace {

using nlohmann::json;

Response unprocessable(std::string message, json details = json::object()) {
  details["error"] = std::move(message);
  return {422, std::move(details)};
}

std::optional<long long> as_integer(const std::string& text) {
  long long v = 0;
  const auto* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) return std::nullopt;
  return v;
}

}  // namespace

struct Service::HttpState {
  httplib::Server server;
  bool bound = false;
};

json instance_to_json(std::span<const double> row, const std::vector<std::string>& names,
                      const CategoryCodebook& codebook) {
  json inst = json::object();
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (codebook.find(names[j])) {
      inst[names[j]] = codebook.decode(names[j], static_cast<int>(row[j]));
    } else {
      inst[names[j]] = row[j];
    }
  }
  return inst;
}

DecodedInstance decode_instance(const json& inst, const std::vector<std::string>& names,
                                const CategoryCodebook& codebook) {
  DecodedInstance out;
  if (!inst.is_object()) {
    out.error = {{"error", "instance must be a JSON object"}};
    return out;
  }
  out.row.assign(names.size(), 0.0);
  json missing = json::array(), unknown = json::array(), invalid = json::array();
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (!inst.contains(names[j])) {
      missing.push_back(names[j]);
      continue;
    }
    const json& v = inst[names[j]];
    if (const auto* col = codebook.find(names[j])) {
      const auto it = v.is_string()
                          ? std::find(col->categories.begin(), col->categories.end(), v.get<std::string>())
                          : col->categories.end();
      if (it == col->categories.end()) {
        invalid.push_back({{"feature", names[j]}, {"allowed", col->categories}});
      } else {
        out.row[j] = static_cast<double>(it - col->categories.begin());
      }
    } else if (v.is_number()) {
      out.row[j] = v.get<double>();
    } else {
      invalid.push_back({{"feature", names[j]}, {"expected", "number"}});
    }
  }
  for (const auto& item : inst.items()) {
    if (std::find(names.begin(), names.end(), item.key()) == names.end()) unknown.push_back(item.key());
  }
  if (!missing.empty() || !unknown.empty() || !invalid.empty()) {
    out.error = {{"error", "invalid instance"}, {"missing", missing}, {"unknown", unknown}, {"invalid", invalid}};
  }
  return out;
}

Service::Service(PipelineArtifacts artifacts, Lexicon lexicon, ServiceConfig config)
    : artifacts_(std::move(artifacts)),
      lexicon_(std::move(lexicon)),
      config_(std::move(config)),
      explainer_(Predictor(artifacts_.model, artifacts_.weights), artifacts_.background,
                 artifacts_.explain) {}

const std::vector<ShapExplanation>& Service::population() const {
  std::call_once(population_once_,
                 [this] { population_ = explainer_.explain_all(artifacts_.test.features); });
  return population_;
}

Service::~Service() { stop(); }

std::vector<double> Service::decode_instance(const json& request, Response& error) const {
  const auto& names = artifacts_.model.feature_names;
  if (!request.is_object()) {
    error = unprocessable("request body must be a JSON object");
    return {};
  }
  if (request.contains("row")) {
    const auto& r = request["row"];
    if (!r.is_number_integer() || r.get<long long>() < 0 ||
        r.get<long long>() >= static_cast<long long>(artifacts_.test.n_rows())) {
      error = unprocessable("row must be an integer in [0, " +
                            std::to_string(artifacts_.test.n_rows()) + ")");
      return {};
    }
    const auto row = artifacts_.test.row(static_cast<std::size_t>(r.get<long long>()));
    return {row.begin(), row.end()};
  }
  if (!request.contains("instance") || !request["instance"].is_object()) {
    error = unprocessable("expected \"row\" or an \"instance\" object");
    return {};
  }
  auto decoded = attrition::decode_instance(request["instance"], names, artifacts_.codebook);
  if (!decoded.ok()) {
    error = {422, std::move(decoded.error)};
    return {};
  }
  return std::move(decoded.row);
}

json Service::explanation_json(const ShapExplanation& expl, double proba) const {
  const ForcePlotData force = force_data(expl);
  json contributions = json::array();
  for (const auto& c : force.contributions) {
    contributions.push_back(
        {{"feature", c.name}, {"value", c.feature_value}, {"shap", c.phi}, {"sign", c.sign}});
  }
  return {{"proba", proba},
          {"label", proba >= 0.5 ? 1 : 0},
          {"space", to_string(expl.space())},
          {"base_value", expl.base_value()},
          {"output_value", expl.output_value()},
          {"feature_names", expl.feature_names()},
          {"feature_values", expl.feature_values()},
          {"phi", expl.phi()},
          {"contributions", contributions}};
}

Response Service::meta() const {
  const auto& m = artifacts_.model;
  json features = json::array();
  for (std::size_t j = 0; j < m.feature_names.size(); ++j) {
    json f{{"name", m.feature_names[j]}};
    if (const auto* col = artifacts_.codebook.find(m.feature_names[j])) {
      f["kind"] = "categorical";
      f["categories"] = col->categories;
    } else {
      f["kind"] = "numeric";
    }
    features.push_back(std::move(f));
  }
  return {200,
          {{"kind", to_string(m.kind)},
           {"features", features},
           {"feature_names", m.feature_names},
           {"class_names", {"No", "Yes"}},
           {"positive_class", "Yes"},
           {"explanation_space", to_string(explainer_.space())},
           {"weights", weights_to_json(artifacts_.weights)},
           {"test_rows", artifacts_.test.n_rows()},
           {"background_rows", artifacts_.background.rows()}}};
}

Response Service::predict(const json& request) const {
  Response err;
  const auto x = decode_instance(request, err);
  if (x.empty()) return err;
  const double p = explainer_.predictor().proba(x);
  return {200, {{"proba", p}, {"label", p >= 0.5 ? 1 : 0}, {"label_name", p >= 0.5 ? "Yes" : "No"}}};
}

Response Service::explain(const json& request) const {
  Response err;
  const auto x = decode_instance(request, err);
  if (x.empty()) return err;
  const ShapExplanation expl = explainer_.explain(x);
  json body = explanation_json(expl, explainer_.predictor().proba(x));
  body["prompt"] = build_prompt(expl).text;
  return {200, std::move(body)};
}

Response Service::whatif(const json& request) const {
  Response err;
  const auto x = decode_instance(request, err);
  if (x.empty()) return err;
  const auto& names = artifacts_.model.feature_names;
  std::vector<FeatureEdit> edits;
  if (request.contains("edits")) {
    if (!request["edits"].is_object()) return unprocessable("\"edits\" must be an object");
    json unknown = json::array(), invalid = json::array();
    for (const auto& item : request["edits"].items()) {
      const std::string& name = item.key();
      if (std::find(names.begin(), names.end(), name) == names.end()) {
        unknown.push_back(name);
        continue;
      }
      if (const auto* col = artifacts_.codebook.find(name)) {
        const auto it = item.value().is_string()
                            ? std::find(col->categories.begin(), col->categories.end(),
                                        item.value().get<std::string>())
                            : col->categories.end();
        if (it == col->categories.end()) {
          invalid.push_back({{"feature", name}, {"allowed", col->categories}});
          continue;
        }
        edits.push_back({name, static_cast<double>(it - col->categories.begin())});
      } else if (item.value().is_number()) {
        edits.push_back({name, item.value().get<double>()});
      } else {
        invalid.push_back({{"feature", name}, {"expected", "number"}});
      }
    }
    if (!unknown.empty() || !invalid.empty()) {
      return unprocessable("invalid edits", {{"unknown", unknown}, {"invalid", invalid}});
    }
  }
  const std::string mode = request.value("narrative", std::string("template"));
  if (mode != "template" && mode != "external") {
    return unprocessable("\"narrative\" must be \"template\" or \"external\"");
  }

  const WhatIfResult r = what_if(explainer_, x, edits, artifacts_.codebook);
  Narrative narrative;
  if (mode == "external") {
    narrative = complete(build_prompt(r.new_explanation), config_.completion, r.new_explanation,
                         config_.narrative_top_k, lexicon_);
    if (narrative.source != NarrativeSource::external) {
      return {503, {{"error", "completion endpoint unavailable"},
                    {"detail", narrative.warning.value_or("")}}};
    }
  } else {
    narrative = template_narrative(r.new_explanation, config_.narrative_top_k, lexicon_);
  }
  json applied = json::array();
  for (const auto& e : r.edits) {
    applied.push_back({{"feature", e.feature}, {"old_value", e.old_value}, {"new_value", e.new_value}});
  }
  return {200,
          {{"original_proba", r.original_proba},
           {"new_proba", r.new_proba},
           {"edits", applied},
           {"instance", instance_to_json(r.edited_instance, names, artifacts_.codebook)},
           {"explanation", explanation_json(r.new_explanation, r.new_proba)},
           {"narrative",
            {{"reasons", narrative.reasons},
             {"suggestions", narrative.suggestions},
             {"source", to_string(narrative.source)}}}}};
}

Response Service::summary(const json&) const {
  const SummaryPlotData data = summary_data(population());
  json features = json::array();
  for (const auto& f : data.features) {
    json points = json::array();
    for (const auto& p : f.points) points.push_back({{"shap", p.shap}, {"value", p.normalized_value}});
    features.push_back({{"name", f.name}, {"mean_abs", f.mean_abs}, {"points", points}});
  }
  return {200, {{"space", to_string(explainer_.space())}, {"features", features}}};
}

Response Service::importance(const json& request) const {
  std::size_t top_k = 0;
  if (request.is_object() && request.contains("top_k")) {
    const auto& k = request["top_k"];
    if (!k.is_number_integer() || k.get<long long>() < 0 ||
        k.get<long long>() > static_cast<long long>(artifacts_.model.n_features())) {
      return unprocessable("top_k must be an integer in [0, " +
                           std::to_string(artifacts_.model.n_features()) + "]");
    }
    top_k = k.get<std::size_t>();
  }
  json ranking = json::array();
  for (const auto& i : mean_abs_importance(population(), top_k)) {
    ranking.push_back({{"feature", i.name}, {"mean_abs", i.mean_abs}});
  }
  return {200, {{"ranking", ranking}}};
}

Response Service::dependence(const json& request) const {
  if (!request.is_object() || !request.contains("feature") || !request["feature"].is_string()) {
    return unprocessable("\"feature\" is required");
  }
  const std::string feature = request["feature"].get<std::string>();
  const auto& names = artifacts_.model.feature_names;
  if (std::find(names.begin(), names.end(), feature) == names.end()) {
    return unprocessable("unknown feature", {{"unknown", {feature}}});
  }
  json points = json::array();
  for (const auto& p : dependence_data(population(), feature)) {
    points.push_back({{"value", p.feature_value}, {"shap", p.shap}});
  }
  return {200, {{"feature", feature}, {"points", points}}};
}

Response Service::handle(const std::string& path, const json& request) const {
  if (path == "/api/meta") return meta();
  if (path == "/api/predict") return predict(request);
  if (path == "/api/explain") return explain(request);
  if (path == "/api/whatif") return whatif(request);
  if (path == "/api/summary") return summary(request);
  if (path == "/api/importance") return importance(request);
  if (path == "/api/dependence") return dependence(request);
  return {404, {{"error", "no such endpoint"}, {"path", path}}};
}

void Service::setup_http() {
  if (http_) return;
  http_ = std::make_unique<HttpState>();
  auto& srv = http_->server;
  srv.set_payload_max_length(config_.payload_limit);
  const auto secs = static_cast<time_t>(config_.request_timeout_seconds);
  srv.set_read_timeout(secs, 0);
  srv.set_write_timeout(secs, 0);
  if (config_.access_log) {
    srv.set_logger([](const httplib::Request& req, const httplib::Response& res) {
      const json line{{"method", req.method}, {"path", req.path}, {"status", res.status},
                      {"request_bytes", req.body.size()}, {"response_bytes", res.body.size()}};
      std::fprintf(stderr, "%s\n", line.dump().c_str());
    });
  }

  const auto reply = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  const auto on_get = [this, reply](const httplib::Request& req, httplib::Response& res) {
    json request = json::object();
    for (const auto& [key, value] : req.params) {
      if (auto v = as_integer(value)) request[key] = *v;
      else request[key] = value;
    }
    try {
      reply(res, handle(req.path, request));
    } catch (const std::exception& e) {
      reply(res, {500, {{"error", e.what()}}});
    }
  };
  const auto on_post = [this, reply](const httplib::Request& req, httplib::Response& res) {
    json request = req.body.empty() ? json::object() : json::parse(req.body, nullptr, false);
    if (request.is_discarded()) {
      reply(res, {400, {{"error", "request body is not valid JSON"}}});
      return;
    }
    try {
      reply(res, handle(req.path, request));
    } catch (const std::exception& e) {
      reply(res, {500, {{"error", e.what()}}});
    }
  };
  for (const char* name : {"meta", "predict", "explain", "whatif", "summary", "importance", "dependence"}) {
    const std::string path = std::string("/api/") + name;
    srv.Get(path, on_get);
    srv.Post(path, on_post);
  }
}

void Service::listen() {
  setup_http();
  if (!http_->server.bind_to_port(config_.host, config_.port)) {
    throw Error("cannot bind " + config_.host + ":" + std::to_string(config_.port));
  }
  http_->bound = true;
  http_->server.listen_after_bind();
}

int Service::bind_any_port() {
  setup_http();
  const int port = http_->server.bind_to_any_port(config_.host);
  if (port < 0) throw Error("cannot bind " + config_.host);
  http_->bound = true;
  return port;
}

void Service::listen_after_bind() {
  if (!http_ || !http_->bound) throw Error("listen_after_bind before bind_any_port");
  http_->server.listen_after_bind();
}

void Service::stop() {
  if (http_) http_->server.stop();
}

bool Service::running() const { return http_ && http_->server.is_running(); }

}  // namespace attrition
