#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "attrition/artifacts.hpp"
#include "attrition/narrate.hpp"
#include "json.hpp"

namespace attrition {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t payload_limit = 1 << 20;
  double request_timeout_seconds = 30.0;
  std::size_t narrative_top_k = 5;
  bool access_log = true;  ///< one JSON line per request on stderr
  CompletionConfig completion;
};

struct Response {
  int status = 200;
  nlohmann::json body;
};

/// Read-only JSON façade over a loaded pipeline. Handlers are pure
/// functions of the request and the state fixed at construction.
///
/// Instances are given either as {"row": i} (a test-set row) or as
/// {"instance": {feature: value, ...}} with categorical values as text.
class Service {
 public:
  Service(PipelineArtifacts artifacts, Lexicon lexicon, ServiceConfig config = {});

  Response meta() const;
  Response predict(const nlohmann::json& request) const;
  Response explain(const nlohmann::json& request) const;
  Response whatif(const nlohmann::json& request) const;
  Response summary(const nlohmann::json& request) const;
  Response importance(const nlohmann::json& request) const;
  Response dependence(const nlohmann::json& request) const;

  /// Routes "/api/<name>" to its handler; 404 for other paths.
  Response handle(const std::string& path, const nlohmann::json& request) const;

  const Explainer& explainer() const { return explainer_; }
  const PipelineArtifacts& artifacts() const { return artifacts_; }
  /// Explanations of every test row, computed on first use.
  const std::vector<ShapExplanation>& population() const;

  /// Blocks serving HTTP until stop() is called from another thread.
  /// Throws Error if the address cannot be bound.
  void listen();
  /// Binds to an OS-chosen port and returns it; call listen_after_bind next.
  int bind_any_port();
  void listen_after_bind();
  void stop();
  bool running() const;

  ~Service();

 private:
  struct HttpState;

  /// Encoded unweighted row, or a 422 response in `error`.
  std::vector<double> decode_instance(const nlohmann::json& request, Response& error) const;
  nlohmann::json explanation_json(const ShapExplanation& expl, double proba) const;
  void setup_http();

  PipelineArtifacts artifacts_;
  Lexicon lexicon_;
  ServiceConfig config_;
  Explainer explainer_;
  mutable std::once_flag population_once_;
  mutable std::vector<ShapExplanation> population_;
  std::unique_ptr<HttpState> http_;
};

/// Encodes a {feature: value} object (categorical values as text). On
/// failure `error` lists the missing, unknown and invalid fields.
struct DecodedInstance {
  std::vector<double> row;
  nlohmann::json error;  ///< null on success
  bool ok() const { return error.is_null(); }
};
DecodedInstance decode_instance(const nlohmann::json& instance, const std::vector<std::string>& names,
                                const CategoryCodebook& codebook);

/// Translates an encoded row into a request instance with category text.
nlohmann::json instance_to_json(std::span<const double> row, const std::vector<std::string>& names,
                                const CategoryCodebook& codebook);

}  // namespace attrition
