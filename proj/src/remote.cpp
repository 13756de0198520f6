#include "lens/remote.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>

namespace lens {

namespace {

std::pair<std::string, std::string> split_endpoint(const std::string& url) {
  // httplib takes scheme://host:port and the path separately.
  size_t scheme = url.find("://");
  size_t path_start = scheme == std::string::npos
                          ? url.find('/')
                          : url.find('/', scheme + 3);
  if (path_start == std::string::npos) return {url, ""};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

RemoteOptions RemoteOptions::from_env(RemoteOptions base) {
  if (base.endpoint.empty()) {
    if (const char* url = std::getenv("LENS_SCORER_URL")) base.endpoint = url;
  }
  if (const char* t = std::getenv("LENS_SCORER_TIMEOUT_MS"))
    base.timeout_ms = std::atoi(t);
  if (const char* r = std::getenv("LENS_SCORER_RETRIES"))
    base.retries = std::atoi(r);
  return base;
}

struct RemoteScorer::Impl {
  explicit Impl(const RemoteOptions& options) {
    auto [host, path] = split_endpoint(options.endpoint);
    base_path = path;
    client = std::make_unique<httplib::Client>(host);
    client->set_connection_timeout(0, options.timeout_ms * 1000);
    client->set_read_timeout(0, options.timeout_ms * 1000);
    client->set_write_timeout(0, options.timeout_ms * 1000);
  }
  std::unique_ptr<httplib::Client> client;
  std::string base_path;
};

RemoteScorer::RemoteScorer(RemoteOptions options) : options_(std::move(options)) {
  if (options_.endpoint.empty())
    throw ConfigError(
        "remote scorer: no endpoint configured (set LENS_SCORER_URL)");
  impl_ = std::make_unique<Impl>(options_);
}

RemoteScorer::~RemoteScorer() = default;

std::string RemoteScorer::backend_id() const {
  return "remote:" + options_.endpoint;
}

LabelProbabilities RemoteScorer::score(const ScorerRequest& request) {
  request.validate();
  nlohmann::json body{{"prompt", request.context},
                      {"completions", request.completions}};
  const std::string payload = body.dump();
  const std::string path = impl_->base_path + "/v1/logprobs";

  httplib::Result res;
  std::string last_error;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    count_call();
    res = impl_->client->Post(path, payload, "application/json");
    if (res && res->status >= 200 && res->status < 300) break;
    last_error = res ? "HTTP " + std::to_string(res->status)
                     : httplib::to_string(res.error());
    res = httplib::Result();
  }
  if (!res)
    throw ScorerUnavailable("remote scorer unavailable after " +
                            std::to_string(options_.retries + 1) +
                            " attempts: " + last_error);

  nlohmann::json doc = nlohmann::json::parse(res->body, nullptr, false);
  if (doc.is_discarded() || !doc.contains("logprobs") ||
      !doc["logprobs"].is_array())
    throw ProtocolError("remote scorer: malformed response body");
  const auto& rows = doc["logprobs"];
  if (rows.size() != request.completions.size())
    throw ProtocolError("remote scorer: got " + std::to_string(rows.size()) +
                        " logprob rows for " +
                        std::to_string(request.completions.size()) +
                        " completions");

  LabelProbabilities out;
  out.probs.reserve(rows.size());
  for (const auto& row : rows) {
    if (!row.is_array() || row.empty())
      throw ProtocolError("remote scorer: empty logprob row");
    double sum = 0.0;
    for (const auto& v : row) {
      if (!v.is_number())
        throw ProtocolError("remote scorer: non-numeric token logprob");
      double lp = v.get<double>();
      if (!std::isfinite(lp))
        throw ProtocolError("remote scorer: non-finite token logprob");
      sum += lp;
    }
    if (sum > 0.0)
      throw ProtocolError("remote scorer: positive total logprob implies probability > 1");
    out.probs.push_back(std::exp(sum));
  }
  return out;
}

}  // namespace lens
