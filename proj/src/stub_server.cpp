#include "lens/stub_server.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <thread>

#include "lens/rng.hpp"

namespace lens {

struct StubScorerServer::Impl {
  httplib::Server server;
  std::thread worker;
};

StubScorerServer::StubScorerServer(TokenModel model)
    : impl_(std::make_unique<Impl>()), model_(std::move(model)) {
  impl_->server.Post("/v1/logprobs", [this](const httplib::Request& req,
                                            httplib::Response& res) {
    requests_.fetch_add(1);
    int delay = delay_ms_.load();
    if (delay > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    int pending = fail_next_.load();
    while (pending > 0 && !fail_next_.compare_exchange_weak(pending, pending - 1)) {
    }
    if (pending > 0) {
      res.status = 500;
      res.set_content("{\"error\":\"injected failure\"}", "application/json");
      return;
    }
    nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("prompt") ||
        !body.contains("completions") || !body["completions"].is_array()) {
      res.status = 400;
      res.set_content("{\"error\":\"bad request\"}", "application/json");
      return;
    }
    const std::string prompt = body["prompt"].get<std::string>();
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& c : body["completions"])
      rows.push_back(model_(prompt, c.get<std::string>()));
    nlohmann::json reply{{"logprobs", rows}};
    res.set_content(reply.dump(), "application/json");
  });
}

StubScorerServer::~StubScorerServer() { stop(); }

std::string StubScorerServer::start() {
  int port = impl_->server.bind_to_any_port("127.0.0.1");
  if (port <= 0) throw std::runtime_error("stub server: bind failed");
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return "http://127.0.0.1:" + std::to_string(port);
}

void StubScorerServer::run_blocking(const std::string& host, int port) {
  if (!impl_->server.listen(host, port))
    throw std::runtime_error("stub server: listen failed on " + host + ":" +
                             std::to_string(port));
}

void StubScorerServer::stop() {
  impl_->server.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

StubScorerServer::TokenModel hashed_token_model(uint64_t seed) {
  return [seed](const std::string& prompt, const std::string& completion) {
    uint64_t h = mix64(seed, 0x73747562);
    for (char ch : prompt) h = mix64(h, static_cast<unsigned char>(ch));
    std::vector<double> out;
    for (char ch : completion) {
      h = mix64(h, static_cast<unsigned char>(ch));
      out.push_back(-0.05 - 3.0 * to_unit(h));  // logprob in [-3.05, -0.05)
    }
    if (out.empty()) out.push_back(-0.5);
    return out;
  };
}

}  // namespace lens
