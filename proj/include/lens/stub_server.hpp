#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace lens {

// Minimal in-process server speaking the logprob wire protocol; used by the
// conformance tests and the lens-stub-scorer tool. The token model maps
// (prompt, completion) to a vector of token logprobs.
class StubScorerServer {
 public:
  using TokenModel = std::function<std::vector<double>(
      const std::string& prompt, const std::string& completion)>;

  explicit StubScorerServer(TokenModel model);
  ~StubScorerServer();

  /// Binds to 127.0.0.1 on a free port and serves in a background thread.
  /// Returns the endpoint URL.
  std::string start();
  /// Serves on a fixed port in the calling thread (tool mode).
  void run_blocking(const std::string& host, int port);
  void stop();

  uint64_t requests_seen() const { return requests_.load(); }

  /// Fail the next n requests with HTTP 500 before behaving normally again.
  void fail_next(int n) { fail_next_.store(n); }
  /// Delay every response by the given number of milliseconds.
  void set_delay_ms(int ms) { delay_ms_.store(ms); }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  TokenModel model_;
  std::atomic<uint64_t> requests_{0};
  std::atomic<int> fail_next_{0};
  std::atomic<int> delay_ms_{0};
};

/// A deterministic token model: one logprob per completion character,
/// derived from a hash of the prompt and completion. Handy for smoke runs.
StubScorerServer::TokenModel hashed_token_model(uint64_t seed);

}  // namespace lens
