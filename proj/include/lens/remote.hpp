#pragma once

#include <memory>
#include <string>

#include "lens/scorer.hpp"

namespace lens {

struct RemoteOptions {
  std::string endpoint;     // e.g. http://127.0.0.1:8311
  int timeout_ms = 30000;
  int retries = 3;          // retries after the first attempt

  /// Fills unset fields from LENS_SCORER_URL, LENS_SCORER_TIMEOUT_MS and
  /// LENS_SCORER_RETRIES.
  static RemoteOptions from_env(RemoteOptions base);
  static RemoteOptions from_env() { return from_env(RemoteOptions{}); }
};

// HTTP client for the logprob wire protocol:
//   POST /v1/logprobs  {"prompt": string, "completions": [string]}
//   -> {"logprobs": [[number, ...], ...]}   one inner array per completion
// Per-completion probability is exp of the summed token logprobs.
class RemoteScorer : public Scorer {
 public:
  explicit RemoteScorer(RemoteOptions options);
  ~RemoteScorer() override;

  LabelProbabilities score(const ScorerRequest& request) override;
  std::string backend_id() const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  RemoteOptions options_;
};

}  // namespace lens
