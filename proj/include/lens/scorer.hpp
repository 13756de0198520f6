#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lens/types.hpp"

namespace lens {

struct ScorerUnavailable : LensError {
  using LensError::LensError;
};
struct ProtocolError : LensError {
  using LensError::LensError;
};

/// Marker test id for the content-free calibration probe.
constexpr int kContentFreeId = -1;

// Structured view of an ICL request: which examples the context was rendered
// from and which label each completion verbalizes. Wire backends ignore it;
// the planted backend requires it.
struct IclView {
  std::vector<int> demo_ids;
  int test_id = kContentFreeId;
  std::vector<int> completion_labels;
};

struct ScorerRequest {
  std::string context;
  std::vector<std::string> completions;
  std::optional<IclView> icl;

  void validate() const;
};

// Per-completion sequence probabilities, aligned with the request's
// completion order. These are raw conditional probabilities and do not
// sum to 1 across labels.
struct LabelProbabilities {
  std::vector<double> probs;
};

/// The conditional-probability oracle every stage reduces to. Implementations
/// must be deterministic for a fixed backend identity and safe to call from
/// multiple threads. backend_calls() counts real (non-cache) invocations and
/// is the counter all complexity budgets are asserted against.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual LabelProbabilities score(const ScorerRequest& request) = 0;

  /// Stable identity string; part of every cache key.
  virtual std::string backend_id() const = 0;

  virtual uint64_t backend_calls() const { return calls_.load(); }

 protected:
  void count_call() { calls_.fetch_add(1); }

 private:
  std::atomic<uint64_t> calls_{0};
};

}  // namespace lens
