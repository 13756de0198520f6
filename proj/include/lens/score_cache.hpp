#pragma once

#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "lens/scorer.hpp"

namespace lens {

// Content-addressed log-probability cache. Keys are
// sha256(backend_id \0 context \0 completion); values are natural-log
// probabilities. Persistence is an append-only JSONL file compacted on load,
// so entries are independent of insertion order and duplicate writes of the
// same content are benign.
class ScoreCache {
 public:
  ScoreCache() = default;

  /// In-memory cache backed by `path`; loads existing entries, appends new ones.
  explicit ScoreCache(const std::string& path);

  static std::string key_for(const std::string& backend_id,
                             const std::string& context,
                             const std::string& completion);

  std::optional<double> lookup(const std::string& key) const;
  void insert(const std::string& key, double logprob);

  size_t size() const;

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, double> entries_;
  std::string path_;
  std::ofstream appender_;
};

/// Wraps a backend with the cache; hits never reach the backend.
class CachingScorer : public Scorer {
 public:
  CachingScorer(Scorer& backend, ScoreCache& cache)
      : backend_(backend), cache_(cache) {}

  LabelProbabilities score(const ScorerRequest& request) override;
  std::string backend_id() const override { return backend_.backend_id(); }
  uint64_t backend_calls() const override { return backend_.backend_calls(); }

  uint64_t cache_hits() const { return hits_.load(); }

 private:
  Scorer& backend_;
  ScoreCache& cache_;
  std::atomic<uint64_t> hits_{0};
};

}  // namespace lens
