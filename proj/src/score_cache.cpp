#include "lens/score_cache.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>

#include "lens/digest.hpp"

namespace lens {

void ScorerRequest::validate() const {
  if (completions.empty())
    throw ProtocolError("scorer request has no completions");
  for (size_t i = 0; i < completions.size(); ++i)
    for (size_t j = i + 1; j < completions.size(); ++j)
      if (completions[i] == completions[j])
        throw ProtocolError("scorer request has duplicate completion '" +
                            completions[i] + "'");
}

ScoreCache::ScoreCache(const std::string& path) : path_(path) {
  std::ifstream in(path, std::ios::binary);
  if (in) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
      if (doc.is_discarded() || !doc.contains("key") || !doc.contains("logprob"))
        continue;  // tolerate a torn tail line from a crashed run
      entries_[doc["key"].get<std::string>()] = doc["logprob"].get<double>();
    }
  }
  appender_.open(path, std::ios::app | std::ios::binary);
  if (!appender_) throw LensError("cannot open score cache for append: " + path);
}

std::string ScoreCache::key_for(const std::string& backend_id,
                                const std::string& context,
                                const std::string& completion) {
  std::string blob;
  blob.reserve(backend_id.size() + context.size() + completion.size() + 2);
  blob += backend_id;
  blob.push_back('\0');
  blob += context;
  blob.push_back('\0');
  blob += completion;
  return sha256_hex(blob);
}

std::optional<double> ScoreCache::lookup(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ScoreCache::insert(const std::string& key, double logprob) {
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, inserted] = entries_.emplace(key, logprob);
  (void)it;
  if (inserted && appender_.is_open()) {
    nlohmann::json doc{{"key", key}, {"logprob", logprob}};
    appender_ << doc.dump() << '\n';
    appender_.flush();
  }
}

size_t ScoreCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_.size();
}

LabelProbabilities CachingScorer::score(const ScorerRequest& request) {
  request.validate();
  const std::string backend = backend_id();

  std::vector<double> probs(request.completions.size(),
                            std::numeric_limits<double>::quiet_NaN());
  std::vector<size_t> missing;
  std::vector<std::string> keys(request.completions.size());
  for (size_t i = 0; i < request.completions.size(); ++i) {
    keys[i] = ScoreCache::key_for(backend, request.context, request.completions[i]);
    if (auto hit = cache_.lookup(keys[i])) {
      probs[i] = std::exp(*hit);
      hits_.fetch_add(1);
    } else {
      missing.push_back(i);
    }
  }
  if (!missing.empty()) {
    ScorerRequest sub;
    sub.context = request.context;
    sub.icl = request.icl;
    for (size_t i : missing) sub.completions.push_back(request.completions[i]);
    if (sub.icl) {
      sub.icl->completion_labels.clear();
      for (size_t i : missing)
        sub.icl->completion_labels.push_back(request.icl->completion_labels[i]);
    }
    LabelProbabilities fresh = backend_.score(sub);
    if (fresh.probs.size() != missing.size())
      throw ProtocolError("backend returned " + std::to_string(fresh.probs.size()) +
                          " probabilities for " + std::to_string(missing.size()) +
                          " completions");
    for (size_t k = 0; k < missing.size(); ++k) {
      double p = fresh.probs[k];
      if (!std::isfinite(p) || p < 0.0 || p > 1.0)
        throw ProtocolError("backend produced probability outside [0,1]");
      // p is strictly positive for every supported backend (probabilities
      // come out of exp/logistic), so the log is finite. Returning exp of
      // the stored logprob keeps fresh calls bit-identical with later hits.
      double logprob = std::log(p);
      cache_.insert(keys[missing[k]], logprob);
      probs[missing[k]] = std::exp(logprob);
    }
  }
  return LabelProbabilities{std::move(probs)};
}

}  // namespace lens
