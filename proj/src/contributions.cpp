#include "lens/contributions.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>

namespace lens {

bool ContributionMatrix::has(int candidate_id, int score_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return values_.count({candidate_id, score_id}) != 0;
}

double ContributionMatrix::get(int candidate_id, int score_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = values_.find({candidate_id, score_id});
  if (it == values_.end())
    throw ConsistencyError("contribution (" + std::to_string(candidate_id) +
                           ", " + std::to_string(score_id) +
                           ") was never computed");
  return it->second;
}

std::optional<double> ContributionMatrix::find(int candidate_id,
                                               int score_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = values_.find({candidate_id, score_id});
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void ContributionMatrix::put(int candidate_id, int score_id, double value) {
  std::lock_guard<std::mutex> lock(mu_);
  values_[{candidate_id, score_id}] = value;
}

size_t ContributionMatrix::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return values_.size();
}

void ContributionMatrix::save(const std::string& path) const {
  std::lock_guard<std::mutex> lock(mu_);
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw LensError("cannot write " + path);
  for (const auto& [key, value] : values_) {
    nlohmann::json doc{{"candidate_id", key.first},
                       {"score_id", key.second},
                       {"value", value}};
    out << doc.dump() << '\n';
  }
}

ContributionMatrix ContributionMatrix::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LensError("missing prerequisite artifact: " + path);
  ContributionMatrix m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json doc = nlohmann::json::parse(line);
    m.values_[{doc["candidate_id"].get<int>(), doc["score_id"].get<int>()}] =
        doc["value"].get<double>();
  }
  return m;
}

FeatureVector make_feature_vector(const ContributionMatrix& matrix,
                                  int candidate_id,
                                  std::span<const int> score_set) {
  FeatureVector fv;
  fv.candidate_id = candidate_id;
  fv.values.reserve(score_set.size());
  for (size_t i = 0; i < score_set.size(); ++i) {
    if (score_set[i] == candidate_id) {
      fv.omitted_slot = static_cast<int>(i);
      continue;
    }
    fv.values.push_back(matrix.get(candidate_id, score_set[i]));
  }
  return fv;
}

double cosine_similarity(const FeatureVector& a, const FeatureVector& b,
                         size_t score_set_size) {
  auto aligned = [score_set_size](const FeatureVector& fv) {
    size_t expect = score_set_size - (fv.omitted_slot ? 1 : 0);
    if (fv.values.size() != expect)
      throw LensError("feature vector for candidate " +
                      std::to_string(fv.candidate_id) + " has length " +
                      std::to_string(fv.values.size()) + ", expected " +
                      std::to_string(expect));
    std::vector<double> out(score_set_size, 0.0);
    size_t src = 0;
    for (size_t i = 0; i < score_set_size; ++i) {
      if (fv.omitted_slot && static_cast<size_t>(*fv.omitted_slot) == i) continue;
      out[i] = fv.values[src++];
    }
    return out;
  };
  std::vector<double> va = aligned(a), vb = aligned(b);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < score_set_size; ++i) {
    dot += va[i] * vb[i];
    na += va[i] * va[i];
    nb += vb[i] * vb[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  double sim = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(sim, -1.0, 1.0);
}

ContributionEngine::ContributionEngine(const Dataset& dataset,
                                       const PromptTemplate& tmpl,
                                       Scorer& scorer,
                                       ContributionMatrix& matrix, int workers)
    : dataset_(dataset),
      tmpl_(tmpl),
      scorer_(scorer),
      matrix_(matrix),
      workers_(workers < 1 ? 1 : workers) {}

double ContributionEngine::zero_demo_probability(int score_id) {
  {
    std::lock_guard<std::mutex> lock(zero_mu_);
    auto it = zero_demo_.find(score_id);
    if (it != zero_demo_.end()) return it->second;
  }
  const Example& target = dataset_.by_id(score_id);
  ScorerRequest req;
  req.context = render_context(tmpl_, dataset_, {}, target.text);
  req.completions = {tmpl_.completion_for(target.label)};
  req.icl = IclView{{}, target.id, {target.label}};
  double p = scorer_.score(req).probs.at(0);
  std::lock_guard<std::mutex> lock(zero_mu_);
  zero_demo_.emplace(score_id, p);
  return p;
}

double ContributionEngine::contribution(int candidate_id, int score_id) {
  if (auto hit = matrix_.find(candidate_id, score_id)) return *hit;
  const Example& target = dataset_.by_id(score_id);
  const int demo[] = {candidate_id};
  ScorerRequest req;
  req.context = render_context(tmpl_, dataset_, demo, target.text);
  req.completions = {tmpl_.completion_for(target.label)};
  req.icl = IclView{{candidate_id}, target.id, {target.label}};
  double with_demo = scorer_.score(req).probs.at(0);
  double value = with_demo - zero_demo_probability(score_id);
  matrix_.put(candidate_id, score_id, value);
  return value;
}

double ContributionEngine::infoscore(int candidate_id,
                                     std::span<const int> score_members) {
  double sum = 0.0;
  for (int score_id : score_members) {
    if (score_id == candidate_id) continue;
    sum += contribution(candidate_id, score_id);
  }
  return sum;
}

void ContributionEngine::compute_block(std::span<const int> candidate_ids,
                                       std::span<const int> score_members) {
  // Zero-demo terms first, sequentially, so each is computed exactly once.
  for (int score_id : score_members) zero_demo_probability(score_id);

  if (workers_ == 1 || candidate_ids.size() < 2) {
    for (int c : candidate_ids)
      for (int s : score_members)
        if (c != s) contribution(c, s);
    return;
  }
  size_t per = (candidate_ids.size() + workers_ - 1) / workers_;
  std::vector<std::future<void>> tasks;
  for (size_t begin = 0; begin < candidate_ids.size(); begin += per) {
    size_t end = std::min(begin + per, candidate_ids.size());
    tasks.push_back(std::async(std::launch::async, [this, candidate_ids,
                                                    score_members, begin, end] {
      for (size_t i = begin; i < end; ++i)
        for (int s : score_members)
          if (candidate_ids[i] != s) contribution(candidate_ids[i], s);
    }));
  }
  for (auto& t : tasks) t.get();
}

}  // namespace lens
