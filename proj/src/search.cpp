#include "lens/search.hpp"

#include <algorithm>
#include <future>
#include <set>

namespace lens {

namespace {

// Deterministic tie-breaking: higher score first, then lower id.
struct ScoredId {
  double score;
  int id;
  bool operator<(const ScoredId& o) const {
    return score != o.score ? score > o.score : id < o.id;
  }
};

bool lex_less(const std::vector<int>& a, const std::vector<int>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

const char* provenance_label(Provenance p) {
  switch (p) {
    case Provenance::kInit: return "init";
    case Provenance::kSubstitution: return "substitution";
    case Provenance::kShuffle: return "shuffle";
  }
  return "unknown";
}

void SearchConfig::validate(const Dataset& dataset, int candidate_count) const {
  if (demo_count < 1) throw ConfigError("search: demo count must be positive");
  if (beam < 1) throw ConfigError("search: beam must be positive");
  if (substitutions < 1 || substitutions > beam)
    throw ConfigError("search: substitutions must lie in [1, beam]");
  if (iterations < 1) throw ConfigError("search: iterations must be positive");
  if (diversity_weight < 0.0)
    throw ConfigError("search: diversity weight must be non-negative");
  if (validation_size < 1)
    throw ConfigError("search: validation size must be positive");
  if (candidate_count < demo_count)
    throw ConfigError("search: " + std::to_string(candidate_count) +
                      " candidates cannot fill " + std::to_string(demo_count) +
                      " demo slots");
  if (label_balance && demo_count % dataset.label_count() != 0)
    throw ConfigError("search: label balance needs demo count divisible by " +
                      std::to_string(dataset.label_count()) + " labels");
}

SearchContext::SearchContext(const Dataset& dataset, std::vector<int> candidates,
                             const ContributionMatrix& matrix,
                             std::vector<int> score_set, double diversity_weight)
    : dataset_(dataset),
      candidates_(std::move(candidates)),
      score_set_(std::move(score_set)),
      diversity_weight_(diversity_weight) {
  for (int id : candidates_) {
    FeatureVector fv = make_feature_vector(matrix, id, score_set_);
    double info = 0.0;
    for (double v : fv.values) info += v;
    infoscores_.emplace(id, info);
    features_.emplace(id, std::move(fv));
  }
}

double SearchContext::infoscore(int id) const {
  auto it = infoscores_.find(id);
  if (it == infoscores_.end())
    throw ConsistencyError("no cached InfoScore for candidate " +
                           std::to_string(id));
  return it->second;
}

double SearchContext::similarity(int a, int b) const {
  std::pair<int, int> key = a <= b ? std::make_pair(a, b) : std::make_pair(b, a);
  {
    std::lock_guard<std::mutex> lock(sim_mu_);
    auto it = sim_cache_.find(key);
    if (it != sim_cache_.end()) return it->second;
  }
  auto fa = features_.find(a);
  auto fb = features_.find(b);
  if (fa == features_.end() || fb == features_.end())
    throw ConsistencyError("no cached feature vector for candidate " +
                           std::to_string(fa == features_.end() ? a : b));
  double sim = cosine_similarity(fa->second, fb->second, score_set_.size());
  std::lock_guard<std::mutex> lock(sim_mu_);
  sim_cache_.emplace(key, sim);
  return sim;
}

double SearchContext::diversity_score(int id, std::span<const int> others) const {
  double s = infoscore(id);
  if (diversity_weight_ == 0.0) return s;
  for (int other : others) s -= diversity_weight_ * similarity(id, other);
  return s;
}

double SearchContext::set_objective(std::span<const int> members) const {
  double total = 0.0;
  std::vector<int> rest;
  rest.reserve(members.size() - 1);
  for (size_t i = 0; i < members.size(); ++i) {
    rest.clear();
    for (size_t j = 0; j < members.size(); ++j)
      if (j != i) rest.push_back(members[j]);
    total += diversity_score(members[i], rest);
  }
  return total;
}

std::vector<Permutation> init_permutations(const SearchContext& ctx,
                                           const SearchConfig& cfg, Rng& rng) {
  const std::vector<int>& candidates = ctx.candidates();
  const int n = cfg.demo_count;
  const int labels_needed = cfg.label_balance ? n : 0;

  std::vector<ScoredId> by_info;
  by_info.reserve(candidates.size());
  for (int id : candidates) by_info.push_back({ctx.infoscore(id), id});
  std::sort(by_info.begin(), by_info.end());

  std::vector<Permutation> out;
  for (int b = 0; b < cfg.beam; ++b) {
    int seed_id = by_info[static_cast<size_t>(b) % by_info.size()].id;

    std::vector<int> members{seed_id};
    // demo_count is divisible by the label count (validated upstream)
    std::vector<int> quota(static_cast<size_t>(ctx.label_count()),
                           labels_needed / std::max(1, ctx.label_count()));
    if (cfg.label_balance) quota[static_cast<size_t>(ctx.label_of(seed_id))]--;

    while (static_cast<int>(members.size()) < n) {
      int best = -1;
      double best_score = 0.0;
      for (int id : candidates) {
        if (std::find(members.begin(), members.end(), id) != members.end())
          continue;
        if (cfg.label_balance &&
            quota[static_cast<size_t>(ctx.label_of(id))] <= 0)
          continue;
        double s = ctx.diversity_score(id, members);
        if (best == -1 || s > best_score || (s == best_score && id < best)) {
          best = id;
          best_score = s;
        }
      }
      if (best == -1)
        throw ConfigError(
            "search: label quotas cannot be filled from the candidate pool");
      members.push_back(best);
      if (cfg.label_balance) quota[static_cast<size_t>(ctx.label_of(best))]--;
    }

    // 1-swap hill climbing toward a local maximum of the set objective.
    double current = ctx.set_objective(members);
    for (int round = 0; round < 200; ++round) {
      double best_gain = 1e-12;
      int best_pos = -1, best_repl = -1;
      for (size_t pos = 0; pos < members.size(); ++pos) {
        for (int id : candidates) {
          if (std::find(members.begin(), members.end(), id) != members.end())
            continue;
          if (cfg.label_balance &&
              ctx.label_of(id) != ctx.label_of(members[pos]))
            continue;
          int saved = members[pos];
          members[pos] = id;
          double gain = ctx.set_objective(members) - current;
          members[pos] = saved;
          if (gain > best_gain) {
            best_gain = gain;
            best_pos = static_cast<int>(pos);
            best_repl = id;
          }
        }
      }
      if (best_pos < 0) break;
      members[static_cast<size_t>(best_pos)] = best_repl;
      current += best_gain;
    }

    rng.shuffle(members);
    out.push_back(Permutation{members});
  }
  return out;
}

Permutation substitute(const Permutation& perm, const SearchContext& ctx,
                       const SearchConfig& cfg, Rng& rng) {
  const std::vector<int>& ids = perm.example_ids;
  size_t pos = static_cast<size_t>(rng.below(ids.size()));
  int victim = ids[pos];

  std::vector<int> others;
  others.reserve(ids.size() - 1);
  for (size_t i = 0; i < ids.size(); ++i)
    if (i != pos) others.push_back(ids[i]);

  int best = -1;
  double best_score = 0.0;
  for (int id : ctx.candidates()) {
    if (std::find(ids.begin(), ids.end(), id) != ids.end()) continue;
    if (cfg.label_balance && ctx.label_of(id) != ctx.label_of(victim)) continue;
    double s = ctx.diversity_score(id, others);
    if (best == -1 || s > best_score || (s == best_score && id < best)) {
      best = id;
      best_score = s;
    }
  }
  if (best == -1) return perm;  // no eligible candidate; caller's pool dedupes
  Permutation out = perm;
  out.example_ids[pos] = best;
  return out;
}

Permutation shuffle_permutation(const Permutation& perm, Rng& rng) {
  Permutation out = perm;
  rng.shuffle(out.example_ids);
  return out;
}

double evaluate_on_validation(const Permutation& perm,
                              const std::vector<Example>& validation,
                              Evaluator& evaluator, Calibration mode,
                              int workers) {
  return evaluator.accuracy_on(perm, validation, mode, workers);
}

SearchOutcome beam_search(const std::vector<Permutation>& init,
                          const SearchContext& ctx, const SearchConfig& cfg,
                          const std::vector<Example>& validation,
                          Evaluator& evaluator, Calibration mode, Rng& rng) {
  const uint64_t budget = cfg.evaluation_budget();
  std::map<std::vector<int>, double> evaluated;
  uint64_t dropped = 0;

  // Evaluates every unseen permutation in `fresh` (up to the budget), in
  // creation order, fanning out to workers. Returns how many were skipped.
  auto evaluate_batch = [&](std::vector<ScoredPermutation*> fresh) {
    std::vector<ScoredPermutation*> todo;
    std::set<std::vector<int>> scheduled;
    for (ScoredPermutation* sp : fresh) {
      if (evaluated.count(sp->permutation.example_ids) ||
          scheduled.count(sp->permutation.example_ids))
        continue;
      if (evaluated.size() + todo.size() >= budget) {
        dropped++;
        continue;
      }
      scheduled.insert(sp->permutation.example_ids);
      todo.push_back(sp);
    }
    if (cfg.workers <= 1 || todo.size() < 2) {
      for (ScoredPermutation* sp : todo)
        evaluated[sp->permutation.example_ids] = evaluate_on_validation(
            sp->permutation, validation, evaluator, mode, cfg.workers);
    } else {
      std::vector<std::future<double>> futures;
      futures.reserve(todo.size());
      for (ScoredPermutation* sp : todo)
        futures.push_back(std::async(std::launch::async, [&, sp] {
          return evaluate_on_validation(sp->permutation, validation, evaluator,
                                        mode, 1);
        }));
      for (size_t i = 0; i < todo.size(); ++i)
        evaluated[todo[i]->permutation.example_ids] = futures[i].get();
    }
  };

  auto sort_key = [](const ScoredPermutation& sp) {
    return std::make_tuple(-sp.validation_accuracy, sp.created);
  };
  auto rank = [&](std::vector<ScoredPermutation>& pool) {
    std::sort(pool.begin(), pool.end(),
              [&](const ScoredPermutation& a, const ScoredPermutation& b) {
                if (sort_key(a) != sort_key(b)) return sort_key(a) < sort_key(b);
                return lex_less(a.permutation.example_ids,
                                b.permutation.example_ids);
              });
  };

  uint64_t creation = 0;
  std::vector<ScoredPermutation> beam;
  for (const Permutation& p : init)
    beam.push_back({p, 0.0, Provenance::kInit, creation++});
  {
    std::vector<ScoredPermutation*> fresh;
    for (auto& sp : beam) fresh.push_back(&sp);
    evaluate_batch(fresh);
    for (auto& sp : beam)
      sp.validation_accuracy = evaluated.at(sp.permutation.example_ids);
  }
  rank(beam);

  SearchOutcome outcome;
  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    uint64_t evals_before = evaluated.size();

    std::vector<ScoredPermutation> children;
    children.reserve(static_cast<size_t>(cfg.beam) * beam.size());
    for (const ScoredPermutation& parent : beam) {
      for (int b = 0; b < cfg.substitutions; ++b)
        children.push_back({substitute(parent.permutation, ctx, cfg, rng), 0.0,
                            Provenance::kSubstitution, creation++});
      for (int b = 0; b < cfg.beam - cfg.substitutions; ++b)
        children.push_back({shuffle_permutation(parent.permutation, rng), 0.0,
                            Provenance::kShuffle, creation++});
    }

    {
      std::vector<ScoredPermutation*> fresh;
      for (auto& sp : children) fresh.push_back(&sp);
      evaluate_batch(fresh);
    }

    // Pool parents with every child whose accuracy is known, dropping
    // duplicates (earliest creation wins), then keep the top beam.
    std::vector<ScoredPermutation> pool = beam;
    std::set<std::vector<int>> seen;
    for (const auto& sp : beam) seen.insert(sp.permutation.example_ids);
    for (auto& child : children) {
      auto it = evaluated.find(child.permutation.example_ids);
      if (it == evaluated.end()) continue;  // beyond budget
      if (!seen.insert(child.permutation.example_ids).second) continue;
      child.validation_accuracy = it->second;
      pool.push_back(child);
    }
    rank(pool);
    pool.resize(std::min<size_t>(pool.size(), static_cast<size_t>(cfg.beam)));
    beam = std::move(pool);

    SearchIterationTrace trace;
    trace.iteration = iter;
    trace.fresh_evaluations = evaluated.size() - evals_before;
    trace.best_so_far = beam.front().validation_accuracy;
    trace.beam = beam;
    outcome.trace.push_back(std::move(trace));
  }

  outcome.best = beam.front();
  outcome.children_generated =
      static_cast<uint64_t>(cfg.beam) * cfg.beam * cfg.iterations;
  outcome.unique_evaluations = evaluated.size();
  outcome.dropped_children = dropped;
  return outcome;
}

}  // namespace lens
