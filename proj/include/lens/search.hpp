#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include "lens/contributions.hpp"
#include "lens/eval.hpp"
#include "lens/rng.hpp"
#include "lens/types.hpp"

namespace lens {

struct SearchConfig {
  int demo_count = 8;            // permutation length
  int beam = 8;
  int substitutions = 4;         // substitution children per beam member
  int iterations = 10;
  double diversity_weight = 1.0; // lambda; 0 disables the diversity term
  int validation_size = 100;
  uint64_t seed = 0;
  bool label_balance = false;
  int workers = 1;

  void validate(const Dataset& dataset, int candidate_count) const;
  uint64_t evaluation_budget() const {
    return static_cast<uint64_t>(beam) * beam * iterations;
  }
};

enum class Provenance { kInit, kSubstitution, kShuffle };
const char* provenance_label(Provenance p);

struct ScoredPermutation {
  Permutation permutation;
  double validation_accuracy = 0.0;
  Provenance provenance = Provenance::kInit;
  uint64_t created = 0;  // global creation index, breaks selection ties
};

// Cache-only view of the filtered candidates: InfoScores over the final
// score set, feature vectors and pairwise similarities. Never touches the
// scorer, so search move generation is free of model calls.
class SearchContext {
 public:
  SearchContext(const Dataset& dataset, std::vector<int> candidates,
                const ContributionMatrix& matrix, std::vector<int> score_set,
                double diversity_weight);

  const std::vector<int>& candidates() const { return candidates_; }
  const std::vector<int>& score_set() const { return score_set_; }
  double diversity_weight() const { return diversity_weight_; }
  int label_of(int id) const { return dataset_.by_id(id).label; }
  int label_count() const { return dataset_.label_count(); }

  double infoscore(int id) const;
  double similarity(int a, int b) const;

  /// s(e, E') = InfoScore(e) - lambda * sum of feature similarity to E'.
  double diversity_score(int id, std::span<const int> others) const;

  /// Set objective maximized by the initializer: sum over members of
  /// s(e, E - e). Order-free.
  double set_objective(std::span<const int> members) const;

 private:
  const Dataset& dataset_;
  std::vector<int> candidates_;
  std::vector<int> score_set_;
  double diversity_weight_;
  std::map<int, FeatureVector> features_;
  std::map<int, double> infoscores_;
  mutable std::map<std::pair<int, int>, double> sim_cache_;
  mutable std::mutex sim_mu_;
};

/// Greedy construction from distinct top-InfoScore seeds plus 1-swap hill
/// climbing on the set objective; each resulting id set is returned in a
/// fresh uniform-random order. Stands in for the exact discrete solver.
std::vector<Permutation> init_permutations(const SearchContext& ctx,
                                           const SearchConfig& cfg, Rng& rng);

/// Replaces a uniformly chosen position with the diversity-score argmax over
/// candidates outside the permutation (same label under balancing). Returns
/// the input unchanged when no candidate is eligible.
Permutation substitute(const Permutation& perm, const SearchContext& ctx,
                       const SearchConfig& cfg, Rng& rng);

Permutation shuffle_permutation(const Permutation& perm, Rng& rng);

double evaluate_on_validation(const Permutation& perm,
                              const std::vector<Example>& validation,
                              Evaluator& evaluator, Calibration mode,
                              int workers = 1);

struct SearchIterationTrace {
  int iteration = 0;
  uint64_t fresh_evaluations = 0;
  double best_so_far = 0.0;
  std::vector<ScoredPermutation> beam;
};

struct SearchOutcome {
  ScoredPermutation best;
  std::vector<SearchIterationTrace> trace;
  uint64_t children_generated = 0;  // beam*beam per iteration, the paper's 640
  uint64_t unique_evaluations = 0;  // distinct permutations scored on V
  uint64_t dropped_children = 0;    // children unscored after budget exhaustion
};

// Beam search over permutations. Each iteration pools every member's
// substitution and shuffle children with the current beam, evaluates only
// unseen permutations, and keeps the top beam (ties: earlier creation, then
// lexicographic ids). Fresh evaluations, including the initial beam, are
// capped at beam * beam * iterations.
SearchOutcome beam_search(const std::vector<Permutation>& init,
                          const SearchContext& ctx, const SearchConfig& cfg,
                          const std::vector<Example>& validation,
                          Evaluator& evaluator, Calibration mode, Rng& rng);

}  // namespace lens
