#pragma once

#include <cstdint>
#include <vector>

#include "lens/contributions.hpp"
#include "lens/prompt.hpp"
#include "lens/scorer.hpp"
#include "lens/types.hpp"

namespace lens {

struct FilterConfig {
  int candidate_target = 500;     // examples kept after filtering
  double progress_factor = 2.0;   // per-iteration pool shrink / score-set growth
  int score_set_init = 4;         // initial score-set size
  uint64_t seed = 0;
  bool label_balance = false;
  bool invert = false;            // test mode: keep the LOWEST scores
  int workers = 1;

  void validate(const Dataset& dataset) const;
};

struct FilterIterationStats {
  int survivors_before = 0;
  int survivors_after = 0;
  int score_set_size = 0;
  int score_set_added = 0;
  uint64_t scorer_calls = 0;
};

struct FilterResult {
  std::vector<int> candidates;          // ranked best-first
  std::vector<double> candidate_scores; // running InfoScore over the final set
  std::vector<int> score_set;           // canonical (sampling) order
  std::vector<FilterIterationStats> iterations;
  uint64_t scorer_calls_total = 0;
};

// Progressive filtering. Each round scores the surviving pool against only
// the score set's newest members and folds the sums into running totals
// (valid because InfoScore is additive over disjoint score sets), then cuts
// the pool by 1/progress_factor and grows the score set geometrically.
// Ties in every cut break toward the lower example id.
FilterResult progressive_filter(const Dataset& dataset, const FilterConfig& cfg,
                                const PromptTemplate& tmpl, Scorer& scorer,
                                ContributionMatrix& matrix);

struct Schedule {
  double progress_factor = 2.0;
  int score_set_init = 1;
  int iterations = 1;
};

/// Derives (progress_factor, initial score-set size) from the dataset size:
/// the factor targets `iteration_constant` filter rounds, clamped to [2, 3]
/// and rounded to the nearest integer; the initial size is the largest value
/// whose total pair-call budget stays within `pair_budget`.
Schedule default_schedule(int dataset_size, int iteration_constant = 4,
                          int candidate_target = 500, long pair_budget = 10000);

}  // namespace lens
