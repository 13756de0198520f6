#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lens/prompt.hpp"
#include "lens/scorer.hpp"
#include "lens/types.hpp"

namespace lens {

// Pairwise contribution cache: value(candidate e, score example e') =
// p(gold(e') | e, x') - p(gold(e') | x'), a real in [-1, 1]. Shared between
// the filtering and search stages and persisted for cross-stage reuse.
class ContributionMatrix {
 public:
  ContributionMatrix() = default;
  ContributionMatrix(ContributionMatrix&& other) noexcept
      : values_(std::move(other.values_)) {}
  ContributionMatrix& operator=(ContributionMatrix&& other) noexcept {
    values_ = std::move(other.values_);
    return *this;
  }

  bool has(int candidate_id, int score_id) const;
  double get(int candidate_id, int score_id) const;  // ConsistencyError if absent
  std::optional<double> find(int candidate_id, int score_id) const;
  void put(int candidate_id, int score_id, double value);
  size_t size() const;

  void save(const std::string& path) const;  // sorted, one JSON object per line
  static ContributionMatrix load(const std::string& path);

 private:
  mutable std::mutex mu_;
  std::map<std::pair<int, int>, double> values_;
};

/// e's contributions over the final score set, in score-set order. When e is
/// itself a score-set member its own slot is omitted and recorded here.
struct FeatureVector {
  int candidate_id = -1;
  std::vector<double> values;
  std::optional<int> omitted_slot;
};

/// Assembles cached values only; a missing contribution is a pipeline bug and
/// raises ConsistencyError rather than recomputing.
FeatureVector make_feature_vector(const ContributionMatrix& matrix,
                                  int candidate_id,
                                  std::span<const int> score_set);

/// Cosine similarity of two feature vectors over the same score set, after
/// aligning omitted self-slots with zero padding. Zero-norm vectors compare
/// as 0. Result is in [-1, 1].
double cosine_similarity(const FeatureVector& a, const FeatureVector& b,
                         size_t score_set_size);

// Computes contributions through the scorer, memoizing into the matrix.
// The zero-demo term p(gold(e')|x') is computed once per score example.
class ContributionEngine {
 public:
  ContributionEngine(const Dataset& dataset, const PromptTemplate& tmpl,
                     Scorer& scorer, ContributionMatrix& matrix,
                     int workers = 1);

  double zero_demo_probability(int score_id);
  double contribution(int candidate_id, int score_id);

  /// Sum of contribution(e, e') over the score members in order, skipping
  /// e' == e. Empty score sets sum to 0.
  double infoscore(int candidate_id, std::span<const int> score_members);

  /// Fans contribution computation for candidates x members out to workers;
  /// results land in the matrix deterministically.
  void compute_block(std::span<const int> candidate_ids,
                     std::span<const int> score_members);

  const ContributionMatrix& matrix() const { return matrix_; }

 private:
  const Dataset& dataset_;
  PromptTemplate tmpl_;
  Scorer& scorer_;
  ContributionMatrix& matrix_;
  int workers_;
  std::mutex zero_mu_;
  std::map<int, double> zero_demo_;
};

}  // namespace lens
