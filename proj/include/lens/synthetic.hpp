#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lens/prompt.hpp"
#include "lens/scorer.hpp"
#include "lens/types.hpp"

namespace lens {

// Configuration of the planted testbed. Every example gets a planted
// informativeness q, a label, and a latent region; the synthetic scorer
// answers probability queries in closed form from those alone, so every
// pipeline quantity has an exact, independently computable ground truth.
struct PlantedSpec {
  int n_train = 256;
  int n_test = 200;
  int n_labels = 2;
  int n_regions = 1;
  uint64_t seed = 1;

  // Informativeness assignment. kSquaredUniform draws q = u^2 (continuous,
  // almost surely distinct). kTiered plants tier_count clearly separated
  // high-q examples, spread evenly across labels.
  enum class QMode { kSquaredUniform, kTiered };
  QMode q_mode = QMode::kSquaredUniform;
  int tier_count = 16;
  double tier_lo = 0.85, tier_hi = 1.0;
  double rest_lo = 0.0, rest_hi = 0.5;

  // Scoring model. A demo d shifts the gold-label logit of test t by
  //   q_d * w(d,t) * match(d,t)
  // and the other labels' logits by the negative of that, where
  //   match(d,t) = +1 if labels agree, -mismatch_penalty otherwise,
  //   w(d,t)    = 1 if regions agree, w_far otherwise.
  // The per-(test,label) base logit is uniform in [base_lo, base_hi]; an
  // order-sensitive perturbation bounded by eps_max is added when at least
  // one demo is present. Probability = logistic(logit).
  double eps_max = 0.0;
  double w_far = 0.2;
  double mismatch_penalty = 0.1;
  double base_lo = -1.6;
  double base_hi = -0.4;
  double cf_base = -1.0;  // content-free probe logit, identical for all labels

  std::string digest() const;
};

struct PlantedExample {
  int id;
  int label;
  int region;
  double q;
};

struct PlantedWorld {
  PlantedSpec spec;
  std::vector<PlantedExample> table;  // train ids then test ids
  Dataset train;
  Dataset test;

  const PlantedExample& at(int id) const;

  /// A prompt template consistent with the planted label space.
  PromptTemplate default_template() const;
};

PlantedWorld make_planted_dataset(const PlantedSpec& spec);

/// Closed-form oracle over a planted world. Requires the structured IclView
/// on every request; ids outside the planted table are an error.
class SyntheticScorer : public Scorer {
 public:
  explicit SyntheticScorer(const PlantedWorld& world);

  LabelProbabilities score(const ScorerRequest& request) override;
  std::string backend_id() const override { return backend_id_; }

 private:
  double completion_probability(const IclView& icl, size_t index) const;

  const PlantedWorld& world_;
  std::string backend_id_;
};

}  // namespace lens
