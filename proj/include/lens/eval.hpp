#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "lens/prompt.hpp"
#include "lens/scorer.hpp"
#include "lens/types.hpp"

namespace lens {

enum class Calibration { kOff, kContentFree };

Calibration calibration_from_string(const std::string& s);
std::string calibration_label(Calibration mode);  // as written into reports

struct Prediction {
  int example_id = -1;
  std::vector<double> raw_scores;
  std::optional<std::vector<double>> calibrated_scores;
  int predicted_label = -1;  // argmax; ties resolve to the lowest label id
};

struct LabelBreakdown {
  std::string label;
  int total = 0;
  int correct = 0;
};

struct TestsetReport {
  double accuracy = 0.0;
  int total = 0;
  int correct = 0;
  std::vector<LabelBreakdown> per_label;
  std::vector<Prediction> predictions;  // ordered by example id
};

// In-context prediction: one scorer request over all verbalizers, argmax.
// Content-free calibration divides each label's probability by the one
// obtained with the probe input "N/A" (computed once per demo permutation
// and cached); this single-probe scheme approximates the published
// procedure and is flagged as content_free(approx) in reports.
class Evaluator {
 public:
  Evaluator(const Dataset& demo_source, const PromptTemplate& tmpl,
            Scorer& scorer);

  Prediction predict(const Permutation& demos, const Example& test,
                     Calibration mode);

  TestsetReport evaluate_testset(const Permutation& demos,
                                 const Dataset& testset, Calibration mode,
                                 int workers = 1);

  /// Fraction of the given examples whose prediction matches gold.
  double accuracy_on(const Permutation& demos,
                     const std::vector<Example>& examples, Calibration mode,
                     int workers = 1);

 private:
  std::vector<double> content_free_scores(const Permutation& demos);

  const Dataset& demo_source_;
  PromptTemplate tmpl_;
  Scorer& scorer_;
  std::mutex cf_mu_;
  std::map<std::string, std::vector<double>> cf_cache_;
};

}  // namespace lens
