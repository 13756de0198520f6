#include "lens/eval.hpp"

#include <algorithm>
#include <future>

namespace lens {

namespace {

constexpr double kDivisionFloor = 1e-12;
constexpr const char* kContentFreeProbe = "N/A";

int argmax_lowest_tie(const std::vector<double>& scores) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(scores.size()); ++i)
    if (scores[static_cast<size_t>(i)] > scores[static_cast<size_t>(best)])
      best = i;
  return best;
}

}  // namespace

Calibration calibration_from_string(const std::string& s) {
  if (s == "off") return Calibration::kOff;
  if (s == "content_free") return Calibration::kContentFree;
  throw ConfigError("unknown calibration mode '" + s +
                    "' (expected off or content_free)");
}

std::string calibration_label(Calibration mode) {
  return mode == Calibration::kOff ? "off" : "content_free(approx)";
}

Evaluator::Evaluator(const Dataset& demo_source, const PromptTemplate& tmpl,
                     Scorer& scorer)
    : demo_source_(demo_source), tmpl_(tmpl), scorer_(scorer) {}

std::vector<double> Evaluator::content_free_scores(const Permutation& demos) {
  const std::string key = demos.serialize();
  {
    std::lock_guard<std::mutex> lock(cf_mu_);
    auto it = cf_cache_.find(key);
    if (it != cf_cache_.end()) return it->second;
  }
  ScorerRequest req;
  req.context =
      render_context(tmpl_, demo_source_, demos.example_ids, kContentFreeProbe);
  IclView icl;
  icl.demo_ids = demos.example_ids;
  icl.test_id = kContentFreeId;
  for (int l = 0; l < demo_source_.label_count(); ++l) {
    req.completions.push_back(tmpl_.completion_for(l));
    icl.completion_labels.push_back(l);
  }
  req.icl = std::move(icl);
  std::vector<double> scores = scorer_.score(req).probs;
  std::lock_guard<std::mutex> lock(cf_mu_);
  cf_cache_.emplace(key, scores);
  return scores;
}

Prediction Evaluator::predict(const Permutation& demos, const Example& test,
                              Calibration mode) {
  ScorerRequest req;
  req.context =
      render_context(tmpl_, demo_source_, demos.example_ids, test.text);
  IclView icl;
  icl.demo_ids = demos.example_ids;
  icl.test_id = test.id;
  for (int l = 0; l < demo_source_.label_count(); ++l) {
    req.completions.push_back(tmpl_.completion_for(l));
    icl.completion_labels.push_back(l);
  }
  req.icl = std::move(icl);

  Prediction p;
  p.example_id = test.id;
  p.raw_scores = scorer_.score(req).probs;
  if (mode == Calibration::kContentFree) {
    std::vector<double> cf = content_free_scores(demos);
    std::vector<double> calibrated(p.raw_scores.size());
    for (size_t i = 0; i < p.raw_scores.size(); ++i)
      calibrated[i] = p.raw_scores[i] / std::max(cf[i], kDivisionFloor);
    p.calibrated_scores = std::move(calibrated);
    p.predicted_label = argmax_lowest_tie(*p.calibrated_scores);
  } else {
    p.predicted_label = argmax_lowest_tie(p.raw_scores);
  }
  return p;
}

TestsetReport Evaluator::evaluate_testset(const Permutation& demos,
                                          const Dataset& testset,
                                          Calibration mode, int workers) {
  if (testset.size() == 0) throw ConfigError("evaluate: empty test set");
  const auto& examples = testset.examples();
  std::vector<Prediction> predictions(examples.size());

  auto run_range = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i)
      predictions[i] = predict(demos, examples[i], mode);
  };
  if (workers <= 1 || examples.size() < 2) {
    run_range(0, examples.size());
  } else {
    size_t per = (examples.size() + workers - 1) / static_cast<size_t>(workers);
    std::vector<std::future<void>> tasks;
    for (size_t begin = 0; begin < examples.size(); begin += per)
      tasks.push_back(std::async(std::launch::async, run_range, begin,
                                 std::min(begin + per, examples.size())));
    for (auto& t : tasks) t.get();
  }

  TestsetReport report;
  report.total = testset.size();
  report.per_label.resize(static_cast<size_t>(testset.label_count()));
  for (int l = 0; l < testset.label_count(); ++l)
    report.per_label[static_cast<size_t>(l)].label =
        testset.label_space()[static_cast<size_t>(l)];
  for (size_t i = 0; i < examples.size(); ++i) {
    auto& bucket = report.per_label[static_cast<size_t>(examples[i].label)];
    bucket.total++;
    if (predictions[i].predicted_label == examples[i].label) {
      bucket.correct++;
      report.correct++;
    }
  }
  report.accuracy = static_cast<double>(report.correct) / report.total;
  report.predictions = std::move(predictions);
  return report;
}

double Evaluator::accuracy_on(const Permutation& demos,
                              const std::vector<Example>& examples,
                              Calibration mode, int workers) {
  if (examples.empty()) throw ConfigError("evaluate: empty example list");
  std::vector<int> predicted(examples.size());
  auto run_range = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i)
      predicted[i] = predict(demos, examples[i], mode).predicted_label;
  };
  if (workers <= 1 || examples.size() < 2) {
    run_range(0, examples.size());
  } else {
    size_t per = (examples.size() + workers - 1) / static_cast<size_t>(workers);
    std::vector<std::future<void>> tasks;
    for (size_t begin = 0; begin < examples.size(); begin += per)
      tasks.push_back(std::async(std::launch::async, run_range, begin,
                                 std::min(begin + per, examples.size())));
    for (auto& t : tasks) t.get();
  }
  int correct = 0;
  for (size_t i = 0; i < examples.size(); ++i)
    if (predicted[i] == examples[i].label) correct++;
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

}  // namespace lens
