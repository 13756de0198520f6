#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "lens/eval.hpp"
#include "lens/synthetic.hpp"
#include "planted_util.hpp"

using namespace lens;
using namespace lens::testutil;

namespace {

// Two-label fixture task: pattern "[INPUT] -> [VERBALIZER]among", demos from
// `train`, completions " no" / " yes".
struct FixtureWorld {
  Dataset train;
  PromptTemplate tmpl;
  FixtureWorld()
      : train({{0, "d0", 0}, {1, "d1", 1}}, {"neg", "pos"}, "fixture") {
    tmpl.pattern = "[INPUT] -> [VERBALIZER]";
    tmpl.verbalizers = {"no", "yes"};
  }
};

}  // namespace

TEST_CASE("argmax prediction with ties toward the lowest label") {
  FixtureWorld w;
  FixtureScorer scorer;
  scorer.set("x ->", " no", 0.6);
  scorer.set("x ->", " yes", 0.3);
  scorer.set("t ->", " no", 0.4);
  scorer.set("t ->", " yes", 0.4);

  Evaluator ev(w.train, w.tmpl, scorer);
  Permutation none;
  Prediction p = ev.predict(none, Example{10, "x", 0}, Calibration::kOff);
  CHECK(p.predicted_label == 0);
  CHECK(p.raw_scores == std::vector<double>{0.6, 0.3});
  CHECK_FALSE(p.calibrated_scores.has_value());

  Prediction tie = ev.predict(none, Example{11, "t", 0}, Calibration::kOff);
  CHECK(tie.predicted_label == 0);
}

TEST_CASE("content-free calibration can flip the argmax") {
  FixtureWorld w;
  FixtureScorer scorer;
  scorer.set("x ->", " no", 0.2);
  scorer.set("x ->", " yes", 0.6);
  scorer.set("N/A ->", " no", 0.1);
  scorer.set("N/A ->", " yes", 0.9);

  Evaluator ev(w.train, w.tmpl, scorer);
  Permutation none;
  Prediction raw = ev.predict(none, Example{10, "x", 0}, Calibration::kOff);
  CHECK(raw.predicted_label == 1);

  Prediction cal =
      ev.predict(none, Example{10, "x", 0}, Calibration::kContentFree);
  REQUIRE(cal.calibrated_scores.has_value());
  CHECK((*cal.calibrated_scores)[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK((*cal.calibrated_scores)[1] ==
        doctest::Approx(0.6 / 0.9).epsilon(1e-12));
  CHECK(cal.predicted_label == 0);
}

TEST_CASE("uniform content-free scores never change the argmax") {
  FixtureWorld w;
  FixtureScorer scorer;
  scorer.set("a ->", " no", 0.3);
  scorer.set("a ->", " yes", 0.5);
  scorer.set("N/A ->", " no", 0.4);
  scorer.set("N/A ->", " yes", 0.4);

  Evaluator ev(w.train, w.tmpl, scorer);
  Permutation none;
  Prediction raw = ev.predict(none, Example{10, "a", 1}, Calibration::kOff);
  Prediction cal =
      ev.predict(none, Example{10, "a", 1}, Calibration::kContentFree);
  CHECK(raw.predicted_label == cal.predicted_label);
}

TEST_CASE("near-zero content-free scores are floored, not divided through") {
  FixtureWorld w;
  FixtureScorer scorer;
  scorer.set("a ->", " no", 0.3);
  scorer.set("a ->", " yes", 0.5);
  scorer.set("N/A ->", " no", 1e-30);
  scorer.set("N/A ->", " yes", 0.4);

  Evaluator ev(w.train, w.tmpl, scorer);
  Prediction cal =
      ev.predict(Permutation{}, Example{10, "a", 1}, Calibration::kContentFree);
  REQUIRE(cal.calibrated_scores.has_value());
  CHECK(std::isfinite((*cal.calibrated_scores)[0]));
  CHECK((*cal.calibrated_scores)[0] == doctest::Approx(0.3 / 1e-12));
}

TEST_CASE("content-free probe is scored once per permutation") {
  FixtureWorld w;
  FixtureScorer scorer;
  scorer.set("a ->", " no", 0.3);
  scorer.set("a ->", " yes", 0.5);
  scorer.set("b ->", " no", 0.7);
  scorer.set("b ->", " yes", 0.1);
  scorer.set("N/A ->", " no", 0.4);
  scorer.set("N/A ->", " yes", 0.5);

  Evaluator ev(w.train, w.tmpl, scorer);
  Permutation none;
  ev.predict(none, Example{10, "a", 0}, Calibration::kContentFree);
  uint64_t after_first = scorer.backend_calls();
  ev.predict(none, Example{11, "b", 0}, Calibration::kContentFree);
  // Only the test-input request is new; the probe came from the cache.
  CHECK(scorer.backend_calls() == after_first + 1);
}

TEST_CASE("testset evaluation aggregates correctly") {
  FixtureWorld w;
  FixtureScorer scorer;
  scorer.set("right ->", " no", 0.8);
  scorer.set("right ->", " yes", 0.1);
  scorer.set("wrong ->", " no", 0.9);
  scorer.set("wrong ->", " yes", 0.2);

  Dataset testset({{0, "right", 0}, {1, "wrong", 1}}, {"neg", "pos"}, "t");
  Evaluator ev(w.train, w.tmpl, scorer);
  TestsetReport r =
      ev.evaluate_testset(Permutation{}, testset, Calibration::kOff);
  CHECK(r.total == 2);
  CHECK(r.correct == 1);
  CHECK(r.accuracy == 0.5);
  REQUIRE(r.per_label.size() == 2);
  CHECK(r.per_label[0].label == "neg");
  CHECK(r.per_label[0].correct == 1);
  CHECK(r.per_label[1].correct == 0);
  REQUIRE(r.predictions.size() == 2);
  CHECK(r.predictions[0].example_id == 0);
  CHECK(r.predictions[1].example_id == 1);

  Dataset one_right({{0, "right", 0}}, {"neg", "pos"}, "t1");
  CHECK(ev.evaluate_testset(Permutation{}, one_right, Calibration::kOff)
            .accuracy == 1.0);
  Dataset one_wrong({{0, "wrong", 1}}, {"neg", "pos"}, "t2");
  CHECK(ev.evaluate_testset(Permutation{}, one_wrong, Calibration::kOff)
            .accuracy == 0.0);
}

TEST_CASE("testset order does not change the accuracy") {
  PlantedSpec spec;
  spec.n_train = 16;
  spec.n_test = 40;
  spec.n_labels = 2;
  spec.seed = 61;
  spec.eps_max = 0.02;
  PlantedWorld world = make_planted_dataset(spec);
  SyntheticScorer scorer(world);
  Evaluator ev(world.train, world.default_template(), scorer);
  Permutation demos{{0, 1, 2, 3}};

  double acc =
      ev.evaluate_testset(demos, world.test, Calibration::kOff).accuracy;

  std::vector<Example> shuffled = world.test.examples();
  std::reverse(shuffled.begin(), shuffled.end());
  Dataset reversed(std::move(shuffled), world.test.label_space(), "rev");
  CHECK(ev.evaluate_testset(demos, reversed, Calibration::kOff).accuracy ==
        acc);
}

TEST_CASE("empty test sets are rejected") {
  FixtureWorld w;
  FixtureScorer scorer;
  Evaluator ev(w.train, w.tmpl, scorer);
  CHECK_THROWS_AS(ev.accuracy_on(Permutation{}, {}, Calibration::kOff),
                  ConfigError);
}

TEST_CASE("calibration mode strings") {
  CHECK(calibration_from_string("off") == Calibration::kOff);
  CHECK(calibration_from_string("content_free") == Calibration::kContentFree);
  CHECK_THROWS_AS(calibration_from_string("sideways"), ConfigError);
  CHECK(calibration_label(Calibration::kOff) == "off");
  CHECK(calibration_label(Calibration::kContentFree) == "content_free(approx)");
}
