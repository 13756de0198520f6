#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "lens/filtering.hpp"
#include "lens/synthetic.hpp"
#include "planted_util.hpp"

using namespace lens;
using namespace lens::testutil;

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double oracle_contribution(const PlantedWorld& world, int candidate,
                           int target) {
  const PlantedExample& d = world.at(candidate);
  const PlantedExample& t = world.at(target);
  double base = world.spec.base_lo;  // collapsed in these tests
  double w = d.region == t.region ? 1.0 : world.spec.w_far;
  double match = d.label == t.label ? 1.0 : -world.spec.mismatch_penalty;
  return logistic(base + d.q * w * match) - logistic(base);
}

PlantedSpec tiered_spec(int n, int tier, uint64_t seed) {
  PlantedSpec spec;
  spec.n_train = n;
  spec.n_test = 0;
  spec.n_labels = 2;
  spec.n_regions = 1;
  spec.seed = seed;
  spec.q_mode = PlantedSpec::QMode::kTiered;
  spec.tier_count = tier;
  spec.tier_lo = 0.8;
  spec.tier_hi = 1.0;
  spec.rest_lo = 0.0;
  spec.rest_hi = 0.4;
  spec.eps_max = 0.0;
  spec.base_lo = -1.0;
  spec.base_hi = -1.0;
  return spec;
}

std::vector<int> top_by_q(const PlantedWorld& world, int k) {
  std::vector<int> ids = world.train.ids();
  std::sort(ids.begin(), ids.end(), [&](int a, int b) {
    return world.at(a).q != world.at(b).q ? world.at(a).q > world.at(b).q
                                          : a < b;
  });
  ids.resize(static_cast<size_t>(k));
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::set<int> as_set(const std::vector<int>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("progressive filtering recovers the planted informative tier") {
  for (uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    PlantedWorld world = make_planted_dataset(tiered_spec(64, 8, seed));
    SyntheticScorer scorer(world);
    ContributionMatrix matrix;
    FilterConfig cfg;
    cfg.candidate_target = 8;
    cfg.progress_factor = 2.0;
    cfg.score_set_init = 4;
    cfg.seed = seed * 31;
    cfg.label_balance = true;

    FilterResult res = progressive_filter(world.train, cfg,
                                          world.default_template(), scorer,
                                          matrix);
    REQUIRE(res.candidates.size() == 8);

    // Independent route: full InfoScore over the final score set via the
    // closed form, then the same per-label quotas.
    std::vector<int> per_label_top;
    for (int label = 0; label < 2; ++label) {
      std::vector<int> ids = world.train.ids_with_label(label);
      std::sort(ids.begin(), ids.end(), [&](int a, int b) {
        double sa = 0.0, sb = 0.0;
        for (int s : res.score_set) {
          if (s != a) sa += oracle_contribution(world, a, s);
          if (s != b) sb += oracle_contribution(world, b, s);
        }
        return sa != sb ? sa > sb : a < b;
      });
      per_label_top.insert(per_label_top.end(), ids.begin(), ids.begin() + 4);
    }
    CHECK(as_set(res.candidates) == as_set(per_label_top));
    CHECK(as_set(res.candidates) == as_set(top_by_q(world, 8)));
  }
}

TEST_CASE("one-shot schedule equals exhaustive brute force") {
  // Full-dataset score set forced, single cut: the progressive route must
  // equal top-m by summing Eq-style contributions over every pair.
  for (uint64_t seed : {7ULL, 8ULL, 9ULL}) {
    PlantedSpec spec;
    spec.n_train = 24;
    spec.n_test = 0;
    spec.n_labels = 2;
    spec.n_regions = 2;
    spec.seed = seed;
    spec.eps_max = 0.0;
    PlantedWorld world = make_planted_dataset(spec);
    SyntheticScorer scorer(world);

    ContributionMatrix matrix;
    FilterConfig cfg;
    cfg.candidate_target = 5;
    cfg.progress_factor = 24.0;  // one cut straight to the target
    cfg.score_set_init = 24;     // score set = the whole dataset
    cfg.seed = seed;
    FilterResult res = progressive_filter(world.train, cfg,
                                          world.default_template(), scorer,
                                          matrix);
    REQUIRE(res.iterations.size() == 1);

    // Oracle: recompute through the scorer directly, independent of the
    // filtering code path.
    SyntheticScorer oracle_scorer(world);
    ContributionMatrix oracle_matrix;
    ContributionEngine oracle(world.train, world.default_template(),
                              oracle_scorer, oracle_matrix);
    std::vector<std::pair<double, int>> scored;
    for (int id : world.train.ids())
      scored.push_back({oracle.infoscore(id, res.score_set), id});
    std::sort(scored.begin(), scored.end(), [](auto& a, auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<int> expect;
    for (int i = 0; i < 5; ++i) expect.push_back(scored[i].second);
    std::sort(expect.begin(), expect.end());

    std::vector<int> got = res.candidates;
    std::sort(got.begin(), got.end());
    CHECK(got == expect);
  }
}

TEST_CASE("immediate break keeps a single iteration") {
  PlantedWorld world = make_planted_dataset(tiered_spec(16, 4, 5));
  SyntheticScorer scorer(world);
  ContributionMatrix matrix;
  FilterConfig cfg;
  cfg.candidate_target = 15;
  cfg.progress_factor = 2.0;
  cfg.score_set_init = 4;
  cfg.seed = 1;
  FilterResult res = progressive_filter(world.train, cfg,
                                        world.default_template(), scorer,
                                        matrix);
  CHECK(res.iterations.size() == 1);
  CHECK(res.candidates.size() == 15);
  CHECK(res.score_set.size() == 4);
}

TEST_CASE("label balance yields equal quotas") {
  PlantedWorld world = make_planted_dataset(tiered_spec(64, 8, 12));
  SyntheticScorer scorer(world);
  ContributionMatrix matrix;
  FilterConfig cfg;
  cfg.candidate_target = 8;
  cfg.progress_factor = 2.0;
  cfg.score_set_init = 4;
  cfg.seed = 3;
  cfg.label_balance = true;
  FilterResult res = progressive_filter(world.train, cfg,
                                        world.default_template(), scorer,
                                        matrix);
  int per_label[2] = {0, 0};
  for (int id : res.candidates) per_label[world.train.by_id(id).label]++;
  CHECK(per_label[0] == 4);
  CHECK(per_label[1] == 4);
}

TEST_CASE("fixed seeds reproduce the run exactly") {
  auto run = [] {
    PlantedWorld world = make_planted_dataset(tiered_spec(48, 8, 21));
    SyntheticScorer scorer(world);
    ContributionMatrix matrix;
    FilterConfig cfg;
    cfg.candidate_target = 8;
    cfg.progress_factor = 2.0;
    cfg.score_set_init = 4;
    cfg.seed = 99;
    return progressive_filter(world.train, cfg, world.default_template(),
                              scorer, matrix);
  };
  FilterResult a = run(), b = run();
  CHECK(a.candidates == b.candidates);
  CHECK(a.candidate_scores == b.candidate_scores);
  CHECK(a.score_set == b.score_set);
  CHECK(a.scorer_calls_total == b.scorer_calls_total);
}

TEST_CASE("survivor counts shrink geometrically and calls respect the budget") {
  PlantedSpec spec = tiered_spec(256, 16, 77);
  PlantedWorld world = make_planted_dataset(spec);
  SyntheticScorer scorer(world);
  ContributionMatrix matrix;
  FilterConfig cfg;
  cfg.candidate_target = 16;
  cfg.progress_factor = 2.0;
  cfg.score_set_init = 9;
  cfg.seed = 4;
  FilterResult res = progressive_filter(world.train, cfg,
                                        world.default_template(), scorer,
                                        matrix);

  for (size_t i = 0; i + 1 < res.iterations.size(); ++i)
    CHECK(res.iterations[i + 1].survivors_before ==
          res.iterations[i].survivors_after);

  int expected_iters = static_cast<int>(std::ceil(
      std::log(256.0 / 16.0) / std::log(cfg.progress_factor)));
  CHECK(static_cast<int>(res.iterations.size()) == expected_iters);
  double bound = 1.10 * 256 * 9 * expected_iters;
  CHECK(static_cast<double>(res.scorer_calls_total) <= bound);
}

TEST_CASE("a score set that cannot grow is a schedule error") {
  PlantedWorld world = make_planted_dataset(tiered_spec(16, 4, 31));
  SyntheticScorer scorer(world);
  ContributionMatrix matrix;
  FilterConfig cfg;
  cfg.candidate_target = 2;
  cfg.progress_factor = 2.0;
  cfg.score_set_init = 12;  // 12 -> 24 > 16 on the first growth
  cfg.seed = 1;
  CHECK_THROWS_WITH_AS(progressive_filter(world.train, cfg,
                                          world.default_template(), scorer,
                                          matrix),
                       doctest::Contains("cannot grow the score set"),
                       ConfigError);
}

TEST_CASE("inverted filtering retains the least informative examples") {
  PlantedWorld world = make_planted_dataset(tiered_spec(64, 8, 41));
  SyntheticScorer scorer(world);
  ContributionMatrix matrix;
  FilterConfig cfg;
  cfg.candidate_target = 8;
  cfg.progress_factor = 64.0;
  cfg.score_set_init = 64;
  cfg.seed = 2;
  cfg.invert = true;
  FilterResult res = progressive_filter(world.train, cfg,
                                        world.default_template(), scorer,
                                        matrix);
  // None of the planted high-q tier may survive an inverted run.
  std::set<int> tier = as_set(top_by_q(world, 8));
  for (int id : res.candidates) CHECK(tier.count(id) == 0);
}

TEST_CASE("filter config validation") {
  PlantedWorld world = make_planted_dataset(tiered_spec(16, 4, 51));
  FilterConfig cfg;
  cfg.candidate_target = 16;  // not below the dataset size
  cfg.progress_factor = 2.0;
  cfg.score_set_init = 4;
  CHECK_THROWS_AS(cfg.validate(world.train), ConfigError);
  cfg.candidate_target = 4;
  cfg.progress_factor = 1.0;
  CHECK_THROWS_AS(cfg.validate(world.train), ConfigError);
  cfg.progress_factor = 2.0;
  cfg.score_set_init = 0;
  CHECK_THROWS_AS(cfg.validate(world.train), ConfigError);
  cfg.score_set_init = 4;
  cfg.label_balance = true;
  cfg.candidate_target = 5;  // not divisible by two labels
  CHECK_THROWS_AS(cfg.validate(world.train), ConfigError);
  cfg.candidate_target = 4;
  CHECK_NOTHROW(cfg.validate(world.train));
}

TEST_CASE("default schedule reproduces the published factors") {
  // (dataset size, expected factor) pairs from the reference settings.
  const std::pair<int, int> table[] = {{6921, 2}, {8544, 2}, {30000, 3},
                                       {8662, 2}, {8000, 2}, {5452, 2}};
  for (auto [n, factor] : table) {
    Schedule s = default_schedule(n, 4, 500, 10000);
    CHECK(s.progress_factor == doctest::Approx(factor));
  }
}

TEST_CASE("default schedule clamps and stays within budget") {
  Schedule tiny = default_schedule(16, 4, 500, 10000);
  CHECK(tiny.progress_factor == 2.0);  // clamped from below

  for (int n : {256, 1024, 4096, 30000}) {
    Schedule s = default_schedule(n, 4, 16, 10000);
    CHECK(s.progress_factor >= 2.0);
    CHECK(s.progress_factor <= 3.0);
    CHECK(s.score_set_init >= 1);
    long cost = static_cast<long>(n) * s.score_set_init * s.iterations;
    // Maximal subject to the budget, unless already at the floor of 1.
    if (s.score_set_init > 1) {
      CHECK(cost <= 10000);
      CHECK(static_cast<long>(n) * (s.score_set_init + 1) * s.iterations >
            10000);
    }
  }
}
