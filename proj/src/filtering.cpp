#include "lens/filtering.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "lens/rng.hpp"

namespace lens {

namespace {

// Ranked ids by (score desc, id asc); inverted mode ranks ascending.
std::vector<int> ranked(const std::vector<int>& pool,
                        const std::map<int, double>& totals, bool invert) {
  std::vector<int> order = pool;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    double sa = totals.at(a), sb = totals.at(b);
    if (sa != sb) return invert ? sa < sb : sa > sb;
    return a < b;
  });
  return order;
}

// Top-k overall, or per-label quotas of k/labels when balancing. Quota
// shortfalls (a label running out of survivors) are backfilled globally.
std::vector<int> select_top(const std::vector<int>& pool,
                            const std::map<int, double>& totals, int k,
                            const Dataset& dataset, bool label_balance,
                            bool invert) {
  std::vector<int> order = ranked(pool, totals, invert);
  if (!label_balance) {
    order.resize(static_cast<size_t>(std::min<int>(k, order.size())));
    std::sort(order.begin(), order.end());
    return order;
  }
  int labels = dataset.label_count();
  int quota = k / labels;
  int remainder = k % labels;
  std::set<int> chosen;
  std::vector<int> taken(labels, 0);
  for (int pass = 0; pass < 2; ++pass) {
    for (int id : order) {
      if (static_cast<int>(chosen.size()) == k) break;
      if (chosen.count(id)) continue;
      int label = dataset.by_id(id).label;
      int cap = quota + (label < remainder ? 1 : 0);
      if (pass == 0 && taken[label] >= cap) continue;
      chosen.insert(id);
      taken[label]++;
    }
  }
  return {chosen.begin(), chosen.end()};
}

}  // namespace

void FilterConfig::validate(const Dataset& dataset) const {
  if (candidate_target < 1)
    throw ConfigError("filter: candidate target must be at least 1");
  if (candidate_target >= dataset.size())
    throw ConfigError("filter: candidate target " +
                      std::to_string(candidate_target) +
                      " must be below the dataset size " +
                      std::to_string(dataset.size()));
  if (progress_factor <= 1.0)
    throw ConfigError("filter: progress factor must exceed 1");
  if (score_set_init < 1)
    throw ConfigError("filter: initial score-set size must be at least 1");
  if (score_set_init > dataset.size())
    throw ConfigError("filter: initial score-set size exceeds the dataset");
  if (label_balance && candidate_target % dataset.label_count() != 0)
    throw ConfigError("filter: label balance needs a candidate target divisible by " +
                      std::to_string(dataset.label_count()) + " labels");
}

FilterResult progressive_filter(const Dataset& dataset, const FilterConfig& cfg,
                                const PromptTemplate& tmpl, Scorer& scorer,
                                ContributionMatrix& matrix) {
  cfg.validate(dataset);
  tmpl.validate(dataset.label_count());

  Rng rng(mix64(cfg.seed, 0xf117e2));
  ContributionEngine engine(dataset, tmpl, scorer, matrix, cfg.workers);

  std::vector<int> pool = dataset.ids();
  std::map<int, double> totals;
  for (int id : pool) totals[id] = 0.0;

  FilterResult result;
  std::set<int> in_score_set;
  uint64_t calls_at_start = scorer.backend_calls();

  // Members added this round; the first round scores the initial sample.
  std::vector<int> fresh =
      rng.sample(pool, static_cast<size_t>(cfg.score_set_init));
  for (int id : fresh) {
    result.score_set.push_back(id);
    in_score_set.insert(id);
  }

  while (true) {
    FilterIterationStats stats;
    stats.survivors_before = static_cast<int>(pool.size());
    stats.score_set_added = static_cast<int>(fresh.size());
    stats.score_set_size = static_cast<int>(result.score_set.size());
    uint64_t calls_before = scorer.backend_calls();

    engine.compute_block(pool, fresh);
    for (int id : pool) totals[id] += engine.infoscore(id, fresh);

    stats.scorer_calls = scorer.backend_calls() - calls_before;

    int n = static_cast<int>(pool.size());
    bool final_cut =
        static_cast<double>(n) / cfg.progress_factor < cfg.candidate_target;
    int keep = final_cut
                   ? cfg.candidate_target
                   : static_cast<int>(std::ceil(n / cfg.progress_factor));
    // Fractional factors just above 1 can stall on tiny pools; force progress.
    if (!final_cut && keep >= n) keep = n - 1;
    pool = select_top(pool, totals, keep, dataset, cfg.label_balance, cfg.invert);
    stats.survivors_after = static_cast<int>(pool.size());
    result.iterations.push_back(stats);
    if (final_cut || static_cast<int>(pool.size()) <= cfg.candidate_target)
      break;

    // Grow the score set to progress_factor times its size with members
    // sampled from the dataset outside the current score set.
    int target =
        static_cast<int>(std::ceil(result.score_set.size() * cfg.progress_factor));
    int add = target - static_cast<int>(result.score_set.size());
    std::vector<int> outside;
    for (int id : dataset.ids())
      if (!in_score_set.count(id)) outside.push_back(id);
    if (add > static_cast<int>(outside.size()))
      throw ConfigError(
          "filter: cannot grow the score set to " + std::to_string(target) +
          " members, only " + std::to_string(outside.size()) +
          " unsampled examples remain; lower the initial size or the factor");
    fresh = rng.sample(outside, static_cast<size_t>(add));
    for (int id : fresh) {
      result.score_set.push_back(id);
      in_score_set.insert(id);
    }
  }

  result.candidates = ranked(pool, totals, cfg.invert);
  for (int id : result.candidates) result.candidate_scores.push_back(totals[id]);
  result.scorer_calls_total = scorer.backend_calls() - calls_at_start;
  return result;
}

Schedule default_schedule(int dataset_size, int iteration_constant,
                          int candidate_target, long pair_budget) {
  if (dataset_size < 2) throw ConfigError("schedule: dataset too small");
  if (iteration_constant < 1) throw ConfigError("schedule: constant must be >= 1");

  Schedule s;
  double ratio = static_cast<double>(dataset_size) /
                 std::max(1, std::min(candidate_target, dataset_size - 1));
  double raw = std::pow(ratio, 1.0 / iteration_constant);
  s.progress_factor = std::round(std::clamp(raw, 2.0, 3.0));
  s.iterations = std::max(
      1, static_cast<int>(std::ceil(std::log(ratio) / std::log(s.progress_factor))));
  long per_unit = static_cast<long>(dataset_size) * s.iterations;
  s.score_set_init =
      std::max(1, static_cast<int>(pair_budget / std::max<long>(1, per_unit)));
  s.score_set_init = std::min(s.score_set_init, dataset_size);
  return s;
}

}  // namespace lens
