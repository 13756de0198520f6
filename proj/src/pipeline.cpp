#include "lens/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "lens/rng.hpp"

namespace lens {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

enum SeedTag : uint64_t {
  kSeedFilter = 0x66696c74,
  kSeedSearch = 0x73726368,
  kSeedValidation = 0x76616c64,
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw LensError("cannot write " + path.string());
  out << text;
}

json load_json_artifact(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw LensError("missing prerequisite artifact: " + path.string());
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded())
    throw LensError("corrupt artifact: " + path.string());
  return doc;
}

// Label-stratified validation sample from the training examples that
// survived to neither the candidate list nor, trivially, the demo pool.
std::vector<Example> sample_validation(const Dataset& train,
                                       const std::vector<int>& candidates,
                                       int size, uint64_t seed) {
  std::set<int> excluded(candidates.begin(), candidates.end());
  std::vector<std::vector<int>> by_label(
      static_cast<size_t>(train.label_count()));
  for (const Example& e : train.examples())
    if (!excluded.count(e.id))
      by_label[static_cast<size_t>(e.label)].push_back(e.id);

  int labels = train.label_count();
  int base = size / labels;
  int remainder = size % labels;
  Rng rng(mix64(seed, kSeedValidation));
  std::vector<int> chosen;
  std::vector<std::pair<int, std::vector<int>>> shortfall;
  for (int l = 0; l < labels; ++l) {
    int want = base + (l < remainder ? 1 : 0);
    auto& pool = by_label[static_cast<size_t>(l)];
    int take = std::min<int>(want, static_cast<int>(pool.size()));
    std::vector<int> picked = rng.sample(pool, static_cast<size_t>(take));
    for (int id : picked) chosen.push_back(id);
    if (take < want) shortfall.push_back({want - take, {}});
  }
  if (static_cast<int>(chosen.size()) < size) {
    // Backfill from whatever remains, keeping determinism.
    std::set<int> have(chosen.begin(), chosen.end());
    std::vector<int> rest;
    for (const Example& e : train.examples())
      if (!excluded.count(e.id) && !have.count(e.id)) rest.push_back(e.id);
    int need = size - static_cast<int>(chosen.size());
    if (need > static_cast<int>(rest.size()))
      throw ConfigError("validation: need " + std::to_string(size) +
                        " examples outside the candidate pool, only " +
                        std::to_string(chosen.size() + rest.size()) +
                        " available");
    for (int id : rng.sample(rest, static_cast<size_t>(need)))
      chosen.push_back(id);
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<Example> out;
  out.reserve(chosen.size());
  for (int id : chosen) out.push_back(train.by_id(id));
  return out;
}

}  // namespace

Stage stage_from_string(const std::string& s) {
  if (s == "filter") return Stage::kFilter;
  if (s == "search") return Stage::kSearch;
  if (s == "eval") return Stage::kEval;
  throw ConfigError("unknown stage '" + s + "' (expected filter, search or eval)");
}

RunEnv RunEnv::open(RunConfig config) {
  RunEnv env;
  env.paths.dir = config.run_dir;
  fs::create_directories(env.paths.dir);

  if (config.dataset.planted) {
    env.planted = make_planted_dataset(*config.dataset.planted);
    env.train = env.planted->train;
    env.test = env.planted->test;
    env.prompt = config.prompt ? *config.prompt : env.planted->default_template();
  } else {
    env.train = ingest_dataset(config.dataset.train_path, config.dataset.format,
                               config.dataset.label_space);
    if (!config.dataset.test_path.empty())
      env.test = ingest_dataset(config.dataset.test_path, config.dataset.format,
                                config.dataset.label_space);
    env.prompt = *config.prompt;
  }
  env.prompt.validate(env.train.label_count());
  config.prompt = env.prompt;

  if (config.schedule_from_defaults) {
    Schedule s = default_schedule(env.train.size(), config.schedule_constant,
                                  config.filter.candidate_target,
                                  config.schedule_pair_budget);
    config.filter.progress_factor = s.progress_factor;
    config.filter.score_set_init = s.score_set_init;
  }
  config.filter.seed = mix64(config.seed, kSeedFilter);
  config.filter.workers = config.workers;
  config.search.seed = mix64(config.seed, kSeedSearch);
  config.search.workers = config.workers;
  env.config = std::move(config);

  // The lock file pins the resolved configuration; a mismatch means the
  // directory belongs to a different run.
  std::string resolved = env.config.resolved_json();
  if (fs::exists(env.paths.config_lock())) {
    if (slurp(env.paths.config_lock()) != resolved)
      throw ConfigError("run dir " + env.paths.dir.string() +
                        " was locked by a different configuration; use a "
                        "fresh directory");
  } else {
    write_text(env.paths.config_lock(), resolved);
  }

  if (env.config.scorer.backend == "synthetic") {
    env.backend = std::make_unique<SyntheticScorer>(*env.planted);
  } else {
    env.backend = std::make_unique<RemoteScorer>(
        RemoteOptions::from_env(env.config.scorer.remote));
  }
  env.cache = std::make_unique<ScoreCache>(env.paths.score_cache().string());
  env.scorer = std::make_unique<CachingScorer>(*env.backend, *env.cache);
  return env;
}

void run_filter_stage(RunEnv& env) {
  ContributionMatrix matrix;
  FilterResult result = progressive_filter(env.train, env.config.filter,
                                           env.prompt, *env.scorer, matrix);
  matrix.save(env.paths.contributions().string());

  ordered_json report;
  report["schema_version"] = 1;
  report["dataset_size"] = env.train.size();
  report["config"]["candidate_target"] = env.config.filter.candidate_target;
  report["config"]["progress_factor"] = env.config.filter.progress_factor;
  report["config"]["initial_score_set"] = env.config.filter.score_set_init;
  report["config"]["label_balance"] = env.config.filter.label_balance;
  report["config"]["invert"] = env.config.filter.invert;
  report["iterations"] = json::array();
  for (const FilterIterationStats& it : result.iterations) {
    ordered_json row;
    row["survivors_before"] = it.survivors_before;
    row["survivors_after"] = it.survivors_after;
    row["score_set_size"] = it.score_set_size;
    row["score_set_added"] = it.score_set_added;
    row["scorer_calls"] = it.scorer_calls;
    report["iterations"].push_back(row);
  }
  report["candidates"] = json::array();
  for (size_t i = 0; i < result.candidates.size(); ++i) {
    ordered_json row;
    row["id"] = result.candidates[i];
    row["infoscore"] = result.candidate_scores[i];
    report["candidates"].push_back(row);
  }
  report["score_set"] = result.score_set;
  report["scorer_calls_total"] = result.scorer_calls_total;
  write_text(env.paths.filter_report(), report.dump(2) + "\n");
}

void run_search_stage(RunEnv& env) {
  json filter_doc = load_json_artifact(env.paths.filter_report());
  ContributionMatrix matrix =
      ContributionMatrix::load(env.paths.contributions().string());

  std::vector<int> candidates;
  for (const auto& row : filter_doc["candidates"])
    candidates.push_back(row["id"].get<int>());
  std::vector<int> score_set = filter_doc["score_set"].get<std::vector<int>>();

  const SearchConfig& cfg = env.config.search;
  cfg.validate(env.train, static_cast<int>(candidates.size()));

  std::vector<Example> validation = sample_validation(
      env.train, candidates, cfg.validation_size, env.config.seed);

  SearchContext ctx(env.train, candidates, matrix, score_set,
                    cfg.diversity_weight);
  Evaluator evaluator(env.train, env.prompt, *env.scorer);
  Rng rng(cfg.seed);
  uint64_t calls_before = env.backend_calls();

  std::vector<Permutation> init = init_permutations(ctx, cfg, rng);
  SearchOutcome outcome = beam_search(init, ctx, cfg, validation, evaluator,
                                      env.config.calibration, rng);

  std::ofstream trace(env.paths.search_trace(), std::ios::trunc | std::ios::binary);
  if (!trace) throw LensError("cannot write " + env.paths.search_trace().string());
  for (const SearchIterationTrace& it : outcome.trace) {
    ordered_json row;
    row["iteration"] = it.iteration;
    row["fresh_evaluations"] = it.fresh_evaluations;
    row["best_so_far"] = it.best_so_far;
    row["beam"] = json::array();
    for (const ScoredPermutation& sp : it.beam) {
      ordered_json member;
      member["ids"] = sp.permutation.example_ids;
      member["validation_accuracy"] = sp.validation_accuracy;
      member["provenance"] = provenance_label(sp.provenance);
      row["beam"].push_back(member);
    }
    trace << row.dump() << '\n';
  }
  ordered_json summary;
  summary["summary"] = true;
  summary["unique_evaluations"] = outcome.unique_evaluations;
  summary["dropped_children"] = outcome.dropped_children;
  summary["scorer_backend_calls"] = env.backend_calls() - calls_before;
  summary["validation_ids"] = [&] {
    std::vector<int> ids;
    for (const Example& e : validation) ids.push_back(e.id);
    return ids;
  }();
  trace << summary.dump() << '\n';
  trace.close();

  ordered_json support;
  support["schema_version"] = 1;
  support["example_ids"] = outcome.best.permutation.example_ids;
  support["examples"] = json::array();
  for (int id : outcome.best.permutation.example_ids) {
    const Example& e = env.train.by_id(id);
    ordered_json row;
    row["id"] = e.id;
    row["text"] = e.text;
    row["label"] = env.train.label_space()[static_cast<size_t>(e.label)];
    support["examples"].push_back(row);
  }
  support["template_id"] = env.prompt.id();
  support["validation_accuracy"] = outcome.best.validation_accuracy;
  support["seed"] = env.config.seed;
  write_text(env.paths.support_examples(), support.dump(2) + "\n");
}

void run_eval_stage(RunEnv& env) {
  if (!env.test)
    throw ConfigError("eval: no test split configured for this run");
  json support = load_json_artifact(env.paths.support_examples());
  Permutation perm;
  perm.example_ids = support["example_ids"].get<std::vector<int>>();
  perm.validate(env.train);

  Evaluator evaluator(env.train, env.prompt, *env.scorer);
  uint64_t calls_before = env.backend_calls();
  auto t0 = std::chrono::steady_clock::now();
  TestsetReport report = evaluator.evaluate_testset(
      perm, *env.test, env.config.calibration, env.config.workers);
  auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - t0);

  ordered_json out;
  out["schema_version"] = 1;
  out["accuracy"] = report.accuracy;
  out["total"] = report.total;
  out["correct"] = report.correct;
  out["per_label"] = json::array();
  for (const LabelBreakdown& row : report.per_label) {
    ordered_json r;
    r["label"] = row.label;
    r["total"] = row.total;
    r["correct"] = row.correct;
    out["per_label"].push_back(r);
  }
  out["calibration"] = calibration_label(env.config.calibration);
  out["scorer_backend_calls"] = env.backend_calls() - calls_before;
  out["wall_time_ms"] = elapsed.count();
  write_text(env.paths.eval_report(), out.dump(2) + "\n");
}

int run_pipeline(RunEnv& env, Stage start, bool resume) {
  auto should_run = [&](Stage stage, const fs::path& artifact) {
    if (static_cast<int>(stage) < static_cast<int>(start)) return false;
    if (resume && fs::exists(artifact)) return false;
    return true;
  };
  try {
    if (should_run(Stage::kFilter, env.paths.filter_report()))
      run_filter_stage(env);
    if (should_run(Stage::kSearch, env.paths.support_examples()))
      run_search_stage(env);
    if (should_run(Stage::kEval, env.paths.eval_report()))
      run_eval_stage(env);
  } catch (const std::exception& e) {
    ordered_json err;
    err["error"] = e.what();
    std::cerr << err.dump() << std::endl;
    return 1;
  }
  return 0;
}

}  // namespace lens
