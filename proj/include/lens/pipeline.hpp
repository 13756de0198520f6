#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "lens/run_config.hpp"
#include "lens/score_cache.hpp"

namespace lens {

enum class Stage { kFilter, kSearch, kEval };
Stage stage_from_string(const std::string& s);

struct RunPaths {
  std::filesystem::path dir;
  std::filesystem::path config_lock() const { return dir / "config.lock.json"; }
  std::filesystem::path score_cache() const { return dir / "scores.cache.jsonl"; }
  std::filesystem::path contributions() const { return dir / "contributions.jsonl"; }
  std::filesystem::path filter_report() const { return dir / "filter_report.json"; }
  std::filesystem::path search_trace() const { return dir / "search_trace.jsonl"; }
  std::filesystem::path support_examples() const { return dir / "support_examples.json"; }
  std::filesystem::path eval_report() const { return dir / "eval_report.json"; }
};

// One materialized run: datasets, template, scorer stack and artifact paths.
// Creating it prepares the run directory and refuses a directory whose
// config.lock.json disagrees with the resolved configuration.
struct RunEnv {
  RunConfig config;
  RunPaths paths;
  std::optional<PlantedWorld> planted;
  Dataset train;
  std::optional<Dataset> test;
  PromptTemplate prompt;
  std::unique_ptr<Scorer> backend;
  std::unique_ptr<ScoreCache> cache;
  std::unique_ptr<CachingScorer> scorer;

  static RunEnv open(RunConfig config);

  uint64_t backend_calls() const { return backend->backend_calls(); }
};

void run_filter_stage(RunEnv& env);
void run_search_stage(RunEnv& env);
void run_eval_stage(RunEnv& env);

/// Runs the stages from `start` onward. With resume, stages whose artifacts
/// already exist are skipped. Returns a process exit status.
int run_pipeline(RunEnv& env, Stage start = Stage::kFilter, bool resume = false);

}  // namespace lens
