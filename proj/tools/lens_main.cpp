#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "lens/pipeline.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::string run_dir;
  std::string seed;
  std::string scorer;
  std::string calibration;
  std::string stage;
  bool resume = false;
  bool invert = false;
  int workers = 0;
};

void add_common(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--config", opt.config_path, "Run configuration (JSON)")
      ->required();
  cmd->add_option("--run-dir", opt.run_dir, "Artifact directory override");
  cmd->add_option("--seed", opt.seed, "Seed override");
  cmd->add_option("--scorer", opt.scorer, "Scorer backend: synthetic|remote");
  cmd->add_option("--calibration", opt.calibration,
                  "Calibration: off|content_free");
  cmd->add_option("--workers", opt.workers, "Concurrent scoring workers");
  cmd->add_flag("--resume", opt.resume,
                "Skip stages whose artifacts already exist");
}

lens::RunConfig load_config(const CliOptions& opt) {
  lens::RunConfig cfg = lens::RunConfig::from_file(opt.config_path);
  if (!opt.run_dir.empty()) cfg.run_dir = opt.run_dir;
  if (!opt.seed.empty()) cfg.seed = std::stoull(opt.seed);
  if (!opt.scorer.empty()) cfg.scorer.backend = opt.scorer;
  if (!opt.calibration.empty())
    cfg.calibration = lens::calibration_from_string(opt.calibration);
  if (opt.workers > 0) cfg.workers = opt.workers;
  if (opt.invert) cfg.filter.invert = true;
  cfg.validate();
  return cfg;
}

int run_from(const CliOptions& opt, lens::Stage start) {
  lens::RunEnv env = lens::RunEnv::open(load_config(opt));
  return lens::run_pipeline(env, start, opt.resume);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LENS: filter-then-search selection of in-context support examples"};
  app.require_subcommand(1);

  CliOptions opt;
  CLI::App* select = app.add_subcommand(
      "select", "Run filtering, search and evaluation end to end");
  add_common(select, opt);
  select->add_option("--stage", opt.stage,
                     "Start from this stage: filter|search|eval");
  select->add_flag("--invert", opt.invert,
                   "Test mode: keep the LOWEST InfoScores in filtering");

  CLI::App* filter = app.add_subcommand("filter", "Run progressive filtering only");
  add_common(filter, opt);
  filter->add_flag("--invert", opt.invert,
                   "Test mode: keep the LOWEST InfoScores");

  CLI::App* search =
      app.add_subcommand("search", "Run diversity-guided search from filter artifacts");
  add_common(search, opt);

  CLI::App* eval =
      app.add_subcommand("eval", "Evaluate support_examples.json on the test split");
  add_common(eval, opt);

  CLI11_PARSE(app, argc, argv);

  try {
    if (select->parsed()) {
      lens::Stage start = opt.stage.empty() ? lens::Stage::kFilter
                                            : lens::stage_from_string(opt.stage);
      return run_from(opt, start);
    }
    lens::RunEnv env = lens::RunEnv::open(load_config(opt));
    if (filter->parsed()) {
      lens::run_filter_stage(env);
    } else if (search->parsed()) {
      lens::run_search_stage(env);
    } else if (eval->parsed()) {
      lens::run_eval_stage(env);
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":\"" << e.what() << "\"}" << std::endl;
    return 1;
  }
}
