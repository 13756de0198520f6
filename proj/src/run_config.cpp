#include "lens/run_config.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace lens {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

template <typename T>
void maybe(const json& doc, const char* key, T& out) {
  if (doc.contains(key)) out = doc[key].get<T>();
}

PlantedSpec planted_from_json(const json& doc) {
  PlantedSpec spec;
  maybe(doc, "n_train", spec.n_train);
  maybe(doc, "n_test", spec.n_test);
  maybe(doc, "n_labels", spec.n_labels);
  maybe(doc, "n_regions", spec.n_regions);
  maybe(doc, "seed", spec.seed);
  maybe(doc, "eps_max", spec.eps_max);
  maybe(doc, "w_far", spec.w_far);
  maybe(doc, "mismatch_penalty", spec.mismatch_penalty);
  maybe(doc, "base_lo", spec.base_lo);
  maybe(doc, "base_hi", spec.base_hi);
  maybe(doc, "cf_base", spec.cf_base);
  if (doc.contains("q_mode")) {
    std::string mode = doc["q_mode"].get<std::string>();
    if (mode == "squared_uniform")
      spec.q_mode = PlantedSpec::QMode::kSquaredUniform;
    else if (mode == "tiered")
      spec.q_mode = PlantedSpec::QMode::kTiered;
    else
      throw ConfigError("planted: unknown q_mode '" + mode + "'");
  }
  maybe(doc, "tier_count", spec.tier_count);
  maybe(doc, "tier_lo", spec.tier_lo);
  maybe(doc, "tier_hi", spec.tier_hi);
  maybe(doc, "rest_lo", spec.rest_lo);
  maybe(doc, "rest_hi", spec.rest_hi);
  return spec;
}

ordered_json planted_to_json(const PlantedSpec& s) {
  ordered_json out;
  out["n_train"] = s.n_train;
  out["n_test"] = s.n_test;
  out["n_labels"] = s.n_labels;
  out["n_regions"] = s.n_regions;
  out["seed"] = s.seed;
  out["q_mode"] = s.q_mode == PlantedSpec::QMode::kSquaredUniform
                      ? "squared_uniform"
                      : "tiered";
  out["tier_count"] = s.tier_count;
  out["tier_lo"] = s.tier_lo;
  out["tier_hi"] = s.tier_hi;
  out["rest_lo"] = s.rest_lo;
  out["rest_hi"] = s.rest_hi;
  out["eps_max"] = s.eps_max;
  out["w_far"] = s.w_far;
  out["mismatch_penalty"] = s.mismatch_penalty;
  out["base_lo"] = s.base_lo;
  out["base_hi"] = s.base_hi;
  out["cf_base"] = s.cf_base;
  return out;
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

RunConfig RunConfig::from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }

  RunConfig cfg;
  maybe(doc, "schema_version", cfg.schema_version);
  if (cfg.schema_version != 1)
    throw ConfigError("config: unsupported schema_version " +
                      std::to_string(cfg.schema_version));
  maybe(doc, "seed", cfg.seed);
  maybe(doc, "run_dir", cfg.run_dir);
  maybe(doc, "workers", cfg.workers);

  if (!doc.contains("dataset")) throw ConfigError("config: missing 'dataset'");
  const json& ds = doc["dataset"];
  if (ds.contains("planted")) {
    cfg.dataset.planted = planted_from_json(ds["planted"]);
  } else {
    maybe(ds, "train", cfg.dataset.train_path);
    maybe(ds, "test", cfg.dataset.test_path);
    if (cfg.dataset.train_path.empty())
      throw ConfigError("config: dataset needs 'train' or 'planted'");
    if (ds.contains("format"))
      cfg.dataset.format =
          dataset_format_from_string(ds["format"].get<std::string>());
    if (!ds.contains("label_space") || !ds["label_space"].is_array() ||
        ds["label_space"].empty())
      throw ConfigError("config: dataset needs a non-empty 'label_space'");
    cfg.dataset.label_space =
        ds["label_space"].get<std::vector<std::string>>();
  }

  if (doc.contains("template")) {
    std::vector<std::string> labels =
        cfg.dataset.planted
            ? make_planted_dataset(*cfg.dataset.planted).train.label_space()
            : cfg.dataset.label_space;
    cfg.prompt = template_from_json_text(doc["template"].dump(), labels);
  } else if (!cfg.dataset.planted) {
    throw ConfigError("config: file-backed datasets need a 'template'");
  }

  if (doc.contains("filter")) {
    const json& f = doc["filter"];
    maybe(f, "candidate_target", cfg.filter.candidate_target);
    maybe(f, "label_balance", cfg.filter.label_balance);
    maybe(f, "invert", cfg.filter.invert);
    maybe(f, "schedule_constant", cfg.schedule_constant);
    maybe(f, "pair_budget", cfg.schedule_pair_budget);
    bool has_factor = f.contains("progress_factor");
    bool has_init = f.contains("initial_score_set");
    if (has_factor != has_init)
      throw ConfigError(
          "config: set both progress_factor and initial_score_set, or neither");
    if (has_factor) {
      cfg.filter.progress_factor = f["progress_factor"].get<double>();
      cfg.filter.score_set_init = f["initial_score_set"].get<int>();
      cfg.schedule_from_defaults = false;
    }
  }

  if (doc.contains("search")) {
    const json& s = doc["search"];
    maybe(s, "demo_count", cfg.search.demo_count);
    maybe(s, "beam", cfg.search.beam);
    maybe(s, "substitutions", cfg.search.substitutions);
    maybe(s, "iterations", cfg.search.iterations);
    maybe(s, "diversity_weight", cfg.search.diversity_weight);
    maybe(s, "validation_size", cfg.search.validation_size);
    maybe(s, "label_balance", cfg.search.label_balance);
  }

  if (doc.contains("scorer")) {
    const json& s = doc["scorer"];
    maybe(s, "backend", cfg.scorer.backend);
    maybe(s, "endpoint", cfg.scorer.remote.endpoint);
    maybe(s, "timeout_ms", cfg.scorer.remote.timeout_ms);
    maybe(s, "retries", cfg.scorer.remote.retries);
  }
  if (doc.contains("calibration"))
    cfg.calibration =
        calibration_from_string(doc["calibration"].get<std::string>());

  cfg.validate();
  return cfg;
}

void RunConfig::validate() const {
  if (run_dir.empty()) throw ConfigError("config: run_dir is required");
  if (scorer.backend != "synthetic" && scorer.backend != "remote")
    throw ConfigError("config: scorer backend must be synthetic or remote");
  if (scorer.backend == "synthetic" && !dataset.planted)
    throw ConfigError("config: the synthetic scorer needs a planted dataset");
  if (workers < 1) throw ConfigError("config: workers must be positive");
}

std::string RunConfig::resolved_json() const {
  ordered_json out;
  out["schema_version"] = schema_version;
  out["seed"] = seed;
  out["run_dir"] = run_dir;
  if (dataset.planted) {
    out["dataset"]["planted"] = planted_to_json(*dataset.planted);
  } else {
    out["dataset"]["train"] = dataset.train_path;
    out["dataset"]["test"] = dataset.test_path;
    out["dataset"]["format"] =
        dataset.format == DatasetFormat::kJsonl ? "jsonl" : "csv";
    out["dataset"]["label_space"] = dataset.label_space;
  }
  if (prompt) {
    out["template"]["pattern"] = prompt->pattern;
    out["template"]["separator"] = prompt->separator;
    out["template"]["verbalizer_list"] = prompt->verbalizers;
    out["template"]["id"] = prompt->id();
  }
  out["filter"]["candidate_target"] = filter.candidate_target;
  out["filter"]["progress_factor"] = filter.progress_factor;
  out["filter"]["initial_score_set"] = filter.score_set_init;
  out["filter"]["label_balance"] = filter.label_balance;
  out["filter"]["invert"] = filter.invert;
  out["search"]["demo_count"] = search.demo_count;
  out["search"]["beam"] = search.beam;
  out["search"]["substitutions"] = search.substitutions;
  out["search"]["iterations"] = search.iterations;
  out["search"]["diversity_weight"] = search.diversity_weight;
  out["search"]["validation_size"] = search.validation_size;
  out["search"]["label_balance"] = search.label_balance;
  out["scorer"]["backend"] = scorer.backend;
  if (scorer.backend == "remote")
    out["scorer"]["endpoint"] = scorer.remote.endpoint;
  out["calibration"] = calibration == Calibration::kOff ? "off" : "content_free";
  out["workers"] = workers;
  return out.dump(2) + "\n";
}

}  // namespace lens
