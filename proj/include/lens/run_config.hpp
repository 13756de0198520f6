#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lens/dataset_io.hpp"
#include "lens/eval.hpp"
#include "lens/filtering.hpp"
#include "lens/prompt.hpp"
#include "lens/remote.hpp"
#include "lens/search.hpp"
#include "lens/synthetic.hpp"

namespace lens {

struct DatasetConfig {
  // File-backed splits...
  std::string train_path;
  std::string test_path;
  DatasetFormat format = DatasetFormat::kJsonl;
  std::vector<std::string> label_space;
  // ...or a generated planted world.
  std::optional<PlantedSpec> planted;
};

struct ScorerChoice {
  std::string backend = "synthetic";  // synthetic | remote
  RemoteOptions remote;
};

// Fully describes a run together with the seed and cache state. Parsed from
// a JSON document; CLI flags override file values which override defaults.
struct RunConfig {
  int schema_version = 1;
  uint64_t seed = 0;
  std::string run_dir;
  DatasetConfig dataset;
  std::optional<PromptTemplate> prompt;  // defaulted for planted datasets
  FilterConfig filter;
  bool schedule_from_defaults = true;  // no explicit factor/size in the file
  int schedule_constant = 4;
  long schedule_pair_budget = 10000;
  SearchConfig search;
  ScorerChoice scorer;
  Calibration calibration = Calibration::kOff;
  int workers = 1;

  static RunConfig from_file(const std::string& path);
  static RunConfig from_json_text(const std::string& text);

  /// Resolved snapshot (stable key order) as persisted to config.lock.json.
  std::string resolved_json() const;

  void validate() const;
};

}  // namespace lens
