#include "lens/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "lens/digest.hpp"
#include "lens/rng.hpp"

namespace lens {

namespace {

enum HashTag : uint64_t {
  kTagQ = 0x71,
  kTagRegion = 0x72,
  kTagBase = 0x62,
  kTagEps = 0x65,
};

double unit_hash(uint64_t seed, uint64_t tag, uint64_t a, uint64_t b = 0) {
  uint64_t h = mix64(seed, tag);
  h = mix64(h, a);
  h = mix64(h, b);
  return to_unit(h);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<std::string> planted_label_space(int n_labels) {
  if (n_labels == 2) return {"neg", "pos"};
  std::vector<std::string> out;
  for (int i = 0; i < n_labels; ++i) out.push_back("label" + std::to_string(i));
  return out;
}

std::vector<std::string> planted_verbalizers(int n_labels) {
  static const std::vector<std::string> words = {
      "terrible", "great", "okay", "odd", "plain", "sharp", "mild", "bold",
      "quiet",    "loud",  "flat", "deep", "thin", "wide"};
  if (n_labels == 2) return {"terrible", "great"};
  std::vector<std::string> out;
  for (int i = 0; i < n_labels; ++i)
    out.push_back(i < static_cast<int>(words.size())
                      ? words[static_cast<size_t>(i)]
                      : "word" + std::to_string(i));
  return out;
}

}  // namespace

std::string PlantedSpec::digest() const {
  std::ostringstream s;
  s << n_train << '|' << n_test << '|' << n_labels << '|' << n_regions << '|'
    << seed << '|' << static_cast<int>(q_mode) << '|' << tier_count << '|'
    << tier_lo << '|' << tier_hi << '|' << rest_lo << '|' << rest_hi << '|'
    << eps_max << '|' << w_far << '|' << mismatch_penalty << '|' << base_lo
    << '|' << base_hi << '|' << cf_base;
  return sha256_hex(s.str()).substr(0, 16);
}

const PlantedExample& PlantedWorld::at(int id) const {
  if (id < 0 || id >= static_cast<int>(table.size()))
    throw LookupError("planted id " + std::to_string(id) +
                      " outside the planted dataset");
  return table[static_cast<size_t>(id)];
}

PromptTemplate PlantedWorld::default_template() const {
  PromptTemplate tmpl;
  tmpl.pattern = "[INPUT] It was [VERBALIZER].";
  tmpl.verbalizers = planted_verbalizers(spec.n_labels);
  tmpl.separator = "\n";
  tmpl.validate(spec.n_labels);
  return tmpl;
}

PlantedWorld make_planted_dataset(const PlantedSpec& spec) {
  if (spec.n_train < 1 || spec.n_test < 0)
    throw ConfigError("planted spec: split sizes must be positive");
  if (spec.n_labels < 1 || spec.n_regions < 1)
    throw ConfigError("planted spec: need at least one label and one region");
  if (spec.q_mode == PlantedSpec::QMode::kTiered &&
      (spec.tier_count < 1 || spec.tier_count > spec.n_train ||
       spec.tier_lo <= spec.rest_hi))
    throw ConfigError("planted spec: tier must be non-empty and separated");

  PlantedWorld world;
  world.spec = spec;
  int total = spec.n_train + spec.n_test;
  world.table.reserve(static_cast<size_t>(total));
  for (int id = 0; id < total; ++id) {
    PlantedExample e;
    e.id = id;
    e.label = id % spec.n_labels;
    e.region = static_cast<int>(unit_hash(spec.seed, kTagRegion, id) *
                                spec.n_regions);
    e.q = 0.0;
    world.table.push_back(e);
  }

  if (spec.q_mode == PlantedSpec::QMode::kSquaredUniform) {
    for (auto& e : world.table) {
      double u = unit_hash(spec.seed, kTagQ, e.id);
      e.q = u * u;
    }
  } else {
    // Spread the tier evenly over labels so balanced quotas can recover it.
    Rng rng(mix64(spec.seed, kTagQ));
    std::vector<std::vector<int>> by_label(spec.n_labels);
    for (int id = 0; id < spec.n_train; ++id)
      by_label[world.table[id].label].push_back(id);
    for (auto& group : by_label) rng.shuffle(group);
    int per_label = spec.tier_count / spec.n_labels;
    int remainder = spec.tier_count % spec.n_labels;
    for (int l = 0; l < spec.n_labels; ++l) {
      int take = per_label + (l < remainder ? 1 : 0);
      for (int k = 0; k < static_cast<int>(by_label[l].size()); ++k) {
        PlantedExample& e = world.table[by_label[l][k]];
        double u = unit_hash(spec.seed, kTagQ, e.id, 1);
        e.q = k < take ? spec.tier_lo + u * (spec.tier_hi - spec.tier_lo)
                       : spec.rest_lo + u * (spec.rest_hi - spec.rest_lo);
      }
    }
    for (int id = spec.n_train; id < total; ++id) {
      double u = unit_hash(spec.seed, kTagQ, id, 1);
      world.table[id].q = spec.rest_lo + u * (spec.rest_hi - spec.rest_lo);
    }
  }

  std::vector<std::string> labels = planted_label_space(spec.n_labels);
  auto build_split = [&](int begin, int end, const std::string& name) {
    std::vector<Example> rows;
    rows.reserve(static_cast<size_t>(end - begin));
    for (int id = begin; id < end; ++id) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "planted sample %05d r%d",
                    world.table[id].id, world.table[id].region);
      rows.push_back(Example{id, buf, world.table[id].label});
    }
    return Dataset(std::move(rows), labels, name);
  };
  world.train = build_split(0, spec.n_train, "planted:train");
  world.test = build_split(spec.n_train, total, "planted:test");
  return world;
}

SyntheticScorer::SyntheticScorer(const PlantedWorld& world)
    : world_(world), backend_id_("synthetic:" + world.spec.digest()) {}

double SyntheticScorer::completion_probability(const IclView& icl,
                                               size_t index) const {
  const PlantedSpec& spec = world_.spec;
  int label = icl.completion_labels.at(index);
  if (label < 0 || label >= spec.n_labels)
    throw ProtocolError("completion label " + std::to_string(label) +
                        " outside the planted label space");

  if (icl.test_id == kContentFreeId) return logistic(spec.cf_base);

  const PlantedExample& test = world_.at(icl.test_id);
  double logit =
      spec.base_lo + (spec.base_hi - spec.base_lo) *
                         unit_hash(spec.seed, kTagBase, test.id, label);
  if (!icl.demo_ids.empty()) {
    double shift = 0.0;
    for (int demo_id : icl.demo_ids) {
      const PlantedExample& demo = world_.at(demo_id);
      double w = demo.region == test.region ? 1.0 : spec.w_far;
      double match = demo.label == test.label ? 1.0 : -spec.mismatch_penalty;
      shift += demo.q * w * match;
    }
    logit += (label == test.label ? 1.0 : -1.0) * shift;
    if (spec.eps_max > 0.0) {
      uint64_t h = mix64(spec.seed, kTagEps);
      for (int demo_id : icl.demo_ids) h = mix64(h, demo_id);
      h = mix64(h, static_cast<uint64_t>(test.id));
      h = mix64(h, static_cast<uint64_t>(label));
      logit += spec.eps_max * (2.0 * to_unit(h) - 1.0);
    }
  }
  return logistic(logit);
}

LabelProbabilities SyntheticScorer::score(const ScorerRequest& request) {
  request.validate();
  if (!request.icl)
    throw ProtocolError(
        "synthetic backend needs the structured ICL view on each request");
  if (request.icl->completion_labels.size() != request.completions.size())
    throw ProtocolError("completion labels not aligned with completions");
  count_call();
  LabelProbabilities out;
  out.probs.reserve(request.completions.size());
  for (size_t i = 0; i < request.completions.size(); ++i)
    out.probs.push_back(completion_probability(*request.icl, i));
  return out;
}

}  // namespace lens
