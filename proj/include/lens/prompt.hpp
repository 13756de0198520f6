#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lens/types.hpp"

namespace lens {

// Prompt shape for one task: a pattern with exactly one [INPUT] and one
// [VERBALIZER] slot, one verbalizer per label, and the separator inserted
// between rendered examples.
//
// A demo renders with its gold verbalizer in place. The test input renders
// as the pattern prefix cut at the verbalizer slot, so the scored completion
// is exactly " " + verbalizer (one leading space; a single space preceding
// the slot in the pattern is folded into the completion).
struct PromptTemplate {
  std::string pattern;
  std::vector<std::string> verbalizers;
  std::string separator = "\n";

  void validate(int label_count) const;

  std::string render_demo(const Example& e) const;
  std::string render_test(const std::string& input) const;
  std::string completion_for(int label) const;

  /// Content digest, recorded in artifacts as the template id.
  std::string id() const;
};

/// Concatenates rendered demos (joined by the separator), then the rendered
/// test input if present. Demo ids must resolve in `dataset`.
std::string render_context(const PromptTemplate& tmpl, const Dataset& dataset,
                           std::span<const int> demo_ids,
                           const std::optional<std::string>& test_input);

/// Loads {pattern, verbalizers, separator} from a JSON document. Verbalizers
/// are given as a label-name -> string map and are ordered by label_space.
PromptTemplate template_from_json_text(const std::string& json_text,
                                       const std::vector<std::string>& label_space);

}  // namespace lens
