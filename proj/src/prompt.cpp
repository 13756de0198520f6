#include "lens/prompt.hpp"

#include <json.hpp>

#include "lens/digest.hpp"

namespace lens {

namespace {

constexpr const char* kInputSlot = "[INPUT]";
constexpr const char* kVerbalizerSlot = "[VERBALIZER]";

size_t count_occurrences(const std::string& s, const std::string& needle) {
  size_t n = 0;
  for (size_t pos = s.find(needle); pos != std::string::npos;
       pos = s.find(needle, pos + needle.size()))
    ++n;
  return n;
}

std::string replace_once(std::string s, const std::string& slot,
                         const std::string& value) {
  size_t pos = s.find(slot);
  s.replace(pos, slot.size(), value);
  return s;
}

}  // namespace

void PromptTemplate::validate(int label_count) const {
  if (count_occurrences(pattern, kInputSlot) != 1)
    throw ConfigError("template pattern must contain exactly one [INPUT]");
  if (count_occurrences(pattern, kVerbalizerSlot) != 1)
    throw ConfigError("template pattern must contain exactly one [VERBALIZER]");
  if (static_cast<int>(verbalizers.size()) != label_count)
    throw ConfigError("template has " + std::to_string(verbalizers.size()) +
                      " verbalizers for " + std::to_string(label_count) +
                      " labels");
}

std::string PromptTemplate::render_demo(const Example& e) const {
  std::string s = replace_once(pattern, kInputSlot, e.text);
  return replace_once(std::move(s), kVerbalizerSlot,
                      verbalizers.at(static_cast<size_t>(e.label)));
}

std::string PromptTemplate::render_test(const std::string& input) const {
  std::string s = replace_once(pattern, kInputSlot, input);
  size_t pos = s.find(kVerbalizerSlot);
  s.erase(pos);
  // One space before the slot belongs to the completion.
  if (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

std::string PromptTemplate::completion_for(int label) const {
  return " " + verbalizers.at(static_cast<size_t>(label));
}

std::string PromptTemplate::id() const {
  std::string blob = pattern;
  blob.push_back('\0');
  for (const std::string& v : verbalizers) {
    blob += v;
    blob.push_back('\0');
  }
  blob += separator;
  return sha256_hex(blob).substr(0, 16);
}

std::string render_context(const PromptTemplate& tmpl, const Dataset& dataset,
                           std::span<const int> demo_ids,
                           const std::optional<std::string>& test_input) {
  std::string out;
  for (size_t i = 0; i < demo_ids.size(); ++i) {
    if (i) out += tmpl.separator;
    out += tmpl.render_demo(dataset.by_id(demo_ids[i]));
  }
  if (test_input) {
    if (!demo_ids.empty()) out += tmpl.separator;
    out += tmpl.render_test(*test_input);
  }
  return out;
}

PromptTemplate template_from_json_text(
    const std::string& json_text, const std::vector<std::string>& label_space) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("template: invalid JSON: ") + e.what());
  }
  PromptTemplate tmpl;
  if (!doc.contains("pattern") || !doc["pattern"].is_string())
    throw ConfigError("template: missing string field 'pattern'");
  tmpl.pattern = doc["pattern"].get<std::string>();
  if (doc.contains("separator")) tmpl.separator = doc["separator"].get<std::string>();
  if (!doc.contains("verbalizers") || !doc["verbalizers"].is_object())
    throw ConfigError("template: missing object field 'verbalizers'");
  for (const std::string& label : label_space) {
    if (!doc["verbalizers"].contains(label))
      throw ConfigError("template: no verbalizer for label '" + label + "'");
    tmpl.verbalizers.push_back(doc["verbalizers"][label].get<std::string>());
  }
  tmpl.validate(static_cast<int>(label_space.size()));
  return tmpl;
}

}  // namespace lens
