#include "lens/types.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace lens {

Dataset::Dataset(std::vector<Example> examples,
                 std::vector<std::string> label_space, std::string source)
    : examples_(std::move(examples)),
      label_space_(std::move(label_space)),
      source_(std::move(source)) {
  index_.reserve(examples_.size());
  for (size_t i = 0; i < examples_.size(); ++i) {
    const Example& e = examples_[i];
    if (e.label < 0 || e.label >= label_count()) {
      throw IngestError("dataset " + source_ + ": example id " +
                        std::to_string(e.id) + " has label index " +
                        std::to_string(e.label) + " outside the label space");
    }
    if (!index_.emplace(e.id, i).second) {
      throw IngestError("dataset " + source_ + ": duplicate example id " +
                        std::to_string(e.id));
    }
  }
}

const Example& Dataset::by_id(int id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw LookupError("example id " + std::to_string(id) + " not found in " +
                      source_);
  }
  return examples_[it->second];
}

std::vector<int> Dataset::ids() const {
  std::vector<int> out;
  out.reserve(examples_.size());
  for (const Example& e : examples_) out.push_back(e.id);
  return out;
}

std::vector<int> Dataset::ids_with_label(int label) const {
  std::vector<int> out;
  for (const Example& e : examples_)
    if (e.label == label) out.push_back(e.id);
  return out;
}

void Permutation::validate(const Dataset& dataset, bool label_balance) const {
  std::set<int> seen;
  std::vector<int> per_label(dataset.label_count(), 0);
  for (int id : example_ids) {
    if (!seen.insert(id).second)
      throw LensError("permutation contains duplicate id " +
                      std::to_string(id));
    per_label[dataset.by_id(id).label]++;
  }
  if (label_balance) {
    int n = static_cast<int>(example_ids.size());
    int labels = dataset.label_count();
    if (n % labels != 0)
      throw LensError("label-balanced permutation size " + std::to_string(n) +
                      " is not divisible by " + std::to_string(labels) +
                      " labels");
    for (int l = 0; l < labels; ++l) {
      if (per_label[l] != n / labels)
        throw LensError("label quota violated: label " + std::to_string(l) +
                        " appears " + std::to_string(per_label[l]) +
                        " times, expected " + std::to_string(n / labels));
    }
  }
}

std::string Permutation::serialize() const {
  std::ostringstream out;
  for (size_t i = 0; i < example_ids.size(); ++i) {
    if (i) out << ',';
    out << example_ids[i];
  }
  return out.str();
}

Permutation Permutation::parse(const std::string& text) {
  Permutation p;
  if (text.empty()) return p;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    size_t pos = 0;
    int v = std::stoi(tok, &pos);
    if (pos != tok.size())
      throw LensError("malformed permutation token '" + tok + "'");
    p.example_ids.push_back(v);
  }
  return p;
}

}  // namespace lens
