#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace lens {

struct LensError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : LensError {
  using LensError::LensError;
};
struct IngestError : LensError {
  using LensError::LensError;
};
struct LookupError : LensError {
  using LensError::LensError;
};
// Signals a pipeline bug: a value that must already be cached is missing.
struct ConsistencyError : LensError {
  using LensError::LensError;
};

/// One labeled training instance. label indexes the dataset's label space.
struct Example {
  int id = -1;
  std::string text;
  int label = -1;
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Example> examples, std::vector<std::string> label_space,
          std::string source);

  const std::vector<Example>& examples() const { return examples_; }
  const std::vector<std::string>& label_space() const { return label_space_; }
  const std::string& source() const { return source_; }
  int size() const { return static_cast<int>(examples_.size()); }
  int label_count() const { return static_cast<int>(label_space_.size()); }

  const Example& by_id(int id) const;
  bool has_id(int id) const { return index_.count(id) != 0; }

  std::vector<int> ids() const;
  std::vector<int> ids_with_label(int label) const;

 private:
  std::vector<Example> examples_;
  std::vector<std::string> label_space_;
  std::string source_;
  std::unordered_map<int, size_t> index_;
};

/// An ordered list of example ids; the unit the search stage manipulates.
struct Permutation {
  std::vector<int> example_ids;

  bool operator==(const Permutation&) const = default;

  // Throws on duplicate ids; with a label quota, each label must appear
  // exactly size/label_count times.
  void validate(const Dataset& dataset, bool label_balance = false) const;

  std::string serialize() const;
  static Permutation parse(const std::string& text);
};

}  // namespace lens
