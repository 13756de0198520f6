#pragma once

#include <string>
#include <vector>

#include "lens/types.hpp"

namespace lens {

enum class DatasetFormat { kJsonl, kCsv };

DatasetFormat dataset_format_from_string(const std::string& s);

/// Reads a labeled dataset. JSONL: one object per line with string fields
/// `text` and `label`. CSV: header `text,label`, RFC-4180 quoting. Ids are
/// assigned densely in record order. Label values must appear in label_space.
Dataset ingest_dataset(const std::string& path, DatasetFormat format,
                       const std::vector<std::string>& label_space);

}  // namespace lens
