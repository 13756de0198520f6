#include "lens/dataset_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace lens {

namespace {

int label_index(const std::string& value,
                const std::vector<std::string>& label_space, size_t record) {
  for (size_t i = 0; i < label_space.size(); ++i)
    if (label_space[i] == value) return static_cast<int>(i);
  throw IngestError("record " + std::to_string(record) + ": unknown label '" +
                    value + "'");
}

std::vector<Example> parse_jsonl(std::istream& in,
                                 const std::vector<std::string>& label_space) {
  std::vector<Example> out;
  std::string line;
  size_t record = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IngestError("record " + std::to_string(record) +
                        ": invalid JSON: " + e.what());
    }
    for (const char* field : {"text", "label"}) {
      if (!doc.contains(field) || !doc[field].is_string())
        throw IngestError("record " + std::to_string(record) +
                          ": missing string field '" + field + "'");
    }
    Example e;
    e.id = static_cast<int>(record);
    e.text = doc["text"].get<std::string>();
    e.label = label_index(doc["label"].get<std::string>(), label_space, record);
    out.push_back(std::move(e));
    ++record;
  }
  return out;
}

// RFC-4180 style row reader; handles quoted fields with embedded commas,
// quotes and newlines.
bool read_csv_row(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  int c;
  while ((c = in.get()) != EOF) {
    any = true;
    char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      in_quotes = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch == '\n') {
      break;
    } else if (ch == '\r') {
      // swallow; \r\n handled by the \n branch
    } else {
      field.push_back(ch);
    }
  }
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

std::vector<Example> parse_csv(std::istream& in,
                               const std::vector<std::string>& label_space) {
  std::vector<std::string> row;
  if (!read_csv_row(in, row) || row.size() != 2 || row[0] != "text" ||
      row[1] != "label")
    throw IngestError("csv: expected header 'text,label'");
  std::vector<Example> out;
  size_t record = 0;
  while (read_csv_row(in, row)) {
    if (row.size() == 1 && row[0].empty()) continue;  // trailing blank line
    if (row.size() != 2)
      throw IngestError("record " + std::to_string(record) + ": expected 2 fields, got " +
                        std::to_string(row.size()));
    Example e;
    e.id = static_cast<int>(record);
    e.text = row[0];
    e.label = label_index(row[1], label_space, record);
    out.push_back(std::move(e));
    ++record;
  }
  return out;
}

}  // namespace

DatasetFormat dataset_format_from_string(const std::string& s) {
  if (s == "jsonl") return DatasetFormat::kJsonl;
  if (s == "csv") return DatasetFormat::kCsv;
  throw ConfigError("unknown dataset format '" + s + "' (expected jsonl or csv)");
}

Dataset ingest_dataset(const std::string& path, DatasetFormat format,
                       const std::vector<std::string>& label_space) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open dataset file " + path);
  std::vector<Example> examples = format == DatasetFormat::kJsonl
                                      ? parse_jsonl(in, label_space)
                                      : parse_csv(in, label_space);
  if (examples.empty()) throw IngestError(path + ": empty dataset");
  return Dataset(std::move(examples), label_space, path);
}

}  // namespace lens
