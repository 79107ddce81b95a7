#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "redress/errors.hpp"

namespace redress {

struct LabeledExample {
  std::string text;
  int label = 0;
};

struct LabeledDataset {
  std::vector<LabeledExample> items;
  std::vector<std::string> label_space;

  std::size_t size() const { return items.size(); }
  int num_labels() const { return static_cast<int>(label_space.size()); }
};

enum class DatasetFormat { jsonl, tsv };

inline DatasetFormat dataset_format_from_string(const std::string& s) {
  if (s == "jsonl") return DatasetFormat::jsonl;
  if (s == "tsv") return DatasetFormat::tsv;
  throw ConfigError("unknown dataset format: " + s);
}

// Loads a dataset, preserving file order. When expected_labels is given,
// labels must fall in [0, expected_labels); otherwise the label space is
// inferred as 0..max(label) and named by index.
inline LabeledDataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                                   std::optional<int> expected_labels = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path.string());

  LabeledDataset ds;
  std::string line;
  std::size_t lineno = 0;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    LabeledExample ex;
    if (format == DatasetFormat::jsonl) {
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
      }
      if (!obj.is_object() || !obj.contains("text") || !obj.contains("label"))
        throw ParseError("expected object with \"text\" and \"label\"", lineno);
      if (!obj["text"].is_string() || !obj["label"].is_number_integer())
        throw ParseError("\"text\" must be a string and \"label\" an integer", lineno);
      ex.text = obj["text"].get<std::string>();
      ex.label = obj["label"].get<int>();
    } else {
      auto tab = line.find('\t');
      if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
        throw ParseError("expected exactly one TAB separator", lineno);
      ex.text = line.substr(0, tab);
      std::string lab = line.substr(tab + 1);
      try {
        std::size_t used = 0;
        ex.label = std::stoi(lab, &used);
        if (used != lab.size()) throw std::invalid_argument(lab);
      } catch (const std::exception&) {
        throw ParseError("label is not an integer: " + lab, lineno);
      }
    }
    if (ex.label < 0) throw LabelError("negative label at line " + std::to_string(lineno));
    if (expected_labels && ex.label >= *expected_labels)
      throw LabelError("label " + std::to_string(ex.label) + " outside declared range [0, " +
                       std::to_string(*expected_labels) + ") at line " + std::to_string(lineno));
    max_label = std::max(max_label, ex.label);
    ds.items.push_back(std::move(ex));
  }
  if (ds.items.empty()) throw EmptyInputError("dataset is empty: " + path.string());

  int k = expected_labels ? *expected_labels : max_label + 1;
  ds.label_space.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) ds.label_space.push_back(std::to_string(i));
  return ds;
}

// Writes items in file order. JSONL emits {"text":...,"label":...} so a file
// produced by this function reloads byte-identically.
inline void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path,
                         DatasetFormat format) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path.string());
  for (const auto& ex : ds.items) {
    if (format == DatasetFormat::jsonl) {
      nlohmann::ordered_json obj;
      obj["text"] = ex.text;
      obj["label"] = ex.label;
      out << obj.dump() << '\n';
    } else {
      out << ex.text << '\t' << ex.label << '\n';
    }
  }
}

}  // namespace redress
