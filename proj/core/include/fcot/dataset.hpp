#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fcot/context.hpp"

namespace fcot {

enum class DatasetKind { Svamp, GsmHard, Math500, Aime2024, Aime2025, Custom };

struct DatasetId {
  DatasetKind kind = DatasetKind::Custom;
  std::string name;  // only used for Custom

  std::string to_string() const;
  static DatasetId parse(std::string_view s);
  // Guesses the id from a file name stem ("math500.jsonl" -> Math500);
  // anything unrecognized becomes Custom(stem).
  static DatasetId from_path(const std::filesystem::path& p);

  // Short grade-school style word problems, as opposed to competition math.
  bool gsm_style() const { return kind == DatasetKind::Svamp || kind == DatasetKind::GsmHard; }

  friend bool operator==(const DatasetId&, const DatasetId&) = default;
};

struct ProblemRecord {
  std::string id;  // unique within the dataset
  DatasetId dataset;
  std::string question;
  std::string gold_answer;  // canonical form (normalize_answer applied at load)
  std::map<std::string, std::string> metadata;
};

// Loads a line-delimited dataset file with fields {id, question, answer,
// metadata?}. Gold answers are normalized once here. Throws SchemaViolation
// (with line number and field) and DuplicateId.
std::vector<ProblemRecord> load_dataset(const std::filesystem::path& file, const DatasetId& id);

// Inverse of load_dataset for the canonical schema; reloading the written
// file yields field-identical records.
void write_dataset(const std::filesystem::path& file, const std::vector<ProblemRecord>& records);

struct ContextJoin {
  std::vector<std::pair<ProblemRecord, ContextRecord>> pairs;
  std::vector<std::string> problems_without_context;
  std::vector<std::string> contexts_without_problem;
};

// Inner join on problem id. With strict=true a problem without a context
// throws MissingContext; otherwise gaps are reported in the result.
ContextJoin attach_contexts(const std::vector<ProblemRecord>& problems,
                            const std::vector<ContextRecord>& contexts, bool strict);

}  // namespace fcot
