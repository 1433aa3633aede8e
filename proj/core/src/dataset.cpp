#include "fcot/dataset.hpp"

#include <nlohmann/json.hpp>

#include <set>
#include <unordered_map>

#include "fcot/errors.hpp"
#include "fcot/evaluator.hpp"
#include "fcot/util.hpp"

namespace fcot {

namespace {
using json = nlohmann::ordered_json;
}

std::string DatasetId::to_string() const {
  switch (kind) {
    case DatasetKind::Svamp: return "svamp";
    case DatasetKind::GsmHard: return "gsm-hard";
    case DatasetKind::Math500: return "math500";
    case DatasetKind::Aime2024: return "aime2024";
    case DatasetKind::Aime2025: return "aime2025";
    case DatasetKind::Custom: return name.empty() ? "custom" : name;
  }
  return "?";
}

DatasetId DatasetId::parse(std::string_view s) {
  std::string normalized = to_lower(s);
  for (char& c : normalized) {
    if (c == '_') c = '-';
  }
  if (normalized == "svamp") return {DatasetKind::Svamp, ""};
  if (normalized == "gsm-hard" || normalized == "gsmhard") return {DatasetKind::GsmHard, ""};
  if (normalized == "math500" || normalized == "math-500") return {DatasetKind::Math500, ""};
  if (normalized == "aime2024" || normalized == "aime-2024") return {DatasetKind::Aime2024, ""};
  if (normalized == "aime2025" || normalized == "aime-2025") return {DatasetKind::Aime2025, ""};
  return {DatasetKind::Custom, std::string(s)};
}

DatasetId DatasetId::from_path(const std::filesystem::path& p) {
  return parse(p.stem().string());
}

std::vector<ProblemRecord> load_dataset(const std::filesystem::path& file, const DatasetId& id) {
  std::vector<ProblemRecord> records;
  std::set<std::string> seen;
  auto lines = split_lines(read_file(file));
  for (size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    int line_no = static_cast<int>(i) + 1;
    json j = json::parse(lines[i], nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw SchemaViolation("dataset line " + std::to_string(line_no) + ": not a JSON object");
    }
    ProblemRecord record;
    record.dataset = id;
    auto field = [&](const char* name) -> std::string {
      if (!j.contains(name) || !j[name].is_string() || j[name].get<std::string>().empty()) {
        throw SchemaViolation("dataset line " + std::to_string(line_no) +
                              ": missing or empty field '" + name + "'");
      }
      return j[name].get<std::string>();
    };
    record.id = field("id");
    record.question = field("question");
    record.gold_answer = normalize_answer(field("answer")).canonical;
    if (record.gold_answer.empty()) {
      throw SchemaViolation("dataset line " + std::to_string(line_no) +
                            ": answer is empty after normalization");
    }
    if (j.contains("metadata") && j["metadata"].is_object()) {
      for (const auto& [key, value] : j["metadata"].items()) {
        record.metadata[key] = value.is_string() ? value.get<std::string>() : value.dump();
      }
    }
    if (!seen.insert(record.id).second) {
      throw DuplicateId("dataset line " + std::to_string(line_no) + ": duplicate id '" +
                        record.id + "'");
    }
    records.push_back(std::move(record));
  }
  return records;
}

void write_dataset(const std::filesystem::path& file, const std::vector<ProblemRecord>& records) {
  std::string out;
  for (const auto& record : records) {
    json j;
    j["id"] = record.id;
    j["question"] = record.question;
    j["answer"] = record.gold_answer;
    if (!record.metadata.empty()) {
      json meta = json::object();
      for (const auto& [key, value] : record.metadata) meta[key] = value;
      j["metadata"] = meta;
    }
    out += j.dump();
    out += '\n';
  }
  write_file_atomic(file, out);
}

ContextJoin attach_contexts(const std::vector<ProblemRecord>& problems,
                            const std::vector<ContextRecord>& contexts, bool strict) {
  std::unordered_map<std::string, const ContextRecord*> by_id;
  for (const auto& context : contexts) by_id.emplace(context.problem_id, &context);

  ContextJoin join;
  std::set<std::string> matched;
  for (const auto& problem : problems) {
    auto it = by_id.find(problem.id);
    if (it == by_id.end()) {
      if (strict) {
        throw MissingContext("no context for problem id '" + problem.id + "'");
      }
      join.problems_without_context.push_back(problem.id);
      continue;
    }
    matched.insert(problem.id);
    join.pairs.emplace_back(problem, *it->second);
  }
  for (const auto& context : contexts) {
    if (!matched.count(context.problem_id)) {
      join.contexts_without_problem.push_back(context.problem_id);
    }
  }
  return join;
}

}  // namespace fcot
