#include "fcot/trace.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>

#include "fcot/context.hpp"
#include "fcot/errors.hpp"
#include "fcot/util.hpp"

namespace fcot {

namespace {

using json = nlohmann::ordered_json;

// Last complete <answer>...</answer> region, think spans removed.
std::optional<std::string> answer_region(std::string_view reply) {
  std::string s = strip_think_blocks(reply);
  size_t close = s.rfind("</answer>");
  if (close == std::string::npos) return std::nullopt;
  size_t open = s.rfind("<answer>", close);
  if (open == std::string::npos) return std::nullopt;
  return s.substr(open + 8, close - (open + 8));
}

// JSON array scan that respects strings and escapes.
std::optional<std::string> first_json_array(std::string_view s) {
  size_t start = s.find('[');
  if (start == std::string_view::npos) return std::nullopt;
  bool in_string = false;
  bool escaped = false;
  int depth = 0;
  for (size_t i = start; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']') {
      if (--depth == 0) return std::string(s.substr(start, i - start + 1));
    }
  }
  return std::nullopt;
}

// Accepts 9, "9", 9.0, "9.0"; rejects everything else.
std::optional<int> score_from_value(const json& value) {
  if (value.is_number_integer()) return value.get<int>();
  if (value.is_number_float()) {
    double d = value.get<double>();
    if (d == std::floor(d)) return static_cast<int>(d);
    return std::nullopt;
  }
  if (value.is_string()) {
    const std::string& s = value.get<std::string>();
    size_t pos = 0;
    if (!s.empty() && (s[0] == '-' || s[0] == '+')) pos = 1;
    size_t digit_count = 0;
    long long integral = 0;
    for (; pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])); ++pos) {
      integral = integral * 10 + (s[pos] - '0');
      if (++digit_count > 6) return std::nullopt;
    }
    if (digit_count == 0) return std::nullopt;
    if (pos < s.size()) {
      // allow a ".00" style tail and nothing else
      if (s[pos] != '.' || pos + 1 >= s.size()) return std::nullopt;
      for (++pos; pos < s.size(); ++pos) {
        if (s[pos] != '0') return std::nullopt;
      }
    }
    return static_cast<int>(s[0] == '-' ? -integral : integral);
  }
  return std::nullopt;
}

double mean_of(const std::vector<int>& values) {
  long long sum = 0;
  for (int v : values) sum += v;
  return static_cast<double>(sum) / static_cast<double>(values.size());
}

double population_std(const std::vector<int>& values, double mean) {
  double acc = 0;
  for (int v : values) {
    double d = static_cast<double>(v) - mean;
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(values.size()));
}

LabelStats label_stats(const std::vector<AnnotatedSolution>& solutions) {
  LabelStats stats;
  std::array<long long, 3> tokens{};
  std::array<long long, 3> sentences{};
  for (const auto& solution : solutions) {
    for (const auto& annotation : solution.sentences) {
      auto k = static_cast<size_t>(annotation.label);
      tokens[k] += estimate_tokens(annotation.sentence);
      sentences[k] += 1;
    }
  }
  long long total_tokens = tokens[0] + tokens[1] + tokens[2];
  for (size_t k = 0; k < 3; ++k) {
    stats.token_share[k] =
        total_tokens > 0 ? static_cast<double>(tokens[k]) / static_cast<double>(total_tokens) : 0.0;
    stats.mean_sentences[k] = solutions.empty()
                                  ? 0.0
                                  : static_cast<double>(sentences[k]) /
                                        static_cast<double>(solutions.size());
  }
  return stats;
}

std::map<std::string, int> scores_by_id(const std::vector<OverthinkingJudgment>& judgments,
                                        const char* which) {
  std::map<std::string, int> by_id;
  for (const auto& j : judgments) {
    if (!by_id.emplace(j.problem_id, j.score).second) {
      throw IdMismatch(std::string("duplicate problem id in run ") + which + ": " + j.problem_id);
    }
  }
  return by_id;
}

}  // namespace

const char* to_string(SentenceLabel label) {
  switch (label) {
    case SentenceLabel::Extraction: return "Extraction";
    case SentenceLabel::Reasoning: return "Reasoning";
    case SentenceLabel::Filler: return "Filler";
  }
  return "?";
}

std::optional<SentenceLabel> sentence_label_from_string(std::string_view s) {
  if (s == "Extraction") return SentenceLabel::Extraction;
  if (s == "Reasoning") return SentenceLabel::Reasoning;
  if (s == "Filler") return SentenceLabel::Filler;
  return std::nullopt;
}

int parse_overthinking_reply(std::string_view reply, std::string* rationale) {
  auto region = answer_region(reply);
  if (!region) throw JudgeFormatError("judge reply lacks <answer>...</answer> tags");
  json j = json::parse(trim(*region), nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("overthinking_score")) {
    throw JudgeFormatError("judge answer region is not a JSON object with overthinking_score");
  }
  auto score = score_from_value(j["overthinking_score"]);
  if (!score) throw JudgeFormatError("overthinking_score has an unrecognized form");
  if (*score < 0 || *score > 10) {
    throw ScoreOutOfRange("overthinking_score " + std::to_string(*score) + " outside 0..10");
  }
  if (rationale) {
    *rationale = j.contains("reasoning") && j["reasoning"].is_string()
                     ? j["reasoning"].get<std::string>()
                     : "";
  }
  return *score;
}

std::vector<SentenceAnnotation> parse_annotation_reply(std::string_view reply) {
  std::string s = strip_think_blocks(reply);
  auto array_text = first_json_array(s);
  if (!array_text) throw AnnotationFormatError("annotator reply carries no JSON list");
  json j = json::parse(*array_text, nullptr, false);
  if (j.is_discarded() || !j.is_array()) {
    throw AnnotationFormatError("annotator reply list does not parse");
  }
  std::vector<SentenceAnnotation> annotations;
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("sentence") || !item.contains("label")) {
      throw AnnotationFormatError("annotation item lacks sentence/label");
    }
    std::string sentence = item["sentence"].get<std::string>();
    auto label = sentence_label_from_string(item["label"].get<std::string>());
    if (!label) {
      throw AnnotationFormatError("unknown sentence label '" +
                                  item["label"].get<std::string>() + "'");
    }
    if (sentence.empty()) throw AnnotationFormatError("empty sentence in annotation");
    annotations.push_back({std::move(sentence), *label});
  }
  return annotations;
}

namespace {

constexpr const char* kFormatReminder =
    "\n\nReminder: respond exactly in the requested format.";

std::string ask(Gateway& judge, const std::string& model, const std::string& prompt) {
  ChatRequest request;
  request.model = model;
  request.prompt = prompt;
  request.sampling.n_samples = 1;
  request.think = ThinkMode::Think;
  return judge.complete(request).at(0).text;
}

}  // namespace

OverthinkingJudgment judge_overthinking(const std::string& question, const std::string& solution,
                                        const PromptCatalog& catalog, Gateway& judge,
                                        const std::string& judge_model) {
  std::string prompt = catalog.render(PromptId::OverthinkingJudge,
                                      {{"ORIGINAL QUESTION", question},
                                       {"MODEL GENERATION", solution}});
  OverthinkingJudgment judgment;
  judgment.judge_model = judge_model;
  try {
    judgment.score = parse_overthinking_reply(ask(judge, judge_model, prompt), &judgment.rationale);
    return judgment;
  } catch (const JudgeFormatError&) {
    // one re-ask with a terse reminder appended
  }
  judgment.score =
      parse_overthinking_reply(ask(judge, judge_model, prompt + kFormatReminder),
                               &judgment.rationale);
  return judgment;
}

std::vector<SentenceAnnotation> annotate_sentences(const std::string& question,
                                                   const std::string& solution,
                                                   const PromptCatalog& catalog, Gateway& judge,
                                                   const std::string& judge_model) {
  std::string prompt = catalog.render(PromptId::SentenceAnnotator,
                                      {{"ORIGINAL QUESTION", question},
                                       {"MODEL GENERATION", solution}});
  try {
    return parse_annotation_reply(ask(judge, judge_model, prompt));
  } catch (const AnnotationFormatError&) {
  }
  return parse_annotation_reply(ask(judge, judge_model, prompt + kFormatReminder));
}

DynamicsSummary aggregate_dynamics(const std::vector<OverthinkingJudgment>& a,
                                   const std::vector<OverthinkingJudgment>& b,
                                   const std::vector<AnnotatedSolution>& annotations_a,
                                   const std::vector<AnnotatedSolution>& annotations_b) {
  if (a.empty()) throw IdMismatch("judgment runs are empty");
  if (a.size() != b.size()) {
    throw IdMismatch("runs differ in size: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  auto by_id_a = scores_by_id(a, "A");
  auto by_id_b = scores_by_id(b, "B");

  std::vector<int> scores_a, scores_b;
  size_t decreased = 0, unchanged = 0;
  for (const auto& [id, score_a] : by_id_a) {
    auto it = by_id_b.find(id);
    if (it == by_id_b.end()) throw IdMismatch("problem id missing from run B: " + id);
    scores_a.push_back(score_a);
    scores_b.push_back(it->second);
    if (it->second < score_a) ++decreased;
    if (it->second == score_a) ++unchanged;
  }

  DynamicsSummary summary;
  summary.n_problems = scores_a.size();
  summary.mean_score_a = mean_of(scores_a);
  summary.std_score_a = population_std(scores_a, summary.mean_score_a);
  summary.mean_score_b = mean_of(scores_b);
  summary.std_score_b = population_std(scores_b, summary.mean_score_b);
  summary.frac_decreased = static_cast<double>(decreased) / static_cast<double>(scores_a.size());
  summary.frac_unchanged = static_cast<double>(unchanged) / static_cast<double>(scores_a.size());

  if (!annotations_a.empty() || !annotations_b.empty()) {
    auto ids_of = [](const std::vector<AnnotatedSolution>& solutions) {
      std::vector<std::string> ids;
      for (const auto& s : solutions) ids.push_back(s.problem_id);
      std::sort(ids.begin(), ids.end());
      return ids;
    };
    if (ids_of(annotations_a) != ids_of(annotations_b)) {
      throw IdMismatch("annotation runs cover different problem ids");
    }
    summary.labels_a = label_stats(annotations_a);
    summary.labels_b = label_stats(annotations_b);
  }
  return summary;
}

std::string dynamics_summary_to_json(const DynamicsSummary& summary) {
  json j;
  j["n_problems"] = summary.n_problems;
  j["mean_score_a"] = summary.mean_score_a;
  j["std_score_a"] = summary.std_score_a;
  j["mean_score_b"] = summary.mean_score_b;
  j["std_score_b"] = summary.std_score_b;
  j["std_definition"] = "population";
  j["frac_decreased"] = summary.frac_decreased;
  j["frac_unchanged"] = summary.frac_unchanged;
  auto labels_json = [](const LabelStats& stats) {
    json l;
    const char* names[] = {"extraction", "reasoning", "filler"};
    for (size_t k = 0; k < 3; ++k) {
      l["token_share"][names[k]] = stats.token_share[k];
      l["mean_sentences"][names[k]] = stats.mean_sentences[k];
    }
    l["token_basis"] = "estimated (ceil(chars/4))";
    return l;
  };
  if (summary.labels_a) j["labels_a"] = labels_json(*summary.labels_a);
  if (summary.labels_b) j["labels_b"] = labels_json(*summary.labels_b);
  return j.dump(2);
}

// ---------------- line formats ----------------

std::string judgment_to_json(const OverthinkingJudgment& judgment) {
  json j;
  j["problem_id"] = judgment.problem_id;
  j["run_id"] = judgment.run_id;
  j["score"] = judgment.score;
  j["rationale"] = judgment.rationale;
  j["judge_model"] = judgment.judge_model;
  return j.dump();
}

OverthinkingJudgment judgment_from_json(const std::string& line, int line_no) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw SchemaViolation("judgment file line " + std::to_string(line_no) +
                          ": not a JSON object");
  }
  OverthinkingJudgment judgment;
  try {
    judgment.problem_id = j.at("problem_id").get<std::string>();
    judgment.run_id = j.value("run_id", "");
    judgment.score = j.at("score").get<int>();
    judgment.rationale = j.value("rationale", "");
    judgment.judge_model = j.value("judge_model", "");
  } catch (const json::exception& e) {
    throw SchemaViolation("judgment file line " + std::to_string(line_no) + ": " + e.what());
  }
  return judgment;
}

std::vector<OverthinkingJudgment> read_judgment_file(const std::filesystem::path& file) {
  std::vector<OverthinkingJudgment> judgments;
  auto lines = split_lines(read_file(file));
  for (size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    judgments.push_back(judgment_from_json(lines[i], static_cast<int>(i) + 1));
  }
  return judgments;
}

void write_judgment_file(const std::filesystem::path& file,
                         const std::vector<OverthinkingJudgment>& judgments) {
  std::string out;
  for (const auto& judgment : judgments) {
    out += judgment_to_json(judgment);
    out += '\n';
  }
  write_file_atomic(file, out);
}

std::string annotated_solution_to_json(const AnnotatedSolution& solution) {
  json j;
  j["problem_id"] = solution.problem_id;
  j["run_id"] = solution.run_id;
  json sentences = json::array();
  for (const auto& annotation : solution.sentences) {
    sentences.push_back({{"sentence", annotation.sentence}, {"label", to_string(annotation.label)}});
  }
  j["sentences"] = sentences;
  return j.dump();
}

AnnotatedSolution annotated_solution_from_json(const std::string& line, int line_no) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw SchemaViolation("annotation file line " + std::to_string(line_no) +
                          ": not a JSON object");
  }
  AnnotatedSolution solution;
  try {
    solution.problem_id = j.at("problem_id").get<std::string>();
    solution.run_id = j.value("run_id", "");
    for (const auto& item : j.at("sentences")) {
      auto label = sentence_label_from_string(item.at("label").get<std::string>());
      if (!label) {
        throw SchemaViolation("annotation file line " + std::to_string(line_no) +
                              ": unknown label");
      }
      solution.sentences.push_back({item.at("sentence").get<std::string>(), *label});
    }
  } catch (const json::exception& e) {
    throw SchemaViolation("annotation file line " + std::to_string(line_no) + ": " + e.what());
  }
  return solution;
}

std::vector<AnnotatedSolution> read_annotation_file(const std::filesystem::path& file) {
  std::vector<AnnotatedSolution> solutions;
  auto lines = split_lines(read_file(file));
  for (size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    solutions.push_back(annotated_solution_from_json(lines[i], static_cast<int>(i) + 1));
  }
  return solutions;
}

void write_annotation_file(const std::filesystem::path& file,
                           const std::vector<AnnotatedSolution>& solutions) {
  std::string out;
  for (const auto& solution : solutions) {
    out += annotated_solution_to_json(solution);
    out += '\n';
  }
  write_file_atomic(file, out);
}

}  // namespace fcot
