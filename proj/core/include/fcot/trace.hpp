#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fcot/gateway.hpp"
#include "fcot/prompts.hpp"

namespace fcot {

struct OverthinkingJudgment {
  std::string problem_id;
  std::string run_id;
  int score = 0;  // 0..10
  std::string rationale;
  std::string judge_model;
};

enum class SentenceLabel { Extraction, Reasoning, Filler };

const char* to_string(SentenceLabel label);
std::optional<SentenceLabel> sentence_label_from_string(std::string_view s);

struct SentenceAnnotation {
  std::string sentence;
  SentenceLabel label{};
};

struct AnnotatedSolution {
  std::string problem_id;
  std::string run_id;
  std::vector<SentenceAnnotation> sentences;
};

// Reply parsing, split out so scripted judges exercise it directly.
//
// The judged reply must carry an <answer>...</answer> region holding a JSON
// object with overthinking_score and reasoning. Accepted score forms:
// integer, quoted integer, and a decimal with a zero fraction ("9.0");
// anything else is JudgeFormatError, values outside 0..10 ScoreOutOfRange.
int parse_overthinking_reply(std::string_view reply, std::string* rationale = nullptr);

// Parses the annotator's JSON list of {"sentence", "label"} objects; a label
// outside Extraction/Reasoning/Filler is an AnnotationFormatError.
std::vector<SentenceAnnotation> parse_annotation_reply(std::string_view reply);

// One judge call through the gateway (single sample), with one re-ask
// carrying a terse format reminder before giving up.
OverthinkingJudgment judge_overthinking(const std::string& question, const std::string& solution,
                                        const PromptCatalog& catalog, Gateway& judge,
                                        const std::string& judge_model);

std::vector<SentenceAnnotation> annotate_sentences(const std::string& question,
                                                   const std::string& solution,
                                                   const PromptCatalog& catalog, Gateway& judge,
                                                   const std::string& judge_model);

struct LabelStats {
  // Indexed by SentenceLabel order: Extraction, Reasoning, Filler.
  std::array<double, 3> token_share{};     // sums to 1 when any tokens exist
  std::array<double, 3> mean_sentences{};  // per problem
};

struct DynamicsSummary {
  std::size_t n_problems = 0;
  double mean_score_a = 0, std_score_a = 0;  // std is population (divide by N)
  double mean_score_b = 0, std_score_b = 0;
  double frac_decreased = 0;  // score_b < score_a
  double frac_unchanged = 0;  // score_b == score_a
  std::optional<LabelStats> labels_a, labels_b;
};

// Pairs run A and run B by problem id (IdMismatch when the id sets differ)
// and aggregates scores plus, when annotations are given, per-label token
// shares (via estimate_tokens) and mean sentence counts.
DynamicsSummary aggregate_dynamics(const std::vector<OverthinkingJudgment>& a,
                                   const std::vector<OverthinkingJudgment>& b,
                                   const std::vector<AnnotatedSolution>& annotations_a = {},
                                   const std::vector<AnnotatedSolution>& annotations_b = {});

std::string dynamics_summary_to_json(const DynamicsSummary& summary);

// Line formats for judgment and annotation files.
std::string judgment_to_json(const OverthinkingJudgment& judgment);
OverthinkingJudgment judgment_from_json(const std::string& line, int line_no);
std::vector<OverthinkingJudgment> read_judgment_file(const std::filesystem::path& file);
void write_judgment_file(const std::filesystem::path& file,
                         const std::vector<OverthinkingJudgment>& judgments);

std::string annotated_solution_to_json(const AnnotatedSolution& solution);
AnnotatedSolution annotated_solution_from_json(const std::string& line, int line_no);
std::vector<AnnotatedSolution> read_annotation_file(const std::filesystem::path& file);
void write_annotation_file(const std::filesystem::path& file,
                           const std::vector<AnnotatedSolution>& solutions);

}  // namespace fcot
