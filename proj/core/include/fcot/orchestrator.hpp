#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fcot/dataset.hpp"
#include "fcot/evaluator.hpp"
#include "fcot/gateway.hpp"
#include "fcot/mode.hpp"
#include "fcot/prompts.hpp"

namespace fcot {

// Where completions come from: an OpenAI-style HTTP endpoint or a scripted
// mock (kind "http" with locator = base url, or kind "mock" with locator =
// script path).
struct BackendSpec {
  std::string kind = "http";
  std::string locator;
  std::string model;

  friend bool operator==(const BackendSpec&, const BackendSpec&) = default;
};

std::shared_ptr<Backend> build_backend(const BackendSpec& spec, const std::string& api_key = "");

// One manifest = one experiment cell (mode x model x dataset).
struct RunManifest {
  std::string run_id;
  PipelineMode mode;
  DatasetId dataset;
  std::string dataset_path;
  BackendSpec reasoner;
  std::optional<BackendSpec> extractor;  // FcotSelf defaults to the reasoner
  SamplingParams sampling;
  std::string context_file;  // required for pre-computed context modes
  std::map<std::string, std::string> prompt_digests;  // prompt name -> sha256
  std::string created_at;
  std::uint64_t seed = 0;
  int max_problems = 0;  // 0 = whole dataset

  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
};

// Fails on contradictory settings (missing context file for a pre-computed
// mode, missing extractor model for hybrid, empty ids).
void validate_manifest(const RunManifest& manifest);

// Pins the digests of every prompt the mode can touch; resume refuses to
// continue when the catalog has drifted (CorruptRunState).
void pin_prompt_digests(RunManifest& manifest, const PromptCatalog& catalog);

struct RunSummary {
  std::string run_id;
  std::string mode;
  std::string dataset;
  std::size_t n_problems = 0;
  int n_samples = 0;
  double pass_at_5 = 0;          // fraction in [0,1]
  double mean_tokens = 0;        // mode-aware token_total averaged per sample
  std::optional<double> valid_context_rate;
  double estimated_usage_fraction = 0;
  std::size_t errors = 0;

  std::string to_json() const;
  static RunSummary from_json(const std::string& text);
};

// One (problem, sample) line of records.jsonl. Field names follow the
// outcome schema, plus the full prompt and raw output for audit/replay.
struct ReasoningRecord {
  std::string problem_id;
  int sample_index = 0;
  bool correct = false;
  long long extraction_tokens = 0;
  long long reasoning_tokens = 0;
  bool usage_estimated = false;
  std::string boxed_raw;
  std::string prompt;
  std::string output_text;
  long long prompt_tokens = 0;
  bool question_in_prompt = false;
  std::string error;  // non-empty when the gateway failed for this sample
};

std::string reasoning_record_to_json(const ReasoningRecord& record);
// Returns nullopt for a torn/corrupt line (e.g. a crash mid-append); resume
// treats such a line as never written.
std::optional<ReasoningRecord> reasoning_record_from_json(const std::string& line);
std::vector<ReasoningRecord> read_records_file(const std::filesystem::path& file);

struct RunDeps {
  const PromptCatalog* catalog = nullptr;
  Gateway* reasoner = nullptr;
  Gateway* extractor = nullptr;  // defaults to reasoner when null
  int workers = 4;
};

// The reasoning prompt for one problem under a mode, with the context
// inserted per the mode's format. Exposed for the isolation check and tests.
struct BuiltPrompt {
  std::string text;
  bool question_in_prompt = false;
};
BuiltPrompt build_reasoning_prompt(const PipelineMode& mode, const PromptCatalog& catalog,
                                   const ProblemRecord& problem, const ContextRecord* context);

// Runs the extraction stage for the given problems (think suppressed by
// default), validates each region strictly, and appends one record per
// problem to context_path; already-present problem ids are kept as-is.
// Returns all records in problem order.
std::vector<ContextRecord> run_extraction_stage(const std::vector<ProblemRecord>& problems,
                                                Gateway& extractor, const std::string& model,
                                                PromptId prompt_id, const PromptCatalog& catalog,
                                                const std::filesystem::path& context_path,
                                                int workers = 4,
                                                ThinkMode think = ThinkMode::NoThink);

// Reasoning stage over problems (context looked up by problem id when the
// mode carries one): renders the mode's prompt, requests n_samples
// completions, scores each sample, and appends one record per missing
// (problem, sample) pair to records_path. Per-problem gateway failures are
// recorded, never fatal. Returns all persisted records.
std::vector<ReasoningRecord> run_reasoning_stage(
    const std::vector<ProblemRecord>& problems,
    const std::map<std::string, const ContextRecord*>& contexts_by_id, Gateway& reasoner,
    const RunManifest& manifest, const PromptCatalog& catalog,
    const std::filesystem::path& records_path, int workers = 4);

// Executes the whole cell into run_dir: extraction when the mode needs it,
// reasoning with n_samples per problem, scoring, aggregation. Append-only
// persistence; rerunning a finished run touches no backend and reproduces
// the summary byte for byte.
RunSummary execute_run(const std::filesystem::path& run_dir, const RunManifest& manifest,
                       RunDeps& deps);

// execute_run under runs_root/<run_id>/, writing the manifest on first use.
RunSummary run_benchmark(const std::filesystem::path& runs_root, const RunManifest& manifest,
                         RunDeps& deps);

// Continues a partially executed run directory from its persisted manifest.
RunSummary resume(const std::filesystem::path& run_dir, RunDeps& deps);

// Pure re-aggregation of persisted records (the `score` command).
RunSummary aggregate_run(const RunManifest& manifest, const std::vector<ReasoningRecord>& records,
                         const std::vector<ContextRecord>* contexts);

RunSummary read_summary(const std::filesystem::path& file);

}  // namespace fcot
