// fcot: two-stage structured-context reasoning over chat-completion
// backends, plus the measurement tooling around it (scoring, token
// accounting, context validity, overthinking judging, reports).

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>

#include "fcot/context.hpp"
#include "fcot/dataset.hpp"
#include "fcot/errors.hpp"
#include "fcot/evaluator.hpp"
#include "fcot/http_backend.hpp"
#include "fcot/mock_backend.hpp"
#include "fcot/orchestrator.hpp"
#include "fcot/prompts.hpp"
#include "fcot/report.hpp"
#include "fcot/trace.hpp"
#include "fcot/util.hpp"

namespace fs = std::filesystem;
using namespace fcot;

namespace {

struct BackendFlags {
  std::string base_url;
  std::string mock_script;
  std::string model;
  std::string api_key_env = "FCOT_API_KEY";
  std::string dash = "--";  // flag prefix, e.g. "--judge-"
};

void add_backend_flags(CLI::App* cmd, BackendFlags& flags, const std::string& prefix = "") {
  flags.dash = prefix.empty() ? "--" : "--" + prefix + "-";
  cmd->add_option(flags.dash + "base-url", flags.base_url,
                  "Chat-completions root, e.g. http://localhost:8000/v1");
  cmd->add_option(flags.dash + "mock-script", flags.mock_script,
                  "Scripted mock backend (line-delimited JSON rules) instead of HTTP");
  cmd->add_option(flags.dash + "model", flags.model, "Model name sent to the backend");
  cmd->add_option(flags.dash + "api-key-env", flags.api_key_env,
                  "Environment variable holding the bearer token");
}

BackendSpec to_backend_spec(const BackendFlags& flags, const char* what) {
  if (!flags.mock_script.empty() && !flags.base_url.empty()) {
    throw Error(std::string(what) + ": give either " + flags.dash + "base-url or " + flags.dash +
                "mock-script, not both");
  }
  if (flags.mock_script.empty() && flags.base_url.empty()) {
    throw Error(std::string(what) + ": a backend is required (" + flags.dash + "base-url or " +
                flags.dash + "mock-script)");
  }
  if (flags.model.empty()) {
    throw Error(std::string(what) + ": " + flags.dash + "model is required");
  }
  BackendSpec spec;
  spec.kind = flags.mock_script.empty() ? "http" : "mock";
  spec.locator = flags.mock_script.empty() ? flags.base_url : flags.mock_script;
  spec.model = flags.model;
  return spec;
}

struct GatewayFlags {
  int in_flight = 4;
  int retry_max = 5;
  std::string think_family = "qwen3";
  std::string cache_dir;
  bool no_cache = false;
};

void add_gateway_flags(CLI::App* cmd, GatewayFlags& flags) {
  cmd->add_option("--in-flight", flags.in_flight, "Max simultaneous backend calls")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--retry-max", flags.retry_max, "Attempts per request before giving up")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--think-family", flags.think_family,
                  "Model family for the no-think suppression marker");
  cmd->add_option("--cache-dir", flags.cache_dir, "Response cache directory");
  cmd->add_flag("--no-cache", flags.no_cache, "Disable the response cache");
}

std::string api_key_from(const std::string& env_name) {
  const char* value = std::getenv(env_name.c_str());
  return value ? value : "";
}

std::unique_ptr<Gateway> make_gateway(const BackendSpec& spec, const GatewayFlags& flags,
                                      const std::string& api_key_env,
                                      const fs::path& default_cache) {
  GatewayConfig config;
  config.in_flight_limit = flags.in_flight;
  config.retry_max = flags.retry_max;
  config.think_family = flags.think_family;
  std::optional<fs::path> cache;
  if (!flags.no_cache) {
    cache = flags.cache_dir.empty() ? default_cache : fs::path(flags.cache_dir);
  }
  return std::make_unique<Gateway>(build_backend(spec, api_key_from(api_key_env)), config, cache);
}

void flush_warnings(Gateway& gateway) {
  for (const auto& warning : gateway.drain_warnings()) {
    std::cerr << "warning: " << warning << "\n";
  }
}

PromptCatalog load_catalog(const std::string& prompts_dir) {
  return PromptCatalog::load(prompts_dir.empty() ? PromptCatalog::default_dir()
                                                 : fs::path(prompts_dir));
}

void print_summary(const RunSummary& summary) {
  std::cout << summary.to_json();
  std::cout << "pass@5 " << format_percent(summary.pass_at_5, 2) << ", mean tokens "
            << format_tokens(summary.mean_tokens, true);
  if (summary.valid_context_rate) {
    std::cout << ", valid context " << format_percent(*summary.valid_context_rate, 2);
  }
  if (summary.errors > 0) std::cout << ", errors " << summary.errors;
  std::cout << "\n";
}

// Deterministic default run id so an interrupted invocation resumes itself.
std::string derive_run_id(const RunManifest& manifest) {
  std::string key = manifest.mode.to_string() + "|" + manifest.dataset.to_string() + "|" +
                    manifest.dataset_path + "|" + manifest.reasoner.kind + "|" +
                    manifest.reasoner.locator + "|" + manifest.reasoner.model + "|" +
                    manifest.context_file + "|" + std::to_string(manifest.sampling.n_samples) +
                    "|" + std::to_string(manifest.seed) + "|" +
                    std::to_string(manifest.max_problems);
  return manifest.mode.to_string() + "-" + manifest.dataset.to_string() + "-" +
         sha256_hex(key).substr(0, 8);
}

std::vector<ContextRecord> contexts_for_score(const RunManifest& manifest,
                                              const fs::path& run_dir) {
  std::vector<ProblemRecord> problems = load_dataset(manifest.dataset_path, manifest.dataset);
  if (manifest.max_problems > 0 && problems.size() > static_cast<size_t>(manifest.max_problems)) {
    problems.resize(static_cast<size_t>(manifest.max_problems));
  }
  fs::path source;
  if (manifest.mode.requires_context_file()) {
    source = manifest.context_file;
  } else if (manifest.mode.runs_extraction()) {
    source = run_dir / "contexts.jsonl";
  } else {
    return {};
  }
  if (!fs::exists(source)) return {};
  ContextJoin join = attach_contexts(problems, read_context_file(source), /*strict=*/false);
  std::vector<ContextRecord> contexts;
  for (auto& [problem, context] : join.pairs) {
    (void)problem;
    contexts.push_back(context);
  }
  return contexts;
}

// Questions and picked-sample outputs of a finished run, for judging.
struct JudgeInputs {
  RunManifest manifest;
  std::vector<std::pair<ProblemRecord, ReasoningRecord>> pairs;
};

JudgeInputs collect_judge_inputs(const fs::path& run_dir, int sample_index, int max_problems) {
  JudgeInputs inputs;
  inputs.manifest = RunManifest::from_json(read_file(run_dir / "manifest.json"));
  auto problems = load_dataset(inputs.manifest.dataset_path, inputs.manifest.dataset);
  std::map<std::string, ProblemRecord> by_id;
  for (auto& problem : problems) by_id.emplace(problem.id, std::move(problem));
  for (const auto& record : read_records_file(run_dir / "records.jsonl")) {
    if (record.sample_index != sample_index || !record.error.empty()) continue;
    auto it = by_id.find(record.problem_id);
    if (it == by_id.end()) continue;
    inputs.pairs.emplace_back(it->second, record);
    if (max_problems > 0 && inputs.pairs.size() >= static_cast<size_t>(max_problems)) break;
  }
  if (inputs.pairs.empty()) {
    throw Error("run at " + run_dir.string() + " has no usable records for sample index " +
                std::to_string(sample_index));
  }
  return inputs;
}

// ---------------------------------------------------------------------------

int run_cli(int argc, char** argv) {
  CLI::App app{"Focused two-stage reasoning harness: structured-context extraction, "
               "context-only reasoning, and the measurement tooling around it"};
  app.require_subcommand(1);
  argv = app.ensure_utf8(argv);

  // ---- extract ----
  auto* extract = app.add_subcommand("extract", "Run the extraction stage only: questions in, "
                                                "validated context file out");
  struct {
    std::string dataset, dataset_id, out, prompt = "auto", prompts_dir;
    BackendFlags backend;
    GatewayFlags gateway;
    bool think = false;
    int workers = 4, max_problems = 0;
  } ex;
  extract->add_option("--dataset", ex.dataset, "Line-delimited dataset file")
      ->required()
      ->check(CLI::ExistingFile);
  extract->add_option("--dataset-id", ex.dataset_id, "svamp|gsm-hard|math500|aime2024|aime2025|<custom>");
  extract->add_option("--out", ex.out, "Context file to write")->required();
  extract->add_option("--prompt", ex.prompt,
                      "extract-no-icl|extract-icl-gsm|extract-icl-math|auto (by dataset)");
  extract->add_option("--prompts-dir", ex.prompts_dir, "Prompt catalog directory");
  extract->add_flag("--think", ex.think, "Let the extractor think (default: suppressed)");
  extract->add_option("--workers", ex.workers, "Parallel problems")->check(CLI::PositiveNumber);
  extract->add_option("--max-problems", ex.max_problems, "Use only the first N problems");
  add_backend_flags(extract, ex.backend);
  add_gateway_flags(extract, ex.gateway);
  extract->callback([&] {
    PromptCatalog catalog = load_catalog(ex.prompts_dir);
    DatasetId dataset_id = ex.dataset_id.empty() ? DatasetId::from_path(ex.dataset)
                                                 : DatasetId::parse(ex.dataset_id);
    auto problems = load_dataset(ex.dataset, dataset_id);
    if (ex.max_problems > 0 && problems.size() > static_cast<size_t>(ex.max_problems)) {
      problems.resize(static_cast<size_t>(ex.max_problems));
    }
    PromptId prompt_id;
    if (ex.prompt == "auto") {
      PipelineMode precomputed = PipelineMode::parse("fcot-precomputed");
      prompt_id = *template_for_mode(precomputed, dataset_id).extraction;
    } else if (auto id = prompt_id_from_string(ex.prompt)) {
      prompt_id = *id;
    } else {
      throw Error("unknown extraction prompt '" + ex.prompt + "'");
    }
    BackendSpec spec = to_backend_spec(ex.backend, "extract");
    auto gateway = make_gateway(spec, ex.gateway, ex.backend.api_key_env,
                                fs::path(ex.out).parent_path() / ".cache");
    auto records = run_extraction_stage(problems, *gateway, spec.model, prompt_id, catalog,
                                        ex.out, ex.workers,
                                        ex.think ? ThinkMode::Think : ThinkMode::NoThink);
    size_t valid = 0;
    for (const auto& record : records) valid += record.valid ? 1 : 0;
    flush_warnings(*gateway);
    std::cout << records.size() << " contexts -> " << ex.out << ", valid "
              << format_percent(records.empty() ? 0.0
                                                : static_cast<double>(valid) /
                                                      static_cast<double>(records.size()),
                                2)
              << "\n";
  });

  // ---- run ----
  auto* run = app.add_subcommand("run", "Execute a full benchmark cell (extraction stage when "
                                        "the mode needs it, then reasoning and aggregation)");
  struct {
    std::string mode, dataset, dataset_id, context_file, runs_dir = "runs", run_id, resume_dir;
    std::string prompts_dir;
    BackendFlags reasoner;
    BackendFlags extractor;
    GatewayFlags gateway;
    SamplingParams sampling;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int workers = 4, max_problems = 0;
  } rn;
  run->add_option("--mode", rn.mode,
                  "fcot-precomputed|fcot-self|fcot-hybrid|zerocot|zerocot-adjusted|ps|core|"
                  "fcot-short|fcot-context-plus-question|fcot-format-{xml,enumerated,"
                  "unnumbered,concatenated}");
  run->add_option("--dataset", rn.dataset, "Line-delimited dataset file");
  run->add_option("--dataset-id", rn.dataset_id, "Dataset name (default: from file name)");
  run->add_option("--context-file", rn.context_file,
                  "Pre-computed context file (required for the pre-computed modes)");
  run->add_option("--runs-dir", rn.runs_dir, "Root directory for run outputs");
  run->add_option("--run-id", rn.run_id, "Run directory name (default: derived, stable)");
  run->add_option("--resume", rn.resume_dir, "Resume a run directory from its manifest");
  run->add_option("--prompts-dir", rn.prompts_dir, "Prompt catalog directory");
  run->add_option("--n-samples", rn.sampling.n_samples, "Samples per problem (pass@5 needs 5)");
  run->add_option("--temperature", rn.sampling.temperature);
  run->add_option("--top-p", rn.sampling.top_p);
  run->add_option("--top-k", rn.sampling.top_k);
  run->add_option("--min-p", rn.sampling.min_p);
  run->add_option("--max-new-tokens", rn.sampling.max_new_tokens);
  run->add_option("--seed", rn.seed, "Request seed forwarded to the backend")
      ->each([&](const std::string&) { rn.seed_set = true; });
  run->add_option("--workers", rn.workers, "Parallel problems")->check(CLI::PositiveNumber);
  run->add_option("--max-problems", rn.max_problems, "Use only the first N problems");
  add_backend_flags(run, rn.reasoner);
  add_backend_flags(run, rn.extractor, "extractor");
  add_gateway_flags(run, rn.gateway);
  run->callback([&] {
    PromptCatalog catalog = load_catalog(rn.prompts_dir);
    RunDeps deps;
    deps.catalog = &catalog;
    deps.workers = rn.workers;

    if (!rn.resume_dir.empty()) {
      RunManifest manifest = RunManifest::from_json(read_file(fs::path(rn.resume_dir) /
                                                              "manifest.json"));
      auto reasoner = make_gateway(manifest.reasoner, rn.gateway, rn.reasoner.api_key_env,
                                   fs::path(rn.resume_dir) / ".cache");
      deps.reasoner = reasoner.get();
      std::unique_ptr<Gateway> extractor;
      if (manifest.extractor) {
        extractor = make_gateway(*manifest.extractor, rn.gateway, rn.extractor.api_key_env,
                                 fs::path(rn.resume_dir) / ".cache");
        deps.extractor = extractor.get();
      }
      RunSummary summary = resume(rn.resume_dir, deps);
      flush_warnings(*reasoner);
      print_summary(summary);
      return;
    }

    if (rn.mode.empty() || rn.dataset.empty()) {
      throw Error("run needs --mode and --dataset (or --resume <run-dir>)");
    }
    RunManifest manifest;
    manifest.mode = PipelineMode::parse(rn.mode);
    manifest.dataset = rn.dataset_id.empty() ? DatasetId::from_path(rn.dataset)
                                             : DatasetId::parse(rn.dataset_id);
    manifest.dataset_path = rn.dataset;
    manifest.reasoner = to_backend_spec(rn.reasoner, "run");
    manifest.sampling = rn.sampling;
    if (rn.seed_set) {
      manifest.sampling.seed = rn.seed;
      manifest.seed = rn.seed;
    }
    manifest.context_file = rn.context_file;
    manifest.created_at = iso8601_utc_now();
    manifest.max_problems = rn.max_problems;

    std::unique_ptr<Gateway> extractor;
    if (manifest.mode.kind == ModeKind::FcotHybrid) {
      BackendFlags flags = rn.extractor;
      if (flags.base_url.empty() && flags.mock_script.empty()) {
        flags.base_url = rn.reasoner.base_url;
        flags.mock_script = rn.reasoner.mock_script;
      }
      manifest.extractor = to_backend_spec(flags, "run (extractor)");
      manifest.mode.extractor_model = manifest.extractor->model;
    }
    pin_prompt_digests(manifest, catalog);
    manifest.run_id = rn.run_id.empty() ? derive_run_id(manifest) : rn.run_id;
    validate_manifest(manifest);

    fs::path default_cache = fs::path(rn.runs_dir) / ".cache";
    auto reasoner = make_gateway(manifest.reasoner, rn.gateway, rn.reasoner.api_key_env,
                                 default_cache);
    deps.reasoner = reasoner.get();
    if (manifest.extractor) {
      extractor = make_gateway(*manifest.extractor, rn.gateway, rn.extractor.api_key_env,
                               default_cache);
      deps.extractor = extractor.get();
    }
    RunSummary summary = run_benchmark(rn.runs_dir, manifest, deps);
    flush_warnings(*reasoner);
    if (extractor) flush_warnings(*extractor);
    std::cout << "run " << manifest.run_id << " -> " << (fs::path(rn.runs_dir) / manifest.run_id).string()
              << "\n";
    print_summary(summary);
  });

  // ---- score ----
  auto* score = app.add_subcommand("score", "Re-aggregate a run's persisted records (offline)");
  struct {
    std::string run_dir;
  } sc;
  score->add_option("--run-dir", sc.run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  score->callback([&] {
    fs::path run_dir(sc.run_dir);
    RunManifest manifest = RunManifest::from_json(read_file(run_dir / "manifest.json"));
    auto records = read_records_file(run_dir / "records.jsonl");
    if (records.empty()) throw Error("no records at " + (run_dir / "records.jsonl").string());
    auto contexts = contexts_for_score(manifest, run_dir);
    RunSummary summary = aggregate_run(manifest, records, contexts.empty() ? nullptr : &contexts);
    write_file_atomic(run_dir / "summary.json", summary.to_json());
    print_summary(summary);
  });

  // ---- validate-context ----
  auto* validate = app.add_subcommand("validate-context",
                                      "Batch grammar check over a context file");
  struct {
    std::string context_file, out;
  } vc;
  validate->add_option("--context-file", vc.context_file, "Context file to check")
      ->required()
      ->check(CLI::ExistingFile);
  validate->add_option("--out", vc.out, "Write re-validated records here");
  validate->callback([&] {
    auto records = read_context_file(vc.context_file);
    size_t valid = 0;
    for (auto& record : records) {
      ValidationReport report = validate_strict(record.raw_context);
      record.valid = report.valid;
      record.violations.clear();
      for (Violation v : report.violations) record.violations.emplace_back(to_string(v));
      valid += record.valid ? 1 : 0;
    }
    if (!vc.out.empty()) write_context_file(vc.out, records);
    double rate = records.empty() ? 0.0
                                  : static_cast<double>(valid) / static_cast<double>(records.size());
    std::cout << valid << "/" << records.size() << " valid (" << format_percent(rate, 2) << ")\n";
  });

  // ---- judge ----
  auto* judge_cmd = app.add_subcommand("judge", "Score a run's reasoning traces for "
                                                "overthinking (0-10, LLM judge)");
  struct JudgeArgs {
    std::string run_dir, out, prompts_dir;
    BackendFlags backend;
    GatewayFlags gateway;
    int sample_index = 0, workers = 4, max_problems = 0;
  };
  static JudgeArgs ju;
  ju.backend.api_key_env = "FCOT_JUDGE_API_KEY";
  judge_cmd->add_option("--run-dir", ju.run_dir, "Run directory to judge")
      ->required()
      ->check(CLI::ExistingDirectory);
  judge_cmd->add_option("--out", ju.out, "Judgment file (default <run-dir>/judgments.jsonl)");
  judge_cmd->add_option("--sample-index", ju.sample_index, "Which of the n samples to judge");
  judge_cmd->add_option("--workers", ju.workers, "Parallel judge calls");
  judge_cmd->add_option("--max-problems", ju.max_problems, "Judge only the first N problems");
  judge_cmd->add_option("--prompts-dir", ju.prompts_dir, "Prompt catalog directory");
  add_backend_flags(judge_cmd, ju.backend, "judge");
  add_gateway_flags(judge_cmd, ju.gateway);
  judge_cmd->callback([&] {
    PromptCatalog catalog = load_catalog(ju.prompts_dir);
    auto inputs = collect_judge_inputs(ju.run_dir, ju.sample_index, ju.max_problems);
    BackendSpec spec = to_backend_spec(ju.backend, "judge");
    auto gateway = make_gateway(spec, ju.gateway, ju.backend.api_key_env,
                                fs::path(ju.run_dir) / ".judge_cache");
    std::vector<OverthinkingJudgment> judgments(inputs.pairs.size());
    parallel_for(inputs.pairs.size(), ju.workers, [&](size_t i) {
      const auto& [problem, record] = inputs.pairs[i];
      OverthinkingJudgment judgment =
          judge_overthinking(problem.question, record.output_text, catalog, *gateway, spec.model);
      judgment.problem_id = problem.id;
      judgment.run_id = inputs.manifest.run_id;
      judgments[i] = std::move(judgment);
    });
    fs::path out = ju.out.empty() ? fs::path(ju.run_dir) / "judgments.jsonl" : fs::path(ju.out);
    write_judgment_file(out, judgments);
    flush_warnings(*gateway);
    double mean = 0;
    for (const auto& judgment : judgments) mean += judgment.score;
    mean /= static_cast<double>(judgments.size());
    std::cout << judgments.size() << " judgments -> " << out.string() << ", mean score " << mean
              << "\n";
  });

  // ---- annotate ----
  auto* annotate_cmd = app.add_subcommand("annotate", "Label a run's trace sentences as "
                                                      "Extraction / Reasoning / Filler");
  static JudgeArgs an;
  an.backend.api_key_env = "FCOT_JUDGE_API_KEY";
  annotate_cmd->add_option("--run-dir", an.run_dir, "Run directory to annotate")
      ->required()
      ->check(CLI::ExistingDirectory);
  annotate_cmd->add_option("--out", an.out, "Annotation file (default <run-dir>/annotations.jsonl)");
  annotate_cmd->add_option("--sample-index", an.sample_index, "Which of the n samples to annotate");
  annotate_cmd->add_option("--workers", an.workers, "Parallel annotator calls");
  annotate_cmd->add_option("--max-problems", an.max_problems, "Annotate only the first N problems");
  annotate_cmd->add_option("--prompts-dir", an.prompts_dir, "Prompt catalog directory");
  add_backend_flags(annotate_cmd, an.backend, "judge");
  add_gateway_flags(annotate_cmd, an.gateway);
  annotate_cmd->callback([&] {
    PromptCatalog catalog = load_catalog(an.prompts_dir);
    auto inputs = collect_judge_inputs(an.run_dir, an.sample_index, an.max_problems);
    BackendSpec spec = to_backend_spec(an.backend, "annotate");
    auto gateway = make_gateway(spec, an.gateway, an.backend.api_key_env,
                                fs::path(an.run_dir) / ".judge_cache");
    std::vector<AnnotatedSolution> solutions(inputs.pairs.size());
    parallel_for(inputs.pairs.size(), an.workers, [&](size_t i) {
      const auto& [problem, record] = inputs.pairs[i];
      AnnotatedSolution solution;
      solution.problem_id = problem.id;
      solution.run_id = inputs.manifest.run_id;
      solution.sentences =
          annotate_sentences(problem.question, record.output_text, catalog, *gateway, spec.model);
      solutions[i] = std::move(solution);
    });
    fs::path out = an.out.empty() ? fs::path(an.run_dir) / "annotations.jsonl" : fs::path(an.out);
    write_annotation_file(out, solutions);
    flush_warnings(*gateway);
    std::cout << solutions.size() << " annotated solutions -> " << out.string() << "\n";
  });

  // ---- dynamics ----
  auto* dynamics_cmd = app.add_subcommand("dynamics", "Aggregate two judged runs: mean/std "
                                                      "scores, decrease fractions, label shares");
  struct {
    std::string judgments_a, judgments_b, annotations_a, annotations_b, out;
  } dy;
  dynamics_cmd->add_option("--judgments-a", dy.judgments_a)->required()->check(CLI::ExistingFile);
  dynamics_cmd->add_option("--judgments-b", dy.judgments_b)->required()->check(CLI::ExistingFile);
  dynamics_cmd->add_option("--annotations-a", dy.annotations_a)->check(CLI::ExistingFile);
  dynamics_cmd->add_option("--annotations-b", dy.annotations_b)->check(CLI::ExistingFile);
  dynamics_cmd->add_option("--out", dy.out, "Write the summary JSON here as well");
  dynamics_cmd->callback([&] {
    if (dy.annotations_a.empty() != dy.annotations_b.empty()) {
      throw Error("give --annotations-a and --annotations-b together");
    }
    auto a = read_judgment_file(dy.judgments_a);
    auto b = read_judgment_file(dy.judgments_b);
    std::vector<AnnotatedSolution> ann_a, ann_b;
    if (!dy.annotations_a.empty()) {
      ann_a = read_annotation_file(dy.annotations_a);
      ann_b = read_annotation_file(dy.annotations_b);
    }
    DynamicsSummary summary = aggregate_dynamics(a, b, ann_a, ann_b);
    std::string text = dynamics_summary_to_json(summary);
    if (!dy.out.empty()) write_file_atomic(dy.out, text + "\n");
    std::cout << text << "\n";
  });

  // ---- report ----
  auto* report_cmd = app.add_subcommand("report", "Tabulate run summaries (Markdown or CSV), "
                                                  "optionally relative to a baseline");
  struct {
    std::vector<std::string> runs;
    std::string runs_dir = "runs", baseline, format = "md", out;
  } rp;
  report_cmd->add_option("--runs", rp.runs, "Run ids (comma-separated or repeated)")
      ->required()
      ->delimiter(',');
  report_cmd->add_option("--runs-dir", rp.runs_dir, "Root directory holding the runs");
  report_cmd->add_option("--baseline", rp.baseline, "Baseline run id for relative columns");
  report_cmd->add_option("--format", rp.format, "md|csv")
      ->check(CLI::IsMember({"md", "markdown", "csv"}));
  report_cmd->add_option("--out", rp.out, "Write the report here instead of stdout");
  report_cmd->callback([&] {
    ReportSpec spec;
    spec.run_ids = rp.runs;
    spec.format = rp.format == "csv" ? ReportFormat::Csv : ReportFormat::Markdown;
    if (!rp.baseline.empty()) {
      spec.baseline_run_id = rp.baseline;
      spec.include_relative = true;
    }
    std::vector<std::string> to_load = spec.run_ids;
    if (spec.baseline_run_id &&
        std::find(to_load.begin(), to_load.end(), *spec.baseline_run_id) == to_load.end()) {
      to_load.push_back(*spec.baseline_run_id);
    }
    auto summaries = load_summaries(rp.runs_dir, to_load);
    std::string report = build_report(spec, summaries);
    if (rp.out.empty()) {
      std::cout << report;
    } else {
      write_file_atomic(rp.out, report);
      std::cout << "report -> " << rp.out << "\n";
    }
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
