#include "fcot/orchestrator.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include "fcot/errors.hpp"
#include "fcot/http_backend.hpp"
#include "fcot/mock_backend.hpp"
#include "fcot/util.hpp"

namespace fcot {

namespace {

using json = nlohmann::ordered_json;

json sampling_to_json(const SamplingParams& s) {
  json j;
  j["temperature"] = s.temperature;
  j["top_p"] = s.top_p;
  j["top_k"] = s.top_k;
  j["min_p"] = s.min_p;
  j["max_new_tokens"] = s.max_new_tokens;
  j["n_samples"] = s.n_samples;
  if (s.seed) j["seed"] = *s.seed;
  return j;
}

SamplingParams sampling_from_json(const json& j) {
  SamplingParams s;
  s.temperature = j.value("temperature", s.temperature);
  s.top_p = j.value("top_p", s.top_p);
  s.top_k = j.value("top_k", s.top_k);
  s.min_p = j.value("min_p", s.min_p);
  s.max_new_tokens = j.value("max_new_tokens", s.max_new_tokens);
  s.n_samples = j.value("n_samples", s.n_samples);
  if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  return s;
}

json backend_to_json(const BackendSpec& spec) {
  return json{{"kind", spec.kind}, {"locator", spec.locator}, {"model", spec.model}};
}

BackendSpec backend_from_json(const json& j) {
  BackendSpec spec;
  spec.kind = j.at("kind").get<std::string>();
  spec.locator = j.at("locator").get<std::string>();
  spec.model = j.at("model").get<std::string>();
  return spec;
}

// A crash can leave a half-written final line; appending onto it would merge
// two records. A parseable newline-less tail gets its newline back, a torn
// one is truncated away (and re-executed).
void repair_jsonl_tail(const std::filesystem::path& file,
                       const std::function<bool(const std::string&)>& parses) {
  std::error_code ec;
  if (!std::filesystem::exists(file, ec)) return;
  std::string content = read_file(file);
  if (content.empty() || content.back() == '\n') return;
  size_t last_nl = content.rfind('\n');
  std::string tail = last_nl == std::string::npos ? content : content.substr(last_nl + 1);
  if (parses(tail)) {
    std::ofstream out(file, std::ios::binary | std::ios::app);
    out.put('\n');
  } else {
    std::filesystem::resize_file(file, last_nl == std::string::npos ? 0 : last_nl + 1);
  }
}

}  // namespace

// ---------------- backends ----------------

std::shared_ptr<Backend> build_backend(const BackendSpec& spec, const std::string& api_key) {
  if (spec.kind == "mock") {
    return MockBackend::from_script(spec.locator);
  }
  if (spec.kind == "http") {
    HttpBackendConfig config;
    config.base_url = spec.locator;
    config.api_key = api_key;
    return std::make_shared<HttpBackend>(std::move(config));
  }
  throw ManifestInvalid("unknown backend kind '" + spec.kind + "'");
}

// ---------------- manifest ----------------

std::string RunManifest::to_json() const {
  json j;
  j["run_id"] = run_id;
  j["mode"] = mode.to_string();
  if (mode.kind == ModeKind::FcotHybrid) j["extractor_model"] = mode.extractor_model;
  j["dataset"] = dataset.to_string();
  j["dataset_path"] = dataset_path;
  j["reasoner"] = backend_to_json(reasoner);
  if (extractor) j["extractor"] = backend_to_json(*extractor);
  j["sampling"] = sampling_to_json(sampling);
  if (!context_file.empty()) j["context_file"] = context_file;
  json digests = json::object();
  for (const auto& [name, digest] : prompt_digests) digests[name] = digest;
  j["prompt_digests"] = digests;
  j["created_at"] = created_at;
  j["seed"] = seed;
  if (max_problems > 0) j["max_problems"] = max_problems;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ManifestInvalid("manifest is not a JSON object");
  RunManifest manifest;
  try {
    manifest.run_id = j.at("run_id").get<std::string>();
    manifest.mode = PipelineMode::parse(j.at("mode").get<std::string>());
    if (j.contains("extractor_model")) {
      manifest.mode.extractor_model = j["extractor_model"].get<std::string>();
    }
    manifest.dataset = DatasetId::parse(j.at("dataset").get<std::string>());
    manifest.dataset_path = j.at("dataset_path").get<std::string>();
    manifest.reasoner = backend_from_json(j.at("reasoner"));
    if (j.contains("extractor")) manifest.extractor = backend_from_json(j["extractor"]);
    manifest.sampling = sampling_from_json(j.at("sampling"));
    manifest.context_file = j.value("context_file", "");
    if (j.contains("prompt_digests")) {
      for (const auto& [name, digest] : j["prompt_digests"].items()) {
        manifest.prompt_digests[name] = digest.get<std::string>();
      }
    }
    manifest.created_at = j.value("created_at", "");
    manifest.seed = j.value("seed", std::uint64_t{0});
    manifest.max_problems = j.value("max_problems", 0);
  } catch (const json::exception& e) {
    throw ManifestInvalid(std::string("manifest field error: ") + e.what());
  }
  return manifest;
}

void validate_manifest(const RunManifest& manifest) {
  if (manifest.run_id.empty()) throw ManifestInvalid("run_id is empty");
  if (manifest.dataset_path.empty()) throw ManifestInvalid("dataset_path is empty");
  if (manifest.reasoner.model.empty()) throw ManifestInvalid("reasoner model is empty");
  if (manifest.sampling.n_samples < 1) throw ManifestInvalid("n_samples must be >= 1");
  if (manifest.mode.requires_context_file() && manifest.context_file.empty()) {
    throw ManifestInvalid("mode " + manifest.mode.to_string() + " requires a context_file");
  }
  if (manifest.mode.kind == ModeKind::FcotHybrid) {
    if (!manifest.extractor || manifest.extractor->model.empty()) {
      throw ManifestInvalid("fcot-hybrid requires an extractor backend+model");
    }
  }
}

void pin_prompt_digests(RunManifest& manifest, const PromptCatalog& catalog) {
  auto pin = [&](PromptId id) {
    manifest.prompt_digests[to_string(id)] = catalog.get(id).sha256;
  };
  ModeTemplates templates = template_for_mode(manifest.mode, manifest.dataset);
  if (templates.extraction) pin(*templates.extraction);
  pin(templates.reasoning);
}

namespace {

void check_prompt_digests(const RunManifest& manifest, const PromptCatalog& catalog) {
  for (const auto& [name, digest] : manifest.prompt_digests) {
    auto id = prompt_id_from_string(name);
    if (!id) throw CorruptRunState("manifest pins unknown prompt '" + name + "'");
    if (catalog.get(*id).sha256 != digest) {
      throw CorruptRunState("prompt '" + name + "' drifted since the run was created (manifest " +
                            digest + ", catalog " + catalog.get(*id).sha256 + ")");
    }
  }
}

}  // namespace

// ---------------- summary ----------------

std::string RunSummary::to_json() const {
  json j;
  j["run_id"] = run_id;
  j["mode"] = mode;
  j["dataset"] = dataset;
  j["n_problems"] = n_problems;
  j["n_samples"] = n_samples;
  j["pass_at_5"] = pass_at_5;
  j["mean_tokens"] = mean_tokens;
  if (valid_context_rate) {
    j["valid_context_rate"] = *valid_context_rate;
  } else {
    j["valid_context_rate"] = nullptr;
  }
  j["estimated_usage_fraction"] = estimated_usage_fraction;
  j["errors"] = errors;
  return j.dump(2) + "\n";
}

RunSummary RunSummary::from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error("summary is not a JSON object");
  RunSummary summary;
  summary.run_id = j.at("run_id").get<std::string>();
  summary.mode = j.at("mode").get<std::string>();
  summary.dataset = j.at("dataset").get<std::string>();
  summary.n_problems = j.at("n_problems").get<std::size_t>();
  summary.n_samples = j.at("n_samples").get<int>();
  summary.pass_at_5 = j.at("pass_at_5").get<double>();
  summary.mean_tokens = j.at("mean_tokens").get<double>();
  if (j.contains("valid_context_rate") && !j["valid_context_rate"].is_null()) {
    summary.valid_context_rate = j["valid_context_rate"].get<double>();
  }
  summary.estimated_usage_fraction = j.at("estimated_usage_fraction").get<double>();
  summary.errors = j.at("errors").get<std::size_t>();
  return summary;
}

RunSummary read_summary(const std::filesystem::path& file) {
  return RunSummary::from_json(read_file(file));
}

// ---------------- records ----------------

std::string reasoning_record_to_json(const ReasoningRecord& record) {
  json j;
  j["problem_id"] = record.problem_id;
  j["sample_index"] = record.sample_index;
  j["correct"] = record.correct;
  j["extraction_tokens"] = record.extraction_tokens;
  j["reasoning_tokens"] = record.reasoning_tokens;
  j["usage_estimated"] = record.usage_estimated;
  j["boxed_raw"] = record.boxed_raw;
  j["prompt"] = record.prompt;
  j["output_text"] = record.output_text;
  j["prompt_tokens"] = record.prompt_tokens;
  j["question_in_prompt"] = record.question_in_prompt;
  if (!record.error.empty()) j["error"] = record.error;
  return j.dump();
}

std::optional<ReasoningRecord> reasoning_record_from_json(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  ReasoningRecord record;
  try {
    record.problem_id = j.at("problem_id").get<std::string>();
    record.sample_index = j.at("sample_index").get<int>();
    record.correct = j.at("correct").get<bool>();
    record.extraction_tokens = j.at("extraction_tokens").get<long long>();
    record.reasoning_tokens = j.at("reasoning_tokens").get<long long>();
    record.usage_estimated = j.at("usage_estimated").get<bool>();
    record.boxed_raw = j.at("boxed_raw").get<std::string>();
    record.prompt = j.at("prompt").get<std::string>();
    record.output_text = j.at("output_text").get<std::string>();
    record.prompt_tokens = j.at("prompt_tokens").get<long long>();
    record.question_in_prompt = j.at("question_in_prompt").get<bool>();
    record.error = j.value("error", "");
  } catch (const json::exception&) {
    return std::nullopt;
  }
  return record;
}

std::vector<ReasoningRecord> read_records_file(const std::filesystem::path& file) {
  std::vector<ReasoningRecord> records;
  std::error_code ec;
  if (!std::filesystem::exists(file, ec)) return records;
  for (const auto& line : split_lines(read_file(file))) {
    if (trim(line).empty()) continue;
    if (auto record = reasoning_record_from_json(line)) records.push_back(std::move(*record));
  }
  return records;
}

// ---------------- prompt building ----------------

namespace {

// What goes into the [INSERTED CONTEXT] slot. Valid contexts are re-rendered
// canonically; invalid ones fall back to lenient salvage, then to the raw
// extractor text, so no problem is ever dropped.
std::string context_insert_text(const PipelineMode& mode, const ContextRecord& context,
                                PromptId reasoning_prompt) {
  std::optional<ContextBlock> block;
  try {
    block = parse_context(context.raw_context,
                          context.valid ? ParseMode::Strict : ParseMode::Lenient);
  } catch (const UnparseableContext&) {
    if (!context.valid) return context.raw_context;
    // The file claimed validity but the text does not hold up; salvage.
    try {
      block = parse_context(context.raw_context, ParseMode::Lenient);
    } catch (const UnparseableContext&) {
      return context.raw_context;
    }
  }
  bool wrapper_in_template =
      reasoning_prompt == PromptId::FcotDefault || reasoning_prompt == PromptId::FcotShort;
  if (mode.kind == ModeKind::FcotFormat && mode.format != ContextFormat::XmlLike) {
    if (block->well_formed()) return render_context(*block, mode.format);
    return context.raw_context;
  }
  if (wrapper_in_template) return render_xml_inner(*block);
  if (block->well_formed()) return render_context(*block, ContextFormat::XmlLike);
  // Partial salvage for a template without its own <context> wrapper.
  return "<context>\n" + render_xml_inner(*block) + "\n</context>";
}

}  // namespace

BuiltPrompt build_reasoning_prompt(const PipelineMode& mode, const PromptCatalog& catalog,
                                   const ProblemRecord& problem, const ContextRecord* context) {
  ModeTemplates templates = template_for_mode(mode, problem.dataset);
  std::map<std::string, std::string> bindings;
  if (mode.uses_context()) {
    if (!context) throw Error("mode " + mode.to_string() + " needs a context record");
    bindings["INSERTED CONTEXT"] = context_insert_text(mode, *context, templates.reasoning);
  }
  if (mode.includes_original_question()) {
    bindings["ORIGINAL QUESTION"] = problem.question;
  }
  BuiltPrompt built;
  built.text = catalog.render(templates.reasoning, bindings);
  built.question_in_prompt = contains(built.text, problem.question);
  return built;
}

// ---------------- extraction stage ----------------

std::vector<ContextRecord> run_extraction_stage(const std::vector<ProblemRecord>& problems,
                                                Gateway& extractor, const std::string& model,
                                                PromptId prompt_id, const PromptCatalog& catalog,
                                                const std::filesystem::path& context_path,
                                                int workers, ThinkMode think) {
  repair_jsonl_tail(context_path, [](const std::string& line) {
    try {
      (void)context_record_from_json(line, 0);
      return true;
    } catch (const Error&) {
      return false;
    }
  });
  std::map<std::string, ContextRecord> existing;
  std::error_code ec;
  if (std::filesystem::exists(context_path, ec)) {
    for (auto& record : read_context_file(context_path)) {
      existing.emplace(record.problem_id, std::move(record));
    }
  }

  std::mutex append_mu;
  std::vector<std::optional<ContextRecord>> fresh(problems.size());
  parallel_for(problems.size(), workers, [&](size_t i) {
    const ProblemRecord& problem = problems[i];
    if (existing.count(problem.id)) return;
    ChatRequest request;
    request.model = model;
    request.prompt = catalog.render(prompt_id, {{"ORIGINAL QUESTION", problem.question}});
    request.sampling.n_samples = 1;
    request.think = think;
    request.tag = {problem.id, "extraction", 0};
    ContextRecord record;
    try {
      ChatResponse response = extractor.complete(request).at(0);
      record = make_context_record(problem.id, extract_context_region(response.text));
      record.extraction_tokens = response.completion_tokens;
      record.usage_estimated = response.usage_estimated;
    } catch (const Error& e) {
      record.problem_id = problem.id;
      record.valid = false;
      record.violations = {to_string(Violation::MissingRoot)};
      record.extraction_tokens = 0;
      record.error = e.what();
    }
    {
      std::lock_guard lock(append_mu);
      append_line(context_path, context_record_to_json(record));
    }
    fresh[i] = std::move(record);
  });

  std::vector<ContextRecord> records;
  records.reserve(problems.size());
  for (size_t i = 0; i < problems.size(); ++i) {
    if (fresh[i]) {
      records.push_back(std::move(*fresh[i]));
    } else {
      records.push_back(existing.at(problems[i].id));
    }
  }
  return records;
}

// ---------------- reasoning stage ----------------

std::vector<ReasoningRecord> run_reasoning_stage(
    const std::vector<ProblemRecord>& problems,
    const std::map<std::string, const ContextRecord*>& contexts_by_id, Gateway& reasoner,
    const RunManifest& manifest, const PromptCatalog& catalog,
    const std::filesystem::path& records_path, int workers) {
  repair_jsonl_tail(records_path, [](const std::string& line) {
    return reasoning_record_from_json(line).has_value();
  });
  std::set<std::pair<std::string, int>> done;
  for (const auto& record : read_records_file(records_path)) {
    done.emplace(record.problem_id, record.sample_index);
  }

  std::mutex append_mu;
  parallel_for(problems.size(), workers, [&](size_t i) {
    const ProblemRecord& problem = problems[i];
    std::vector<int> needed;
    for (int s = 0; s < manifest.sampling.n_samples; ++s) {
      if (!done.count({problem.id, s})) needed.push_back(s);
    }
    if (needed.empty()) return;

    const ContextRecord* context = nullptr;
    if (auto it = contexts_by_id.find(problem.id); it != contexts_by_id.end()) {
      context = it->second;
    }
    BuiltPrompt built = build_reasoning_prompt(manifest.mode, catalog, problem, context);
    long long extraction_tokens = 0;
    bool extraction_estimated = false;
    if (manifest.mode.counts_extraction_tokens() && context) {
      extraction_tokens = std::max(0LL, context->extraction_tokens);
      extraction_estimated = context->usage_estimated;
    }

    ChatRequest request;
    request.model = manifest.reasoner.model;
    request.prompt = built.text;
    request.sampling = manifest.sampling;
    request.think = ThinkMode::Think;
    request.tag = {problem.id, "reasoning", 0};

    ExtractedAnswer gold = normalize_answer(problem.gold_answer);

    std::vector<ReasoningRecord> fresh;
    try {
      std::vector<ChatResponse> responses = reasoner.complete(request);
      for (int s : needed) {
        const ChatResponse& response = responses.at(static_cast<size_t>(s));
        ReasoningRecord record;
        record.problem_id = problem.id;
        record.sample_index = s;
        record.prompt = built.text;
        record.output_text = response.text;
        record.prompt_tokens = response.prompt_tokens;
        record.reasoning_tokens = response.completion_tokens;
        record.extraction_tokens = extraction_tokens;
        record.usage_estimated = response.usage_estimated || extraction_estimated;
        record.question_in_prompt = built.question_in_prompt;
        ExtractedAnswer answer = extract_boxed(response.text);
        record.boxed_raw = answer.raw.value_or("");
        record.correct = answers_equal(answer, gold);
        fresh.push_back(std::move(record));
      }
    } catch (const Error& e) {
      for (int s : needed) {
        ReasoningRecord record;
        record.problem_id = problem.id;
        record.sample_index = s;
        record.prompt = built.text;
        record.extraction_tokens = extraction_tokens;
        record.usage_estimated = extraction_estimated;
        record.question_in_prompt = built.question_in_prompt;
        record.error = e.what();
        fresh.push_back(std::move(record));
      }
    }
    std::lock_guard lock(append_mu);
    for (const auto& record : fresh) {
      append_line(records_path, reasoning_record_to_json(record));
    }
  });

  return read_records_file(records_path);
}

// ---------------- aggregation ----------------

RunSummary aggregate_run(const RunManifest& manifest, const std::vector<ReasoningRecord>& records,
                         const std::vector<ContextRecord>* contexts) {
  RunSummary summary;
  summary.run_id = manifest.run_id;
  summary.mode = manifest.mode.to_string();
  summary.dataset = manifest.dataset.to_string();
  summary.n_samples = manifest.sampling.n_samples;

  // Group by problem, ordered, dropping duplicate (problem, sample) pairs.
  std::map<std::string, std::map<int, const ReasoningRecord*>> by_problem;
  for (const auto& record : records) {
    by_problem[record.problem_id].emplace(record.sample_index, &record);
  }
  summary.n_problems = by_problem.size();

  long long token_sum = 0;
  size_t sample_count = 0;
  size_t estimated_count = 0;
  size_t passed = 0;
  for (const auto& [problem_id, samples] : by_problem) {
    (void)problem_id;
    std::vector<bool> flags;
    for (const auto& [index, record] : samples) {
      (void)index;
      flags.push_back(record->correct);
      SampleOutcome outcome;
      outcome.extraction_tokens = record->extraction_tokens;
      outcome.reasoning_tokens = record->reasoning_tokens;
      token_sum += token_total(outcome, manifest.mode);
      if (record->usage_estimated) ++estimated_count;
      if (!record->error.empty()) ++summary.errors;
      ++sample_count;
    }
    if (pass_at_k(flags, static_cast<int>(flags.size()))) ++passed;
  }
  if (summary.n_problems > 0) {
    summary.pass_at_5 =
        static_cast<double>(passed) / static_cast<double>(summary.n_problems);
  }
  if (sample_count > 0) {
    summary.mean_tokens = static_cast<double>(token_sum) / static_cast<double>(sample_count);
    summary.estimated_usage_fraction =
        static_cast<double>(estimated_count) / static_cast<double>(sample_count);
  }
  if (manifest.mode.uses_context() && contexts && !contexts->empty()) {
    size_t valid = 0;
    for (const auto& context : *contexts) {
      if (context.valid) ++valid;
    }
    summary.valid_context_rate =
        static_cast<double>(valid) / static_cast<double>(contexts->size());
  }
  return summary;
}

// ---------------- run execution ----------------

namespace {

struct RunPaths {
  std::filesystem::path dir, manifest, contexts, records, summary;
  explicit RunPaths(const std::filesystem::path& run_dir)
      : dir(run_dir),
        manifest(run_dir / "manifest.json"),
        contexts(run_dir / "contexts.jsonl"),
        records(run_dir / "records.jsonl"),
        summary(run_dir / "summary.json") {}
};

}  // namespace

namespace {

std::string manifest_identity(const RunManifest& manifest) {
  RunManifest copy = manifest;
  copy.created_at.clear();  // wall clock never makes two configs different
  return copy.to_json();
}

}  // namespace

RunSummary execute_run(const std::filesystem::path& run_dir, const RunManifest& manifest,
                       RunDeps& deps) {
  validate_manifest(manifest);
  if (!deps.catalog || !deps.reasoner) throw Error("execute_run: catalog and reasoner required");
  check_prompt_digests(manifest, *deps.catalog);

  RunPaths paths(run_dir);
  std::filesystem::create_directories(paths.dir);
  if (std::filesystem::exists(paths.manifest)) {
    RunManifest existing = RunManifest::from_json(read_file(paths.manifest));
    if (manifest_identity(existing) != manifest_identity(manifest)) {
      throw ManifestInvalid("run directory " + run_dir.string() +
                            " already holds a different manifest; pick another run id");
    }
  } else {
    write_file_atomic(paths.manifest, manifest.to_json());
  }

  std::vector<ProblemRecord> problems = load_dataset(manifest.dataset_path, manifest.dataset);
  if (manifest.max_problems > 0 && problems.size() > static_cast<size_t>(manifest.max_problems)) {
    problems.resize(static_cast<size_t>(manifest.max_problems));
  }
  if (problems.empty()) throw ManifestInvalid("dataset is empty: " + manifest.dataset_path);

  // Contexts: read the pre-computed file or run/resume the extraction stage.
  std::vector<ContextRecord> contexts;
  std::map<std::string, const ContextRecord*> context_by_id;
  if (manifest.mode.requires_context_file()) {
    auto file_records = read_context_file(manifest.context_file);
    ContextJoin join = attach_contexts(problems, file_records, /*strict=*/true);
    for (auto& [problem, context] : join.pairs) {
      (void)problem;
      contexts.push_back(context);
    }
  } else if (manifest.mode.runs_extraction()) {
    Gateway& extractor = deps.extractor ? *deps.extractor : *deps.reasoner;
    const std::string extractor_model = manifest.extractor ? manifest.extractor->model
                                                           : manifest.reasoner.model;
    ModeTemplates templates = template_for_mode(manifest.mode, manifest.dataset);
    contexts = run_extraction_stage(problems, extractor, extractor_model, *templates.extraction,
                                    *deps.catalog, paths.contexts, deps.workers);
  }
  for (size_t i = 0; i < contexts.size(); ++i) {
    context_by_id[contexts[i].problem_id] = &contexts[i];
  }

  std::vector<ReasoningRecord> all_records =
      run_reasoning_stage(problems, context_by_id, *deps.reasoner, manifest, *deps.catalog,
                          paths.records, deps.workers);
  RunSummary summary =
      aggregate_run(manifest, all_records, contexts.empty() ? nullptr : &contexts);
  write_file_atomic(paths.summary, summary.to_json());
  return summary;
}

RunSummary run_benchmark(const std::filesystem::path& runs_root, const RunManifest& manifest,
                         RunDeps& deps) {
  return execute_run(runs_root / manifest.run_id, manifest, deps);
}

RunSummary resume(const std::filesystem::path& run_dir, RunDeps& deps) {
  auto manifest_path = run_dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw CorruptRunState("no manifest at " + manifest_path.string());
  }
  RunManifest manifest = RunManifest::from_json(read_file(manifest_path));
  return execute_run(run_dir, manifest, deps);
}

}  // namespace fcot
