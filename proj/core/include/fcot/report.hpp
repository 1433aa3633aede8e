#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fcot/orchestrator.hpp"

namespace fcot {

enum class ReportFormat { Markdown, Csv };

struct ReportSpec {
  std::vector<std::string> run_ids;
  std::optional<std::string> baseline_run_id;
  ReportFormat format = ReportFormat::Markdown;
  bool include_relative = false;  // requires baseline_run_id
};

// Formatting helpers, pinned to the table precision: Pass@5 two decimals,
// relative tokens one decimal, token means rounded to whole tokens.
std::string format_percent(double fraction, int decimals);
std::string format_tokens(double mean_tokens, bool thousands_separators);
std::string format_relative_tokens(double run_tokens, double baseline_tokens);
std::string format_pass_delta(double run_pass, double baseline_pass);

// One row per run: Pass@5, # Tokens, Valid Context (when present), plus
// relative-token and delta columns against the baseline when requested.
// Pure over the given summaries; never touches a backend.
std::string build_report(const ReportSpec& spec,
                         const std::map<std::string, RunSummary>& summaries);

// Loads runs_root/<id>/summary.json for every id; throws MissingSummary.
std::map<std::string, RunSummary> load_summaries(const std::filesystem::path& runs_root,
                                                 const std::vector<std::string>& run_ids);

}  // namespace fcot
