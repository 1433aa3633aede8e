#include "fcot/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fcot/errors.hpp"

namespace fcot {

namespace {

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

std::string group_thousands(long long value) {
  std::string digits = std::to_string(value < 0 ? -value : value);
  std::string out;
  int count = 0;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    if (count > 0 && count % 3 == 0) out.push_back(',');
    out.push_back(*it);
    ++count;
  }
  if (value < 0) out.push_back('-');
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace

std::string format_percent(double fraction, int decimals) {
  return fixed(fraction * 100.0, decimals) + "%";
}

std::string format_tokens(double mean_tokens, bool thousands_separators) {
  long long rounded = std::llround(mean_tokens);
  return thousands_separators ? group_thousands(rounded) : std::to_string(rounded);
}

std::string format_relative_tokens(double run_tokens, double baseline_tokens) {
  if (baseline_tokens <= 0) return "n/a";
  return fixed(run_tokens / baseline_tokens * 100.0, 1) + "%";
}

std::string format_pass_delta(double run_pass, double baseline_pass) {
  double delta_pp = (run_pass - baseline_pass) * 100.0;
  std::string body = fixed(delta_pp, 2);
  if (delta_pp >= 0 && body[0] != '-') body = "+" + body;
  return body + "pp";
}

std::map<std::string, RunSummary> load_summaries(const std::filesystem::path& runs_root,
                                                 const std::vector<std::string>& run_ids) {
  std::map<std::string, RunSummary> summaries;
  for (const auto& run_id : run_ids) {
    auto file = runs_root / run_id / "summary.json";
    if (!std::filesystem::exists(file)) {
      throw MissingSummary("no summary for run '" + run_id + "' (" + file.string() + ")");
    }
    summaries.emplace(run_id, read_summary(file));
  }
  return summaries;
}

std::string build_report(const ReportSpec& spec,
                         const std::map<std::string, RunSummary>& summaries) {
  if (spec.include_relative && !spec.baseline_run_id) {
    throw Error("relative columns need a baseline run id");
  }
  const RunSummary* baseline = nullptr;
  if (spec.include_relative) {
    auto it = summaries.find(*spec.baseline_run_id);
    if (it == summaries.end()) throw MissingSummary("baseline run '" + *spec.baseline_run_id +
                                                    "' not among the loaded summaries");
    baseline = &it->second;
  }
  for (const auto& run_id : spec.run_ids) {
    if (!summaries.count(run_id)) throw MissingSummary("run '" + run_id + "' not loaded");
  }

  bool any_valid_rate = false;
  for (const auto& run_id : spec.run_ids) {
    if (summaries.at(run_id).valid_context_rate) any_valid_rate = true;
  }

  std::vector<std::string> header = {"Run", "Mode", "Dataset", "Pass@5", "# Tokens"};
  if (any_valid_rate) header.push_back("Valid Context");
  if (spec.include_relative) {
    header.push_back("Rel. # Tokens");
    header.push_back("dPass@5");
  }

  std::vector<std::vector<std::string>> rows;
  bool markdown = spec.format == ReportFormat::Markdown;
  for (const auto& run_id : spec.run_ids) {
    const RunSummary& s = summaries.at(run_id);
    std::vector<std::string> row = {s.run_id, s.mode, s.dataset,
                                    format_percent(s.pass_at_5, 2),
                                    format_tokens(s.mean_tokens, markdown)};
    if (any_valid_rate) {
      row.push_back(s.valid_context_rate ? format_percent(*s.valid_context_rate, 2) : "n/a");
    }
    if (spec.include_relative) {
      row.push_back(format_relative_tokens(s.mean_tokens, baseline->mean_tokens));
      row.push_back(format_pass_delta(s.pass_at_5, baseline->pass_at_5));
    }
    rows.push_back(std::move(row));
  }

  std::string out;
  if (markdown) {
    auto emit_row = [&](const std::vector<std::string>& cells) {
      out += "|";
      for (const auto& cell : cells) {
        out += " " + cell + " |";
      }
      out += "\n";
    };
    emit_row(header);
    std::vector<std::string> rule(header.size(), "---");
    emit_row(rule);
    for (const auto& row : rows) emit_row(row);
  } else {
    auto emit_row = [&](const std::vector<std::string>& cells) {
      for (size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) out += ",";
        out += cells[i];
      }
      out += "\n";
    };
    std::vector<std::string> csv_header = {"run",     "mode",   "dataset",
                                           "pass_at_5", "mean_tokens"};
    if (any_valid_rate) csv_header.push_back("valid_context_rate");
    if (spec.include_relative) {
      csv_header.push_back("relative_tokens");
      csv_header.push_back("delta_pass_at_5_pp");
    }
    emit_row(csv_header);
    for (const auto& row : rows) emit_row(row);
  }
  return out;
}

}  // namespace fcot
