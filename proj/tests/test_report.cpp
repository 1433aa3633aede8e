#include "fcot/report.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fcot/errors.hpp"
#include "fcot/util.hpp"
#include "test_support.hpp"

using namespace fcot;

namespace {

RunSummary summary_of(const std::string& id, const std::string& mode, double pass, double tokens,
                      std::optional<double> valid_rate = std::nullopt) {
  RunSummary summary;
  summary.run_id = id;
  summary.mode = mode;
  summary.dataset = "math500";
  summary.n_problems = 500;
  summary.n_samples = 5;
  summary.pass_at_5 = pass;
  summary.mean_tokens = tokens;
  summary.valid_context_rate = valid_rate;
  return summary;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

TEST_SUITE_BEGIN("report");

TEST_CASE("formatting helpers match the table precision") {
  CHECK(format_percent(2.0 / 3.0, 2) == "66.67%");
  CHECK(format_percent(0.994, 2) == "99.40%");
  CHECK(format_percent(1.0, 2) == "100.00%");
  CHECK(format_tokens(4931.0, true) == "4,931");
  CHECK(format_tokens(4931.0, false) == "4931");
  CHECK(format_tokens(1234567.4, true) == "1,234,567");
  CHECK(format_tokens(999.6, true) == "1,000");

  // Division oracle for the relative column.
  double oracle = 2437.0 / 4931.0 * 100.0;
  CHECK(std::llround(oracle * 10.0) == 494);
  CHECK(format_relative_tokens(2437.0, 4931.0) == "49.4%");
  CHECK(format_relative_tokens(4931.0, 4931.0) == "100.0%");

  CHECK(format_pass_delta(0.994, 0.994) == "+0.00pp");
  CHECK(format_pass_delta(0.986, 0.994) == "-0.80pp");
  CHECK(format_pass_delta(0.9940, 0.9860) == "+0.80pp");
}

TEST_CASE("markdown report mirrors the reference row") {
  std::map<std::string, RunSummary> summaries;
  summaries.emplace("zero", summary_of("zero", "zerocot", 0.9940, 4931.0));
  summaries.emplace("fcot", summary_of("fcot", "fcot-precomputed", 0.9860, 2437.0, 1.0));

  ReportSpec spec;
  spec.run_ids = {"zero", "fcot"};
  spec.baseline_run_id = "zero";
  spec.include_relative = true;
  spec.format = ReportFormat::Markdown;

  std::string report = build_report(spec, summaries);
  CHECK(contains(report, "| Pass@5 | # Tokens | Valid Context | Rel. # Tokens | dPass@5 |"));
  CHECK(contains(report, "| 99.40% | 4,931 |"));
  CHECK(contains(report, "| 98.60% | 2,437 | 100.00% | 49.4% | -0.80pp |"));
  CHECK(contains(report, "| 100.0% | +0.00pp |"));  // baseline relative to itself
}

TEST_CASE("csv report round-trips the numbers at stated precision") {
  std::map<std::string, RunSummary> summaries;
  summaries.emplace("zero", summary_of("zero", "zerocot", 2.0 / 3.0, 4931.0));
  summaries.emplace("fcot", summary_of("fcot", "fcot-self", 0.9860, 2437.0, 0.998));

  ReportSpec spec;
  spec.run_ids = {"zero", "fcot"};
  spec.baseline_run_id = "zero";
  spec.include_relative = true;
  spec.format = ReportFormat::Csv;

  std::string report = build_report(spec, summaries);
  auto lines = split_lines(report);
  REQUIRE(lines.size() == 3);
  auto header = split_csv(lines[0]);
  auto zero_row = split_csv(lines[1]);
  auto fcot_row = split_csv(lines[2]);
  REQUIRE(header.size() == 8);
  CHECK(header[3] == "pass_at_5");
  CHECK(header[5] == "valid_context_rate");

  CHECK(zero_row[3] == "66.67%");
  CHECK(zero_row[4] == "4931");  // no separators in CSV
  CHECK(zero_row[5] == "n/a");
  CHECK(fcot_row[3] == "98.60%");
  CHECK(fcot_row[5] == "99.80%");
  CHECK(fcot_row[6] == "49.4%");

  // Parse-back at stated precision.
  CHECK(std::stod(zero_row[3]) == doctest::Approx(2.0 / 3.0 * 100.0).epsilon(1e-4));
  CHECK(std::stod(zero_row[4]) == 4931.0);
  CHECK(std::stod(fcot_row[6]) == doctest::Approx(2437.0 / 4931.0 * 100.0).epsilon(1e-3));
}

TEST_CASE("report errors") {
  std::map<std::string, RunSummary> summaries;
  summaries.emplace("a", summary_of("a", "zerocot", 1.0, 100.0));

  ReportSpec missing;
  missing.run_ids = {"a", "b"};
  CHECK_THROWS_AS(build_report(missing, summaries), MissingSummary);

  ReportSpec relative_without_baseline;
  relative_without_baseline.run_ids = {"a"};
  relative_without_baseline.include_relative = true;
  CHECK_THROWS_AS(build_report(relative_without_baseline, summaries), Error);
}

TEST_CASE("load_summaries reads persisted files and flags absences") {
  fcot_test::TempDir dir;
  auto run_dir = dir / "runs" / "a";
  std::filesystem::create_directories(run_dir);
  write_file_atomic(run_dir / "summary.json", summary_of("a", "zerocot", 0.5, 10.0).to_json());
  auto summaries = load_summaries(dir / "runs", {"a"});
  CHECK(summaries.at("a").pass_at_5 == 0.5);
  CHECK_THROWS_AS(load_summaries(dir / "runs", {"a", "ghost"}), MissingSummary);
}

TEST_SUITE_END();
