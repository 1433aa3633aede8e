#include "fcot/dataset.hpp"

#include <doctest.h>

#include <fstream>

#include "fcot/errors.hpp"
#include "test_support.hpp"

using namespace fcot;

namespace {

std::filesystem::path write_lines(const fcot_test::TempDir& dir, const char* name,
                                  const std::vector<std::string>& lines) {
  auto path = dir / name;
  std::ofstream out(path);
  for (const auto& line : lines) out << line << "\n";
  return path;
}

}  // namespace

TEST_SUITE_BEGIN("dataset");

TEST_CASE("dataset id parsing and path inference") {
  CHECK(DatasetId::parse("math500").kind == DatasetKind::Math500);
  CHECK(DatasetId::parse("MATH-500").kind == DatasetKind::Math500);
  CHECK(DatasetId::parse("gsm_hard").kind == DatasetKind::GsmHard);
  CHECK(DatasetId::parse("svamp").gsm_style());
  CHECK(!DatasetId::parse("aime2024").gsm_style());
  CHECK(DatasetId::parse("my-own-set").kind == DatasetKind::Custom);
  CHECK(DatasetId::parse("my-own-set").to_string() == "my-own-set");
  CHECK(DatasetId::from_path("data/math500.jsonl").kind == DatasetKind::Math500);
  CHECK(DatasetId::from_path("aime2025.jsonl").kind == DatasetKind::Aime2025);
}

TEST_CASE("loading normalizes gold answers once") {
  fcot_test::TempDir dir;
  auto path = write_lines(dir, "set.jsonl", {
      R"({"id": "a", "question": "Q1?", "answer": " 16.13 "})",
      R"({"id": "b", "question": "Q2?", "answer": "\\dfrac{1}{2}", "metadata": {"level": "3", "subject": "algebra"}})",
      R"({"id": "c", "question": "Q3?", "answer": "-9867630"})",
  });
  auto records = load_dataset(path, DatasetId::parse("gsm-hard"));
  REQUIRE(records.size() == 3);
  CHECK(records[0].gold_answer == "16.13");
  CHECK(records[1].gold_answer == "\\frac{1}{2}");
  CHECK(records[1].metadata.at("level") == "3");
  CHECK(records[2].gold_answer == "-9867630");
  CHECK(records[2].dataset.kind == DatasetKind::GsmHard);
}

TEST_CASE("schema violations carry the line number") {
  fcot_test::TempDir dir;
  auto no_answer = write_lines(dir, "bad1.jsonl", {
      R"({"id": "a", "question": "Q1?", "answer": "1"})",
      R"({"id": "b", "question": "Q2?"})",
  });
  CHECK_THROWS_WITH_AS(load_dataset(no_answer, {}), doctest::Contains("line 2"),
                       SchemaViolation);

  auto not_json = write_lines(dir, "bad2.jsonl", {"not json at all"});
  CHECK_THROWS_AS(load_dataset(not_json, {}), SchemaViolation);

  auto duplicate = write_lines(dir, "bad3.jsonl", {
      R"({"id": "a", "question": "Q1?", "answer": "1"})",
      R"({"id": "a", "question": "Q2?", "answer": "2"})",
  });
  CHECK_THROWS_AS(load_dataset(duplicate, {}), DuplicateId);
}

TEST_CASE("export/reload round trip is field-identical") {
  fcot_test::TempDir dir;
  auto path = write_lines(dir, "set.jsonl", {
      R"({"id": "a", "question": "What is $1+1$?", "answer": "2"})",
      R"({"id": "b", "question": "Unicode: ∑ and émojis 🙂", "answer": "1/2", "metadata": {"k": "v"}})",
  });
  auto id = DatasetId::parse("svamp");
  auto records = load_dataset(path, id);
  auto exported = dir / "exported.jsonl";
  write_dataset(exported, records);
  auto reloaded = load_dataset(exported, id);
  REQUIRE(reloaded.size() == records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    CHECK(reloaded[i].id == records[i].id);
    CHECK(reloaded[i].question == records[i].question);
    CHECK(reloaded[i].gold_answer == records[i].gold_answer);
    CHECK(reloaded[i].metadata == records[i].metadata);
  }
}

TEST_CASE("attach_contexts joins on problem id") {
  std::vector<ProblemRecord> problems(3);
  problems[0].id = "p1";
  problems[1].id = "p2";
  problems[2].id = "p3";
  std::vector<ContextRecord> contexts(2);
  contexts[0].problem_id = "p1";
  contexts[1].problem_id = "p3";

  SUBCASE("lenient reports the gaps") {
    auto join = attach_contexts(problems, contexts, /*strict=*/false);
    CHECK(join.pairs.size() == 2);
    CHECK(join.problems_without_context == std::vector<std::string>{"p2"});
    CHECK(join.contexts_without_problem.empty());
  }
  SUBCASE("strict throws MissingContext") {
    CHECK_THROWS_AS(attach_contexts(problems, contexts, /*strict=*/true), MissingContext);
  }
  SUBCASE("full coverage joins everything") {
    contexts.push_back({});
    contexts.back().problem_id = "p2";
    contexts.push_back({});
    contexts.back().problem_id = "orphan";
    auto join = attach_contexts(problems, contexts, /*strict=*/true);
    CHECK(join.pairs.size() == 3);
    CHECK(join.contexts_without_problem == std::vector<std::string>{"orphan"});
  }
}

TEST_SUITE_END();
