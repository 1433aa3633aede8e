#include "fcot/trace.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fcot/errors.hpp"
#include "fcot/mock_backend.hpp"
#include "test_support.hpp"

using namespace fcot;

namespace {

const PromptCatalog& catalog() {
  static PromptCatalog instance = PromptCatalog::load(PromptCatalog::default_dir());
  return instance;
}

OverthinkingJudgment make_judgment(const std::string& id, int score) {
  OverthinkingJudgment judgment;
  judgment.problem_id = id;
  judgment.score = score;
  return judgment;
}

}  // namespace

TEST_SUITE_BEGIN("trace");

TEST_CASE("judge reply parsing accepts the documented score forms") {
  std::string rationale;
  CHECK(parse_overthinking_reply(
            R"(<answer>{"overthinking_score":"9","reasoning":"Prolonged reflection."} </answer>)",
            &rationale) == 9);
  CHECK(rationale == "Prolonged reflection.");

  CHECK(parse_overthinking_reply(R"(<answer>{"overthinking_score": 0, "reasoning": "r"}</answer>)") == 0);
  CHECK(parse_overthinking_reply(R"(<answer>{"overthinking_score": 7.0, "reasoning": "r"}</answer>)") == 7);
  CHECK(parse_overthinking_reply(R"(<answer>{"overthinking_score": "10.0", "reasoning": "r"}</answer>)") == 10);
}

TEST_CASE("judge reply parsing survives chatter and picks the last answer region") {
  std::string reply =
      "<think>long deliberation</think>Some prose.\n"
      "<answer>{\"overthinking_score\": 3, \"reasoning\": \"draft\"}</answer>\n"
      "Wait, revising.\n"
      "<answer>{\"overthinking_score\": 5, \"reasoning\": \"final\"}</answer>";
  std::string rationale;
  CHECK(parse_overthinking_reply(reply, &rationale) == 5);
  CHECK(rationale == "final");
}

TEST_CASE("judge reply format errors") {
  CHECK_THROWS_AS(parse_overthinking_reply("no tags at all"), JudgeFormatError);
  CHECK_THROWS_AS(parse_overthinking_reply("<answer>not json</answer>"), JudgeFormatError);
  CHECK_THROWS_AS(parse_overthinking_reply(R"(<answer>{"reasoning": "r"}</answer>)"),
                  JudgeFormatError);
  // Only integer, quoted-integer, and .0-decimal forms are scores.
  CHECK_THROWS_AS(parse_overthinking_reply(R"(<answer>{"overthinking_score": 9.5}</answer>)"),
                  JudgeFormatError);
  CHECK_THROWS_AS(parse_overthinking_reply(R"(<answer>{"overthinking_score": "nine"}</answer>)"),
                  JudgeFormatError);
  CHECK_THROWS_AS(parse_overthinking_reply(R"(<answer>{"overthinking_score": "9.01"}</answer>)"),
                  JudgeFormatError);
  CHECK_THROWS_AS(parse_overthinking_reply(R"(<answer>{"overthinking_score": 11}</answer>)"),
                  ScoreOutOfRange);
  CHECK_THROWS_AS(parse_overthinking_reply(R"(<answer>{"overthinking_score": -1}</answer>)"),
                  ScoreOutOfRange);
}

TEST_CASE("annotation reply parsing") {
  auto annotations = parse_annotation_reply(
      R"([{"sentence":"So that makes sense.","label":"Filler"}])");
  REQUIRE(annotations.size() == 1);
  CHECK(annotations[0].sentence == "So that makes sense.");
  CHECK(annotations[0].label == SentenceLabel::Filler);

  CHECK(parse_annotation_reply("[]").empty());

  auto wrapped = parse_annotation_reply(
      "Here you go:\n[\n{\"sentence\": \"x [1] has ] brackets\", \"label\": \"Reasoning\"},\n"
      "{\"sentence\": \"From info_1, price is $2.\", \"label\": \"Extraction\"}\n]\nDone.");
  REQUIRE(wrapped.size() == 2);
  CHECK(wrapped[0].label == SentenceLabel::Reasoning);
  CHECK(wrapped[1].label == SentenceLabel::Extraction);
}

TEST_CASE("annotation reply rejections") {
  CHECK_THROWS_AS(parse_annotation_reply(R"([{"sentence":"s","label":"Other"}])"),
                  AnnotationFormatError);
  CHECK_THROWS_AS(parse_annotation_reply("prose without a list"), AnnotationFormatError);
  CHECK_THROWS_AS(parse_annotation_reply(R"([{"label":"Filler"}])"), AnnotationFormatError);
  CHECK_THROWS_AS(parse_annotation_reply(R"([{"sentence":"","label":"Filler"}])"),
                  AnnotationFormatError);
}

TEST_CASE("judge call re-asks once on malformed output") {
  // First reply (no reminder in prompt) is malformed; the re-ask (reminder
  // appended) is well-formed.
  std::vector<MockRule> rules;
  MockRule fixed;
  fixed.substring = "Reminder: respond exactly";
  fixed.replies = {{R"(<answer>{"overthinking_score": 2, "reasoning": "ok"}</answer>)", 5, 0}};
  rules.push_back(fixed);
  MockRule broken;
  broken.substring = "";
  broken.replies = {{"I refuse to answer in the requested format.", 5, 0}};
  rules.push_back(broken);
  auto backend = std::make_shared<MockBackend>(rules);
  Gateway judge(backend);

  auto judgment = judge_overthinking("Solve x^2-5x+6=0.", "The roots are 2 and 3.", catalog(),
                                     judge, "judge-model");
  CHECK(judgment.score == 2);
  CHECK(judgment.judge_model == "judge-model");
  CHECK(backend->total_calls() == 2);
}

TEST_CASE("judge call fails after two malformed replies") {
  MockRule broken;
  broken.substring = "";
  broken.replies = {{"never the right format", 5, 0}};
  auto backend = std::make_shared<MockBackend>(std::vector<MockRule>{broken});
  Gateway judge(backend);
  CHECK_THROWS_AS(
      judge_overthinking("q", "s", catalog(), judge, "judge-model"), JudgeFormatError);
  CHECK(backend->total_calls() == 2);
}

TEST_CASE("annotator call parses the scripted list") {
  MockRule rule;
  rule.substring = "";
  rule.replies = {{R"([{"sentence":"Let me compute.","label":"Filler"},)"
                   R"({"sentence":"2+2=4.","label":"Reasoning"}])",
                   9, 0}};
  auto backend = std::make_shared<MockBackend>(std::vector<MockRule>{rule});
  Gateway judge(backend);
  auto annotations = annotate_sentences("q", "Let me compute. 2+2=4.", catalog(), judge, "j");
  REQUIRE(annotations.size() == 2);
  CHECK(annotations[1].label == SentenceLabel::Reasoning);
}

TEST_CASE("dynamics: identical runs neither decrease nor change") {
  std::vector<OverthinkingJudgment> a = {make_judgment("p1", 4), make_judgment("p2", 2)};
  auto summary = aggregate_dynamics(a, a);
  CHECK(summary.frac_decreased == 0.0);
  CHECK(summary.frac_unchanged == 1.0);
  CHECK(summary.mean_score_a == summary.mean_score_b);
}

TEST_CASE("dynamics: hand-computed two-problem case") {
  std::vector<OverthinkingJudgment> a = {make_judgment("p1", 3), make_judgment("p2", 2)};
  std::vector<OverthinkingJudgment> b = {make_judgment("p1", 1), make_judgment("p2", 2)};
  auto summary = aggregate_dynamics(a, b);
  CHECK(summary.frac_decreased == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(summary.frac_unchanged == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(summary.mean_score_a == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(summary.std_score_a == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(summary.mean_score_b == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(summary.std_score_b == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("dynamics: four-problem case with population std oracle") {
  // a = [2,4,6,8]: mean 5, population variance (9+1+1+9)/4 = 5
  // b = [1,4,7,8]: mean 5, population variance (16+1+4+9)/4 = 7.5
  std::vector<OverthinkingJudgment> a = {make_judgment("w", 2), make_judgment("x", 4),
                                         make_judgment("y", 6), make_judgment("z", 8)};
  std::vector<OverthinkingJudgment> b = {make_judgment("w", 1), make_judgment("x", 4),
                                         make_judgment("y", 7), make_judgment("z", 8)};
  auto summary = aggregate_dynamics(a, b);
  CHECK(summary.mean_score_a == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(summary.std_score_a == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
  CHECK(summary.std_score_b == doctest::Approx(std::sqrt(7.5)).epsilon(1e-12));
  CHECK(summary.frac_decreased == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(summary.frac_unchanged == doctest::Approx(0.5).epsilon(1e-12));

  // Permutation invariance over problem order.
  std::mt19937 rng(11);
  for (int iter = 0; iter < 10; ++iter) {
    std::shuffle(a.begin(), a.end(), rng);
    std::shuffle(b.begin(), b.end(), rng);
    auto shuffled = aggregate_dynamics(a, b);
    CHECK(shuffled.mean_score_a == summary.mean_score_a);
    CHECK(shuffled.std_score_b == summary.std_score_b);
    CHECK(shuffled.frac_decreased == summary.frac_decreased);
  }
}

TEST_CASE("dynamics: mismatched ids are rejected") {
  std::vector<OverthinkingJudgment> a = {make_judgment("p1", 3)};
  std::vector<OverthinkingJudgment> b = {make_judgment("p2", 3)};
  CHECK_THROWS_AS(aggregate_dynamics(a, b), IdMismatch);
  CHECK_THROWS_AS(aggregate_dynamics(a, {}), IdMismatch);
}

TEST_CASE("dynamics: label statistics") {
  std::vector<OverthinkingJudgment> judgments = {make_judgment("p1", 3)};
  AnnotatedSolution run_a;
  run_a.problem_id = "p1";
  run_a.sentences = {{"aaaa", SentenceLabel::Extraction},     // 1 token
                     {"bbbbbbbb", SentenceLabel::Reasoning},  // 2 tokens
                     {"cc", SentenceLabel::Filler}};          // 1 token
  AnnotatedSolution run_b = run_a;
  run_b.sentences.pop_back();  // no filler in run B

  auto summary = aggregate_dynamics(judgments, judgments, {run_a}, {run_b});
  REQUIRE(summary.labels_a.has_value());
  CHECK(summary.labels_a->token_share[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(summary.labels_a->token_share[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(summary.labels_a->token_share[2] == doctest::Approx(0.25).epsilon(1e-12));
  double sum_a = summary.labels_a->token_share[0] + summary.labels_a->token_share[1] +
                 summary.labels_a->token_share[2];
  CHECK(sum_a == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(summary.labels_a->mean_sentences[0] == 1.0);
  CHECK(summary.labels_b->mean_sentences[2] == 0.0);
}

TEST_CASE("judgment and annotation files round trip") {
  fcot_test::TempDir dir;
  std::vector<OverthinkingJudgment> judgments = {make_judgment("p1", 3), make_judgment("p2", 9)};
  judgments[0].rationale = "focused";
  judgments[0].run_id = "run-a";
  judgments[0].judge_model = "judge";
  write_judgment_file(dir / "j.jsonl", judgments);
  auto back = read_judgment_file(dir / "j.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[0].problem_id == "p1");
  CHECK(back[0].score == 3);
  CHECK(back[0].rationale == "focused");
  CHECK(back[1].score == 9);

  AnnotatedSolution solution;
  solution.problem_id = "p1";
  solution.run_id = "run-a";
  solution.sentences = {{"First.", SentenceLabel::Filler}, {"Then 2+2=4.", SentenceLabel::Reasoning}};
  write_annotation_file(dir / "a.jsonl", {solution});
  auto solutions = read_annotation_file(dir / "a.jsonl");
  REQUIRE(solutions.size() == 1);
  REQUIRE(solutions[0].sentences.size() == 2);
  CHECK(solutions[0].sentences[1].label == SentenceLabel::Reasoning);
}

TEST_SUITE_END();
