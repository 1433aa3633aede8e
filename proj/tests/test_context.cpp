#include "fcot/context.hpp"

#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "fcot/errors.hpp"
#include "test_support.hpp"

using namespace fcot;
using fcot_test::kApplePearXml;

namespace {

ContextBlock apple_pear_block() {
  return ContextBlock{{{1, "Price per apple: $2"}, {2, "Price per pear: 1.5x price per apple"}},
                      "Total cost of 2 apples and 2 pears"};
}

}  // namespace

TEST_SUITE_BEGIN("context");

TEST_CASE("extract_context_region cuts the tag-bounded substring") {
  CHECK(extract_context_region(
            "Sure! <context><info_1>a</info_1><question>q</question></context> Done.") ==
        "<context><info_1>a</info_1><question>q</question></context>");
}

TEST_CASE("extract_context_region removes think blocks first") {
  CHECK(extract_context_region("<think>plan...</think><context>x</context>") ==
        "<context>x</context>");
  CHECK(strip_think_blocks("a<think>b</think>c<think>d</think>e") == "ace");
  // An unterminated think block is not eaten.
  CHECK(strip_think_blocks("a<think>b") == "a<think>b");
}

TEST_CASE("extract_context_region falls back to the full text") {
  CHECK(extract_context_region("no tags here") == "no tags here");
  CHECK(extract_context_region("") == "");
}

TEST_CASE("extract_context_region handles an unterminated root") {
  CHECK(extract_context_region("x<context><info_1>a</info_1>") == "<context><info_1>a</info_1>");
}

TEST_CASE("extract_context_region is idempotent") {
  const std::string inputs[] = {
      "Sure! <context><info_1>a</info_1><question>q</question></context> Done.",
      "<think>t</think>prose only",
      "x<context>unclosed",
      "</context>before<context>a</context>",
      "",
  };
  for (const auto& input : inputs) {
    auto once = extract_context_region(input);
    CHECK(extract_context_region(once) == once);
  }
}

TEST_CASE("validate_strict accepts the apple/pear block") {
  auto report = validate_strict(kApplePearXml);
  CHECK(report.valid);
  CHECK(report.violations.empty());
}

TEST_CASE("validate_strict flags non-consecutive indices") {
  auto report = validate_strict("<context><info_2>x</info_2><question>q</question></context>");
  CHECK(!report.valid);
  CHECK(report.has(Violation::NonConsecutiveIndex));
}

TEST_CASE("validate_strict on empty input reports MissingRoot") {
  auto report = validate_strict("");
  CHECK(!report.valid);
  CHECK(report.has(Violation::MissingRoot));
}

TEST_CASE("validate_strict named violation cases") {
  struct Case {
    const char* raw;
    Violation expected;
  };
  const Case cases[] = {
      {"<info_1>a</info_1><question>q</question>", Violation::MissingRoot},
      {"<context><info_1>a</info_1><info_3>b</info_3><question>q</question></context>",
       Violation::NonConsecutiveIndex},
      {"<context><info_1>a</info_1><question>q</question><question>r</question></context>",
       Violation::DuplicateQuestion},
      {"<context><info_1>a<question>q</question></context>", Violation::UnclosedTag},
      {"<context><info_1>a</info_1><question>q</question>", Violation::UnclosedTag},
      {"<context><info_1>a</info_1></context>", Violation::MissingQuestion},
      {"<context><question>q</question></context>", Violation::MissingInfo},
      {"<context><info_1></info_1><question>q</question></context>", Violation::EmptyInfo},
      {"<context><info_1>a</info_1><question> </question></context>", Violation::EmptyQuestion},
      {"<context><info_1 lang=\"en\">a</info_1><question>q</question></context>",
       Violation::MalformedTag},
      {"<context><note>a</note><info_1>b</info_1><question>q</question></context>",
       Violation::UnexpectedElement},
      {"<context>chatter<info_1>a</info_1><question>q</question></context>",
       Violation::UnexpectedText},
      {"<context><info_1>a</info_1><question>q</question></context><context></context>",
       Violation::MultipleRoots},
  };
  for (const auto& c : cases) {
    CAPTURE(c.raw);
    auto report = validate_strict(c.raw);
    CHECK(!report.valid);
    CHECK(report.has(c.expected));
  }
}

TEST_CASE("validate_strict tolerates whitespace and outside chatter") {
  CHECK(validate_strict("Sure!\n" + std::string(kApplePearXml) + "\nDone.").valid);
  CHECK(validate_strict("<context>\n\n  <info_1> a </info_1>\n<question>q</question></context>")
            .valid);
}

TEST_CASE("validate_strict treats math comparisons as text, not tags") {
  auto report = validate_strict(
      "<context><info_1>holds for x < 10 and y > 2</info_1><question>q</question></context>");
  CHECK(report.valid);
}

TEST_CASE("strict parse returns the exact apple/pear block") {
  auto block = parse_context(kApplePearXml);
  REQUIRE(block.infos.size() == 2);
  CHECK(block.infos[0] == InfoEntry{1, "Price per apple: $2"});
  CHECK(block.infos[1] == InfoEntry{2, "Price per pear: 1.5x price per apple"});
  CHECK(block.question == "Total cost of 2 apples and 2 pears");
}

TEST_CASE("strict parse throws on invalid input") {
  CHECK_THROWS_AS(parse_context("<context><info_2>x</info_2></context>", ParseMode::Strict),
                  UnparseableContext);
}

TEST_CASE("lenient parse renumbers salvaged entries in document order") {
  auto block = parse_context("<context><info_1>a</info_1><info_3>b</info_3>"
                             "<question>q</question></context>",
                             ParseMode::Lenient);
  REQUIRE(block.infos.size() == 2);
  CHECK(block.infos[0] == InfoEntry{1, "a"});
  CHECK(block.infos[1] == InfoEntry{2, "b"});
  CHECK(block.question == "q");
}

TEST_CASE("lenient parse salvages from tag soup") {
  // Unclosed spans run to the next recognized tag or to the end of input.
  auto block = parse_context("blah <info_7>seven picked up <question>why?", ParseMode::Lenient);
  REQUIRE(block.infos.size() == 1);
  CHECK(block.infos[0] == InfoEntry{1, "seven picked up"});
  CHECK(block.question == "why?");

  // Salvage may come up question-less; such a block is usable but not valid.
  auto partial = parse_context("<info_2>only fact</info_2>", ParseMode::Lenient);
  CHECK(partial.infos.size() == 1);
  CHECK(partial.question.empty());
  CHECK(!partial.well_formed());
}

TEST_CASE("lenient parse throws UnparseableContext on plain prose") {
  CHECK_THROWS_AS(parse_context("plain prose, no tags", ParseMode::Lenient), UnparseableContext);
}

TEST_CASE("render XmlLike reproduces the reference listing byte for byte") {
  CHECK(render_context(apple_pear_block(), ContextFormat::XmlLike) == kApplePearXml);
}

TEST_CASE("render EnumeratedList") {
  CHECK(render_context(apple_pear_block(), ContextFormat::EnumeratedList) ==
        "Context:\n"
        "info_1: Price per apple: $2\n"
        "info_2: Price per pear: 1.5x price per apple\n"
        "question: Total cost of 2 apples and 2 pears");
}

TEST_CASE("render UnnumberedList") {
  CHECK(render_context(apple_pear_block(), ContextFormat::UnnumberedList) ==
        "**Information**\n"
        "- Price per apple: $2\n"
        "- Price per pear: 1.5x price per apple\n"
        "\n"
        "**Question**\n"
        "Total cost of 2 apples and 2 pears");
}

TEST_CASE("render Concatenated") {
  CHECK(render_context(apple_pear_block(), ContextFormat::Concatenated) ==
        "Price per apple: $2. Price per pear: 1.5x price per apple. "
        "Question: Total cost of 2 apples and 2 pears");
}

TEST_CASE("render rejects blocks violating invariants") {
  ContextBlock bad{{{2, "x"}}, "q"};
  CHECK_THROWS_AS(render_context(bad, ContextFormat::XmlLike), InvalidBlock);
  ContextBlock empty_question{{{1, "x"}}, ""};
  CHECK_THROWS_AS(render_context(empty_question, ContextFormat::Concatenated), InvalidBlock);
}

namespace {

// Texts that survive an XML-ish round trip: no angle brackets, trimmed.
std::string random_text(std::mt19937& rng) {
  static const std::string inner = "abcdefghijklmnopqrstuvwxyz0123456789 $\\{}().,:%+-=*/";
  static const std::string edge = "abcdefghijklmnopqrstuvwxyz0123456789$\\{}().,:%+-=*/";
  std::uniform_int_distribution<int> len(1, 40);
  int n = len(rng);
  std::string text;
  std::uniform_int_distribution<size_t> pick_edge(0, edge.size() - 1);
  std::uniform_int_distribution<size_t> pick_inner(0, inner.size() - 1);
  for (int i = 0; i < n; ++i) {
    bool at_edge = (i == 0 || i == n - 1);
    text.push_back(at_edge ? edge[pick_edge(rng)] : inner[pick_inner(rng)]);
  }
  return text;
}

ContextBlock random_block(std::mt19937& rng) {
  std::uniform_int_distribution<int> count(1, 6);
  ContextBlock block;
  int n = count(rng);
  for (int i = 1; i <= n; ++i) block.infos.push_back({i, random_text(rng)});
  block.question = random_text(rng);
  return block;
}

}  // namespace

TEST_CASE("property: XmlLike round trip and validity") {
  std::mt19937 rng(20250810);
  for (int iter = 0; iter < 300; ++iter) {
    ContextBlock block = random_block(rng);
    std::string rendered = render_context(block, ContextFormat::XmlLike);
    CHECK(validate_strict(rendered).valid);
    ContextBlock back = parse_context(rendered, ParseMode::Strict);
    CHECK(back == block);
    // Region extraction leaves a pure block alone.
    CHECK(extract_context_region(rendered) == rendered);
  }
}

TEST_CASE("property: lenient parse never invents info entries") {
  std::mt19937 rng(7);
  const std::string fragments[] = {
      "<context>", "</context>", "<info_", "1>", "2>", "3>", "</info_1>", "</info_9>",
      "<question>", "</question>", "text ", "<think>", "</think>", ">", "<", "  ",
      "<info_1>", "<info_2>", "q?", "$2 ",
  };
  std::uniform_int_distribution<size_t> pick(0, std::size(fragments) - 1);
  std::uniform_int_distribution<int> parts(1, 24);
  for (int iter = 0; iter < 2000; ++iter) {
    std::string soup;
    int n = parts(rng);
    for (int i = 0; i < n; ++i) soup += fragments[pick(rng)];
    size_t open_tags = 0;
    for (size_t pos = soup.find("<info_"); pos != std::string::npos;
         pos = soup.find("<info_", pos + 1)) {
      ++open_tags;
    }
    try {
      ContextBlock block = parse_context(soup, ParseMode::Lenient);
      CHECK(block.infos.size() <= open_tags);
    } catch (const UnparseableContext&) {
      // acceptable outcome for soup
    }
  }
}

TEST_CASE("fuzz: arbitrary bytes up to 1 MiB do not fault") {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> byte(0, 255);
  auto run_all = [](const std::string& s) {
    auto report = validate_strict(s);
    CHECK(report.valid == report.violations.empty());
    try {
      (void)parse_context(s, ParseMode::Lenient);
    } catch (const UnparseableContext&) {
    }
    (void)extract_context_region(s);
  };
  // Many small random strings biased toward tag characters.
  const char biased[] = "<>/_abcinfoqueston0123 \t\n";
  std::uniform_int_distribution<size_t> pick(0, sizeof(biased) - 2);
  for (int iter = 0; iter < 500; ++iter) {
    std::uniform_int_distribution<int> len(0, 400);
    std::string s;
    int n = len(rng);
    for (int i = 0; i < n; ++i) {
      s.push_back(iter % 2 == 0 ? static_cast<char>(byte(rng)) : biased[pick(rng)]);
    }
    run_all(s);
  }
  // A few full-size buffers.
  for (int iter = 0; iter < 3; ++iter) {
    std::string s;
    s.reserve(1 << 20);
    for (int i = 0; i < (1 << 20); ++i) s.push_back(biased[pick(rng)]);
    run_all(s);
  }
}

TEST_CASE("context records round-trip through the line format") {
  fcot_test::TempDir dir;
  std::vector<ContextRecord> records;
  records.push_back(make_context_record("p1", kApplePearXml));
  records.push_back(make_context_record("p2", "<context><info_2>x</info_2></context>"));
  records.push_back(make_context_record("p3", "no tags at all"));
  records[2].extraction_tokens = 17;
  records[2].usage_estimated = true;

  CHECK(records[0].valid);
  CHECK(!records[1].valid);
  CHECK(records[1].violations == std::vector<std::string>{"NonConsecutiveIndex",
                                                          "MissingQuestion"});

  auto file = dir / "contexts.jsonl";
  write_context_file(file, records);
  auto back = read_context_file(file);
  REQUIRE(back.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(back[i].problem_id == records[i].problem_id);
    CHECK(back[i].raw_context == records[i].raw_context);
    CHECK(back[i].valid == records[i].valid);
    CHECK(back[i].violations == records[i].violations);
    CHECK(back[i].extraction_tokens == records[i].extraction_tokens);
    CHECK(back[i].usage_estimated == records[i].usage_estimated);
  }
}

TEST_SUITE_END();
