#include "fcot/prompts.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fcot/errors.hpp"
#include "fcot/util.hpp"
#include "test_support.hpp"

using namespace fcot;

namespace {

const PromptCatalog& catalog() {
  static PromptCatalog instance = PromptCatalog::load(PromptCatalog::default_dir());
  return instance;
}

}  // namespace

TEST_SUITE_BEGIN("prompts");

TEST_CASE("catalog loads all templates with verified digests") {
  for (PromptId id : kAllPromptIds) {
    const PromptTemplate& tmpl = catalog().get(id);
    CHECK(!tmpl.body.empty());
    CHECK(tmpl.sha256 == sha256_hex(tmpl.body));
    CHECK(!tmpl.ref.empty());
  }
}

TEST_CASE("catalog refuses a tampered prompt body") {
  fcot_test::TempDir dir;
  std::filesystem::copy(PromptCatalog::default_dir(), dir.path(),
                        std::filesystem::copy_options::recursive);
  {
    std::ofstream out(dir / "fcot_default.txt", std::ios::app);
    out << " tampered";
  }
  CHECK_THROWS_AS(PromptCatalog::load(dir.path()), CatalogError);
}

TEST_CASE("placeholder sets match the slot tokens in each body") {
  auto has = [&](PromptId id, const char* name) {
    return catalog().get(id).placeholders.count(name) > 0;
  };
  CHECK(has(PromptId::ExtractNoIcl, "ORIGINAL QUESTION"));
  CHECK(!has(PromptId::ExtractNoIcl, "INSERTED CONTEXT"));
  CHECK(has(PromptId::FcotDefault, "INSERTED CONTEXT"));
  CHECK(!has(PromptId::FcotDefault, "ORIGINAL QUESTION"));
  CHECK(has(PromptId::FcotContextPlusQuestion, "ORIGINAL QUESTION"));
  CHECK(has(PromptId::FcotContextPlusQuestion, "INSERTED CONTEXT"));
  CHECK(has(PromptId::OverthinkingJudge, "ORIGINAL QUESTION"));
  CHECK(has(PromptId::OverthinkingJudge, "MODEL GENERATION"));
  CHECK(has(PromptId::SentenceAnnotator, "MODEL GENERATION"));
}

TEST_CASE("render substitutes slots verbatim and leaves no slot tokens") {
  std::string inner =
      "<info_1>Price per apple: $2</info_1>\n<info_2>Price per pear: 1.5x price per "
      "apple</info_2>\n<question>Total cost of 2 apples and 2 pears</question>";
  std::string rendered = catalog().render(PromptId::FcotDefault, {{"INSERTED CONTEXT", inner}});
  CHECK(contains(rendered, "Use ONLY the facts inside <context>"));
  CHECK(contains(rendered, inner));
  CHECK(!contains(rendered, kSlotInsertedContext));
  CHECK(!contains(rendered, kSlotOriginalQuestion));
  CHECK(!contains(rendered, kSlotModelGeneration));
}

TEST_CASE("zero-shot prompt ends with the boxed-answer instruction") {
  std::string rendered = catalog().render(PromptId::ZeroCotDefault, {{"ORIGINAL QUESTION", "Q"}});
  CHECK(rendered.rfind("put your final answer within \\boxed{}.") ==
        rendered.size() - std::string("put your final answer within \\boxed{}.").size());
  CHECK(rendered.rfind("Q", 0) == 0);
}

TEST_CASE("render reports missing and unknown bindings") {
  CHECK_THROWS_AS(catalog().render(PromptId::FcotDefault, {}), MissingBinding);
  CHECK_THROWS_AS(catalog().render(PromptId::FcotDefault,
                                   {{"INSERTED CONTEXT", "x"}, {"MODEL GENERATION", "y"}}),
                  UnknownPlaceholder);
}

TEST_CASE("render is injective in the question binding") {
  auto a = catalog().render(PromptId::ZeroCotDefault, {{"ORIGINAL QUESTION", "What is 1+1?"}});
  auto b = catalog().render(PromptId::ZeroCotDefault, {{"ORIGINAL QUESTION", "What is 2+2?"}});
  CHECK(a != b);
}

TEST_CASE("signature anchor phrases") {
  auto body = [&](PromptId id) -> const std::string& { return catalog().get(id).body; };
  CHECK(contains(body(PromptId::ExtractNoIcl), "Please extract all critical information"));
  CHECK(contains(body(PromptId::ExtractIclGsm), "Three of the women at the cocktail party"));
  CHECK(contains(body(PromptId::ExtractIclMath), "A rectangular band formation"));
  CHECK(contains(body(PromptId::PlanAndSolve), "devise a complete plan"));
  CHECK(contains(body(PromptId::CoRe), "list all the known conditions"));
  CHECK(contains(body(PromptId::ZeroCotAdjusted),
                 "Use ONLY the facts provided by the question"));
  CHECK(contains(body(PromptId::FcotShort), "Use ONLY the facts inside <context>"));
  CHECK(contains(body(PromptId::FcotContextPlusQuestion),
                 "Refer to the original question ONLY if"));
  CHECK(contains(body(PromptId::FcotVariation3), "structured information below"));
  CHECK(contains(body(PromptId::OverthinkingJudge), "You are an AI judge focused on detecting"));
  CHECK(contains(body(PromptId::SentenceAnnotator), "Return the result as a JSON list"));
}

TEST_CASE("template_for_mode bindings") {
  auto mode = [](const char* s) { return PipelineMode::parse(s); };
  DatasetId math = DatasetId::parse("math500");
  DatasetId gsm = DatasetId::parse("gsm-hard");
  DatasetId svamp = DatasetId::parse("svamp");

  auto self = template_for_mode(mode("fcot-self"), math);
  CHECK(self.extraction == PromptId::ExtractNoIcl);
  CHECK(self.reasoning == PromptId::FcotDefault);

  auto pre_math = template_for_mode(mode("fcot-precomputed"), math);
  CHECK(pre_math.extraction == PromptId::ExtractIclMath);
  CHECK(pre_math.reasoning == PromptId::FcotDefault);

  auto pre_gsm = template_for_mode(mode("fcot-precomputed"), gsm);
  CHECK(pre_gsm.extraction == PromptId::ExtractIclGsm);
  auto pre_svamp = template_for_mode(mode("fcot-precomputed"), svamp);
  CHECK(pre_svamp.extraction == PromptId::ExtractIclGsm);

  auto zero = template_for_mode(mode("zerocot"), math);
  CHECK(!zero.extraction.has_value());
  CHECK(zero.reasoning == PromptId::ZeroCotDefault);

  CHECK(template_for_mode(mode("ps"), math).reasoning == PromptId::PlanAndSolve);
  CHECK(template_for_mode(mode("core"), math).reasoning == PromptId::CoRe);
  CHECK(template_for_mode(mode("fcot-short"), math).reasoning == PromptId::FcotShort);
  CHECK(template_for_mode(mode("fcot-context-plus-question"), math).reasoning ==
        PromptId::FcotContextPlusQuestion);
  CHECK(template_for_mode(mode("fcot-format-enumerated"), math).reasoning ==
        PromptId::FcotVariation1);
  CHECK(template_for_mode(mode("fcot-format-unnumbered"), math).reasoning ==
        PromptId::FcotVariation2);
  CHECK(template_for_mode(mode("fcot-format-concatenated"), math).reasoning ==
        PromptId::FcotVariation3);
  CHECK(template_for_mode(mode("fcot-format-xml"), math).reasoning == PromptId::FcotDefault);
  CHECK(template_for_mode(mode("fcot-hybrid"), math).extraction == PromptId::ExtractNoIcl);
}

TEST_CASE("pipeline mode parse/to_string round trip") {
  const char* names[] = {"fcot-precomputed", "fcot-self", "fcot-hybrid", "zerocot",
                         "zerocot-adjusted", "ps", "core", "fcot-short",
                         "fcot-context-plus-question", "fcot-format-enumerated",
                         "fcot-format-unnumbered", "fcot-format-concatenated"};
  for (const char* name : names) {
    CHECK(PipelineMode::parse(name).to_string() == name);
  }
  CHECK_THROWS_AS(PipelineMode::parse("fcot-magic"), UnknownMode);
}

TEST_CASE("mode predicates") {
  CHECK(PipelineMode::parse("fcot-self").counts_extraction_tokens());
  CHECK(PipelineMode::parse("fcot-hybrid").counts_extraction_tokens());
  CHECK(!PipelineMode::parse("fcot-precomputed").counts_extraction_tokens());
  CHECK(!PipelineMode::parse("zerocot").uses_context());
  CHECK(PipelineMode::parse("fcot-precomputed").requires_context_file());
  CHECK(PipelineMode::parse("fcot-short").requires_context_file());
  CHECK(!PipelineMode::parse("fcot-self").requires_context_file());
  CHECK(PipelineMode::parse("zerocot").includes_original_question());
  CHECK(PipelineMode::parse("fcot-context-plus-question").includes_original_question());
  CHECK(!PipelineMode::parse("fcot-self").includes_original_question());
}

TEST_SUITE_END();
