#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "fcot/dataset.hpp"
#include "fcot/mode.hpp"

namespace fcot {

enum class PromptId {
  ExtractNoIcl,
  ExtractIclGsm,
  ExtractIclMath,
  ZeroCotDefault,
  ZeroCotAdjusted,
  PlanAndSolve,
  CoRe,
  FcotDefault,
  FcotShort,
  FcotVariation1,
  FcotVariation2,
  FcotVariation3,
  FcotContextPlusQuestion,
  OverthinkingJudge,
  SentenceAnnotator,
};

inline constexpr std::array<PromptId, 15> kAllPromptIds = {
    PromptId::ExtractNoIcl,     PromptId::ExtractIclGsm,
    PromptId::ExtractIclMath,   PromptId::ZeroCotDefault,
    PromptId::ZeroCotAdjusted,  PromptId::PlanAndSolve,
    PromptId::CoRe,             PromptId::FcotDefault,
    PromptId::FcotShort,        PromptId::FcotVariation1,
    PromptId::FcotVariation2,   PromptId::FcotVariation3,
    PromptId::FcotContextPlusQuestion, PromptId::OverthinkingJudge,
    PromptId::SentenceAnnotator,
};

const char* to_string(PromptId id);
std::optional<PromptId> prompt_id_from_string(std::string_view s);

// The only slot tokens templates may carry. Bindings are keyed by the bare
// name, e.g. {"ORIGINAL QUESTION": "..."}.
inline constexpr std::string_view kSlotOriginalQuestion = "[ORIGINAL QUESTION]";
inline constexpr std::string_view kSlotInsertedContext = "[INSERTED CONTEXT]";
inline constexpr std::string_view kSlotModelGeneration = "[MODEL GENERATION]";

struct PromptTemplate {
  PromptId id{};
  std::string body;                     // exact file bytes
  std::set<std::string> placeholders;   // names found in the body
  std::string file;
  std::string ref;      // catalog listing reference from the manifest
  std::string sha256;   // digest of body, checked against the manifest
  std::string notes;
};

// Immutable after load; rendering is pure, so a catalog can be shared across
// threads freely.
class PromptCatalog {
 public:
  // Reads manifest.json plus every referenced file and verifies each body
  // digest. Throws CatalogError on a missing file, missing id, or digest
  // mismatch.
  static PromptCatalog load(const std::filesystem::path& dir);

  // Resolution order: explicit argument (done by callers), then the
  // FCOT_PROMPTS_DIR environment variable, then the directory compiled in
  // from the source tree.
  static std::filesystem::path default_dir();

  const PromptTemplate& get(PromptId id) const;

  // Substitutes every slot occurrence with its binding, nothing else.
  // Throws MissingBinding when a template slot lacks a binding and
  // UnknownPlaceholder when a binding names no slot of this template.
  std::string render(PromptId id, const std::map<std::string, std::string>& bindings) const;

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::map<PromptId, PromptTemplate> templates_;
};

struct ModeTemplates {
  std::optional<PromptId> extraction;
  PromptId reasoning{};
};

// Deterministic mode-to-prompt binding. Pre-computed extraction prompts are
// dataset-flavored: gsm-style datasets take the GSM in-context examples,
// competition-style ones the MATH examples, custom datasets none.
ModeTemplates template_for_mode(const PipelineMode& mode, const DatasetId& dataset = {});

}  // namespace fcot
