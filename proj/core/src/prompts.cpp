#include "fcot/prompts.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>

#include "fcot/errors.hpp"
#include "fcot/util.hpp"

namespace fcot {

namespace {

using json = nlohmann::ordered_json;

constexpr std::string_view kSlots[] = {kSlotOriginalQuestion, kSlotInsertedContext,
                                       kSlotModelGeneration};

std::string slot_name(std::string_view slot) {
  return std::string(slot.substr(1, slot.size() - 2));
}

std::string slot_token(const std::string& name) { return "[" + name + "]"; }

}  // namespace

const char* to_string(PromptId id) {
  switch (id) {
    case PromptId::ExtractNoIcl: return "extract-no-icl";
    case PromptId::ExtractIclGsm: return "extract-icl-gsm";
    case PromptId::ExtractIclMath: return "extract-icl-math";
    case PromptId::ZeroCotDefault: return "zerocot-default";
    case PromptId::ZeroCotAdjusted: return "zerocot-adjusted";
    case PromptId::PlanAndSolve: return "plan-and-solve";
    case PromptId::CoRe: return "core";
    case PromptId::FcotDefault: return "fcot-default";
    case PromptId::FcotShort: return "fcot-short";
    case PromptId::FcotVariation1: return "fcot-variation1";
    case PromptId::FcotVariation2: return "fcot-variation2";
    case PromptId::FcotVariation3: return "fcot-variation3";
    case PromptId::FcotContextPlusQuestion: return "fcot-context-plus-question";
    case PromptId::OverthinkingJudge: return "overthinking-judge";
    case PromptId::SentenceAnnotator: return "sentence-annotator";
  }
  return "?";
}

std::optional<PromptId> prompt_id_from_string(std::string_view s) {
  for (PromptId id : kAllPromptIds) {
    if (s == to_string(id)) return id;
  }
  return std::nullopt;
}

std::filesystem::path PromptCatalog::default_dir() {
  if (const char* env = std::getenv("FCOT_PROMPTS_DIR"); env && *env) {
    return env;
  }
#ifdef FCOT_PROMPTS_SOURCE_DIR
  return FCOT_PROMPTS_SOURCE_DIR;
#else
  return "prompts";
#endif
}

PromptCatalog PromptCatalog::load(const std::filesystem::path& dir) {
  PromptCatalog catalog;
  catalog.dir_ = dir;
  auto manifest_path = dir / "manifest.json";
  json manifest = json::parse(read_file(manifest_path), nullptr, false);
  if (manifest.is_discarded() || !manifest.contains("prompts")) {
    throw CatalogError("unreadable prompt manifest: " + manifest_path.string());
  }
  for (const auto& entry : manifest["prompts"]) {
    std::string id_str = entry.at("id").get<std::string>();
    auto id = prompt_id_from_string(id_str);
    if (!id) throw CatalogError("unknown prompt id in manifest: " + id_str);

    PromptTemplate tmpl;
    tmpl.id = *id;
    tmpl.file = entry.at("file").get<std::string>();
    tmpl.ref = entry.value("ref", "");
    tmpl.notes = entry.value("notes", "");
    tmpl.body = read_file(dir / tmpl.file);
    tmpl.sha256 = sha256_hex(tmpl.body);
    std::string expected = entry.at("sha256").get<std::string>();
    if (tmpl.sha256 != expected) {
      throw CatalogError("prompt body digest mismatch for '" + id_str + "' (" + tmpl.file +
                         "): expected " + expected + ", got " + tmpl.sha256);
    }
    for (std::string_view slot : kSlots) {
      if (contains(tmpl.body, slot)) tmpl.placeholders.insert(slot_name(slot));
    }
    catalog.templates_[*id] = std::move(tmpl);
  }
  for (PromptId id : kAllPromptIds) {
    if (!catalog.templates_.count(id)) {
      throw CatalogError(std::string("manifest lacks prompt '") + to_string(id) + "'");
    }
  }
  return catalog;
}

const PromptTemplate& PromptCatalog::get(PromptId id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) {
    throw CatalogError(std::string("prompt not loaded: ") + to_string(id));
  }
  return it->second;
}

std::string PromptCatalog::render(PromptId id,
                                  const std::map<std::string, std::string>& bindings) const {
  const PromptTemplate& tmpl = get(id);
  for (const auto& [name, value] : bindings) {
    (void)value;
    if (!tmpl.placeholders.count(name)) {
      throw UnknownPlaceholder("binding '" + name + "' names no slot of template '" +
                               to_string(id) + "'");
    }
  }
  for (const auto& name : tmpl.placeholders) {
    if (!bindings.count(name)) {
      throw MissingBinding("template '" + std::string(to_string(id)) + "' needs a binding for '" +
                           name + "'");
    }
  }
  // Single pass over the original body: values are inserted verbatim and
  // never re-scanned for slots.
  std::string out;
  out.reserve(tmpl.body.size());
  size_t pos = 0;
  while (pos < tmpl.body.size()) {
    size_t best = std::string::npos;
    std::string_view best_slot;
    for (std::string_view slot : kSlots) {
      size_t hit = tmpl.body.find(slot, pos);
      if (hit < best) {
        best = hit;
        best_slot = slot;
      }
    }
    if (best == std::string::npos) {
      out.append(tmpl.body, pos, std::string::npos);
      break;
    }
    out.append(tmpl.body, pos, best - pos);
    out += bindings.at(slot_name(best_slot));
    pos = best + best_slot.size();
  }
  return out;
}

ModeTemplates template_for_mode(const PipelineMode& mode, const DatasetId& dataset) {
  auto icl_extractor = [&]() -> PromptId {
    if (dataset.kind == DatasetKind::Custom) return PromptId::ExtractNoIcl;
    return dataset.gsm_style() ? PromptId::ExtractIclGsm : PromptId::ExtractIclMath;
  };
  switch (mode.kind) {
    case ModeKind::FcotPrecomputed:
      return {icl_extractor(), PromptId::FcotDefault};
    case ModeKind::FcotSelf:
      return {PromptId::ExtractNoIcl, PromptId::FcotDefault};
    case ModeKind::FcotHybrid:
      return {PromptId::ExtractNoIcl, PromptId::FcotDefault};
    case ModeKind::ZeroCot:
      return {std::nullopt, PromptId::ZeroCotDefault};
    case ModeKind::ZeroCotAdjusted:
      return {std::nullopt, PromptId::ZeroCotAdjusted};
    case ModeKind::PlanAndSolve:
      return {std::nullopt, PromptId::PlanAndSolve};
    case ModeKind::CoRe:
      return {std::nullopt, PromptId::CoRe};
    case ModeKind::FcotShort:
      return {icl_extractor(), PromptId::FcotShort};
    case ModeKind::FcotContextPlusQuestion:
      return {icl_extractor(), PromptId::FcotContextPlusQuestion};
    case ModeKind::FcotFormat:
      switch (mode.format) {
        case ContextFormat::XmlLike: return {icl_extractor(), PromptId::FcotDefault};
        case ContextFormat::EnumeratedList: return {icl_extractor(), PromptId::FcotVariation1};
        case ContextFormat::UnnumberedList: return {icl_extractor(), PromptId::FcotVariation2};
        case ContextFormat::Concatenated: return {icl_extractor(), PromptId::FcotVariation3};
      }
      break;
  }
  throw UnknownMode("template_for_mode: unhandled mode " + mode.to_string());
}

}  // namespace fcot
