#include "fcot/mode.hpp"

#include "fcot/errors.hpp"

namespace fcot {


bool PipelineMode::uses_context() const {
  switch (kind) {
    case ModeKind::FcotPrecomputed:
    case ModeKind::FcotSelf:
    case ModeKind::FcotHybrid:
    case ModeKind::FcotShort:
    case ModeKind::FcotContextPlusQuestion:
    case ModeKind::FcotFormat:
      return true;
    default:
      return false;
  }
}

bool PipelineMode::runs_extraction() const {
  return kind == ModeKind::FcotSelf || kind == ModeKind::FcotHybrid;
}

bool PipelineMode::requires_context_file() const {
  return uses_context() && !runs_extraction();
}

bool PipelineMode::counts_extraction_tokens() const { return runs_extraction(); }

bool PipelineMode::includes_original_question() const {
  return !uses_context() || kind == ModeKind::FcotContextPlusQuestion;
}

std::string PipelineMode::to_string() const {
  switch (kind) {
    case ModeKind::FcotPrecomputed: return "fcot-precomputed";
    case ModeKind::FcotSelf: return "fcot-self";
    case ModeKind::FcotHybrid: return "fcot-hybrid";
    case ModeKind::ZeroCot: return "zerocot";
    case ModeKind::ZeroCotAdjusted: return "zerocot-adjusted";
    case ModeKind::PlanAndSolve: return "ps";
    case ModeKind::CoRe: return "core";
    case ModeKind::FcotShort: return "fcot-short";
    case ModeKind::FcotContextPlusQuestion: return "fcot-context-plus-question";
    case ModeKind::FcotFormat:
      return std::string("fcot-format-") + fcot::to_string(format);
  }
  return "?";
}

PipelineMode PipelineMode::parse(std::string_view s) {
  PipelineMode mode;
  if (s == "fcot-precomputed") {
    mode.kind = ModeKind::FcotPrecomputed;
  } else if (s == "fcot-self") {
    mode.kind = ModeKind::FcotSelf;
  } else if (s == "fcot-hybrid") {
    mode.kind = ModeKind::FcotHybrid;
  } else if (s == "zerocot" || s == "0cot" || s == "zero-cot") {
    mode.kind = ModeKind::ZeroCot;
  } else if (s == "zerocot-adjusted") {
    mode.kind = ModeKind::ZeroCotAdjusted;
  } else if (s == "ps" || s == "plan-and-solve") {
    mode.kind = ModeKind::PlanAndSolve;
  } else if (s == "core") {
    mode.kind = ModeKind::CoRe;
  } else if (s == "fcot-short") {
    mode.kind = ModeKind::FcotShort;
  } else if (s == "fcot-context-plus-question") {
    mode.kind = ModeKind::FcotContextPlusQuestion;
  } else if (s.rfind("fcot-format-", 0) == 0) {
    auto format = context_format_from_string(s.substr(12));
    if (!format) throw UnknownMode("unknown context format in mode: " + std::string(s));
    mode.kind = ModeKind::FcotFormat;
    mode.format = *format;
  } else {
    throw UnknownMode("unknown pipeline mode: " + std::string(s));
  }
  return mode;
}

}  // namespace fcot
