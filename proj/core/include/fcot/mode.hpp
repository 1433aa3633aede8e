#pragma once

#include <string>
#include <string_view>

#include "fcot/context.hpp"

namespace fcot {

enum class ModeKind {
  FcotPrecomputed,          // context supplied via a context file
  FcotSelf,                 // the reasoner extracts its own context first
  FcotHybrid,               // a separate model extracts, the reasoner reasons
  ZeroCot,
  ZeroCotAdjusted,          // the "use only the facts" variant of 0-CoT
  PlanAndSolve,
  CoRe,
  FcotShort,                // minimal context-reasoning instruction
  FcotContextPlusQuestion,  // context plus the original question
  FcotFormat,               // context rendered in an alternative format
};

struct PipelineMode {
  ModeKind kind = ModeKind::ZeroCot;
  std::string extractor_model;                    // FcotHybrid only
  ContextFormat format = ContextFormat::XmlLike;  // FcotFormat only

  // Any member of the F-CoT family, i.e. the reasoning prompt carries a
  // structured context.
  bool uses_context() const;
  // The run performs its own extraction stage.
  bool runs_extraction() const;
  // The run consumes a pre-computed context file.
  bool requires_context_file() const;
  // Extraction tokens count toward the per-question token total.
  bool counts_extraction_tokens() const;
  // The reasoning prompt intentionally contains the original question.
  bool includes_original_question() const;

  std::string to_string() const;
  static PipelineMode parse(std::string_view s);  // throws UnknownMode

  friend bool operator==(const PipelineMode&, const PipelineMode&) = default;
};

}  // namespace fcot
