#pragma once

#include <stdexcept>
#include <string>

namespace fcot {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// context
struct UnparseableContext : Error { using Error::Error; };
struct InvalidBlock : Error { using Error::Error; };

// prompts
struct MissingBinding : Error { using Error::Error; };
struct UnknownPlaceholder : Error { using Error::Error; };
struct UnknownMode : Error { using Error::Error; };
struct CatalogError : Error { using Error::Error; };

// gateway
struct BackendUnavailable : Error { using Error::Error; };
struct ContextLengthExceeded : Error { using Error::Error; };
struct MalformedBackendReply : Error { using Error::Error; };
// Retryable failure (connection refused, 429, 5xx). The gateway converts an
// exhausted retry budget into BackendUnavailable; callers normally never see
// this one.
struct TransientBackendError : Error { using Error::Error; };
// Non-retryable rejection (bad auth, unknown model, ...). Fails fast.
struct BackendRequestRejected : Error { using Error::Error; };

// dataset
struct SchemaViolation : Error { using Error::Error; };
struct DuplicateId : Error { using Error::Error; };
struct MissingContext : Error { using Error::Error; };

// evaluator
struct KTooLarge : Error { using Error::Error; };

// trace analysis
struct JudgeFormatError : Error { using Error::Error; };
struct ScoreOutOfRange : Error { using Error::Error; };
struct AnnotationFormatError : Error { using Error::Error; };
struct IdMismatch : Error { using Error::Error; };

// orchestrator
struct ManifestInvalid : Error { using Error::Error; };
struct CorruptRunState : Error { using Error::Error; };

// report
struct MissingSummary : Error { using Error::Error; };

}  // namespace fcot
