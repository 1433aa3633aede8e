#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fcot {

// One enumerated fact of a structured context, the k of <info_k>.
struct InfoEntry {
  int index = 0;
  std::string text;
  friend bool operator==(const InfoEntry&, const InfoEntry&) = default;
};

// Structured context: ordered facts plus a single question.
struct ContextBlock {
  std::vector<InfoEntry> infos;
  std::string question;

  // Indices exactly 1..n in order, all texts and the question non-empty.
  bool well_formed() const;

  friend bool operator==(const ContextBlock&, const ContextBlock&) = default;
};

enum class ContextFormat { XmlLike, EnumeratedList, UnnumberedList, Concatenated };

const char* to_string(ContextFormat format);
std::optional<ContextFormat> context_format_from_string(std::string_view s);

enum class Violation {
  MissingRoot,
  MultipleRoots,
  UnclosedTag,
  MalformedTag,
  UnexpectedElement,
  UnexpectedText,
  MissingInfo,
  NonConsecutiveIndex,
  EmptyInfo,
  MissingQuestion,
  DuplicateQuestion,
  EmptyQuestion,
};

const char* to_string(Violation v);
std::optional<Violation> violation_from_string(std::string_view s);

struct ValidationReport {
  bool valid = false;
  std::vector<Violation> violations;
  std::vector<std::string> details;  // parallel to violations

  bool has(Violation v) const;
};

// Removes every balanced <think>...</think> span. An unterminated <think> is
// left alone rather than eating the rest of the output.
std::string strip_think_blocks(std::string_view text);

// Think-strips, then cuts the substring from the first <context> through its
// matching </context> inclusive. Without context tags the think-stripped text
// comes back whole; with an unterminated <context> everything from the open
// tag onward is returned. Total and idempotent.
std::string extract_context_region(std::string_view model_output);

// Strict structural check: exactly one <context> root holding one or more
// <info_k> elements with indices consecutive from 1 in document order, each
// non-empty, and exactly one non-empty <question>. Tags are case-sensitive,
// attribute-free, and properly nested; whitespace between elements is fine,
// other content inside the root is not. Text outside the root is ignored.
ValidationReport validate_strict(std::string_view raw);

enum class ParseMode { Strict, Lenient };

// Strict mode requires validate_strict to hold and throws UnparseableContext
// (with the findings) otherwise. Lenient mode salvages whatever info/question
// spans it can recognize, keeps document order, renumbers indices 1..n, and
// throws UnparseableContext only when neither an info entry nor a question
// can be recovered. A lenient result may fail ContextBlock::well_formed().
ContextBlock parse_context(std::string_view raw, ParseMode mode = ParseMode::Strict);

// Renders the block in the requested format. Throws InvalidBlock when the
// block fails well_formed().
std::string render_context(const ContextBlock& block, ContextFormat format);

// The inner lines of the XmlLike form, without the surrounding <context>
// tags, for insertion into prompts that carry their own wrapper. Renders
// whatever entries/question are present; no invariant check.
std::string render_xml_inner(const ContextBlock& block);

// One line of a context file (line-delimited JSON).
struct ContextRecord {
  std::string problem_id;
  std::string raw_context;
  bool valid = false;
  std::vector<std::string> violations;
  // Extraction-stage bookkeeping; tokens < 0 means unknown (e.g. a context
  // file produced outside this tool).
  long long extraction_tokens = -1;
  bool usage_estimated = false;
  std::string error;  // non-empty when the extraction call failed
};

std::string context_record_to_json(const ContextRecord& record);
ContextRecord context_record_from_json(const std::string& line, int line_no);
std::vector<ContextRecord> read_context_file(const std::filesystem::path& file);
void write_context_file(const std::filesystem::path& file,
                        const std::vector<ContextRecord>& records);

// Validates a raw context region and fills valid/violations.
ContextRecord make_context_record(std::string problem_id, std::string raw_context);

}  // namespace fcot
