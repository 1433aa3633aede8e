#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fcot/mode.hpp"

namespace fcot {

// A final answer after normalization. `numeric` holds a reduced fraction
// ("p" or "p/q", q > 0) when the canonical form parses as a plain numeral,
// a/b, or \frac{a}{b}. raw == nullopt marks a missing boxed answer.
struct ExtractedAnswer {
  std::optional<std::string> raw;
  std::string canonical;
  std::optional<std::string> numeric;
  bool numeric_from_decimal = false;

  bool has_answer() const { return raw.has_value(); }
};

// Inner content of the LAST \boxed{...} in the text, brace-balanced.
// Missing or never-balancing braces yield the absent-answer value; callers
// score that as incorrect.
ExtractedAnswer extract_boxed(std::string_view text);

// Trims, strips enclosing $...$, drops \left/\right, rewrites \dfrac and
// \tfrac to \frac, collapses internal whitespace, removes thousands
// separators from pure numbers, then attempts an exact rational parse.
// Total; never throws.
ExtractedAnswer normalize_answer(std::string_view raw);

// Exact rational equality first; a relative tolerance of 1e-9 applies only
// when a decimal literal was involved; canonical string equality otherwise.
// No unit coercion: "0.05" != "5".
bool answers_equal(const ExtractedAnswer& pred, const ExtractedAnswer& gold);

// True iff any of the first k flags is true. Throws KTooLarge unless
// 1 <= k <= flags.size().
bool pass_at_k(const std::vector<bool>& flags, int k);

struct SampleOutcome {
  std::string problem_id;
  int sample_index = 0;
  bool correct = false;
  long long extraction_tokens = 0;
  long long reasoning_tokens = 0;
  bool usage_estimated = false;
  std::string boxed_raw;  // empty when no boxed answer was found
};

// Per-question accounting: self-generated and hybrid F-CoT pay for their
// extraction stage; pre-computed context and the baselines count reasoning
// tokens only.
long long token_total(const SampleOutcome& outcome, const PipelineMode& mode);

std::string sample_outcome_to_json(const SampleOutcome& outcome);
SampleOutcome sample_outcome_from_json(const std::string& line, int line_no);
std::vector<SampleOutcome> read_outcome_file(const std::filesystem::path& file);
void write_outcome_file(const std::filesystem::path& file,
                        const std::vector<SampleOutcome>& outcomes);

}  // namespace fcot
