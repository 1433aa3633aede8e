#include "fcot/evaluator.hpp"

#include <nlohmann/json.hpp>

#include <boost/multiprecision/cpp_int.hpp>

#include <regex>

#include "fcot/errors.hpp"
#include "fcot/util.hpp"

namespace fcot {

namespace {

using json = nlohmann::ordered_json;
using boost::multiprecision::cpp_int;

struct Rational {
  cpp_int num;
  cpp_int den;  // > 0
};

Rational reduce(cpp_int num, cpp_int den) {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  cpp_int g = boost::multiprecision::gcd(num < 0 ? cpp_int(-num) : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return {std::move(num), std::move(den)};
}

std::string rational_to_string(const Rational& r) {
  if (r.den == 1) return r.num.str();
  return r.num.str() + "/" + r.den.str();
}

std::optional<Rational> rational_from_string(const std::string& s) {
  auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return Rational{cpp_int(s), 1};
    return Rational{cpp_int(s.substr(0, slash)), cpp_int(s.substr(slash + 1))};
  } catch (...) {
    return std::nullopt;
  }
}

cpp_int pow10(size_t k) {
  cpp_int v = 1;
  for (size_t i = 0; i < k; ++i) v *= 10;
  return v;
}

void erase_all(std::string& s, std::string_view needle) {
  size_t pos = 0;
  while ((pos = s.find(needle, pos)) != std::string::npos) s.erase(pos, needle.size());
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

// "16.13" -> 1613/100, "-5" -> -5/1
Rational decimal_to_rational(const std::string& s) {
  std::string digits = s;
  bool negative = false;
  size_t start = 0;
  if (!digits.empty() && (digits[0] == '+' || digits[0] == '-')) {
    negative = digits[0] == '-';
    start = 1;
  }
  auto dot = digits.find('.');
  std::string integral = digits.substr(start, dot == std::string::npos ? std::string::npos
                                                                       : dot - start);
  std::string frac = dot == std::string::npos ? "" : digits.substr(dot + 1);
  cpp_int num(integral.empty() ? "0" : integral);
  cpp_int scale = pow10(frac.size());
  num *= scale;
  if (!frac.empty()) num += cpp_int(frac);
  if (negative) num = -num;
  return reduce(std::move(num), scale);
}

const std::regex& pure_number_re() {
  static const std::regex re(R"(^[+-]?\d{1,3}(,\d{3})+(\.\d+)?$)");
  return re;
}
const std::regex& decimal_re() {
  static const std::regex re(R"(^[+-]?\d+(\.\d+)?$)");
  return re;
}
const std::regex& slash_fraction_re() {
  static const std::regex re(R"(^([+-]?\d+)\s*/\s*(\d+)$)");
  return re;
}
const std::regex& latex_fraction_re() {
  static const std::regex re(R"(^([+-]?)\\frac\{([+-]?\d+)\}\{([+-]?\d+)\}$)");
  return re;
}

}  // namespace

ExtractedAnswer normalize_answer(std::string_view raw) {
  ExtractedAnswer answer;
  answer.raw = std::string(raw);

  std::string s = trim(raw);
  while (s.size() >= 2 && s.front() == '$' && s.back() == '$') {
    s = trim(s.substr(1, s.size() - 2));
  }
  erase_all(s, "\\left");
  erase_all(s, "\\right");
  replace_all(s, "\\dfrac", "\\frac");
  replace_all(s, "\\tfrac", "\\frac");
  s = collapse_whitespace(s);
  if (std::regex_match(s, pure_number_re())) {
    erase_all(s, ",");
  }
  answer.canonical = s;

  std::smatch m;
  if (std::regex_match(s, m, decimal_re())) {
    Rational r = decimal_to_rational(s);
    answer.numeric = rational_to_string(r);
    answer.numeric_from_decimal = s.find('.') != std::string::npos;
  } else if (std::regex_match(s, m, slash_fraction_re())) {
    cpp_int den(m[2].str());
    if (den != 0) {
      answer.numeric = rational_to_string(reduce(cpp_int(m[1].str()), std::move(den)));
    }
  } else if (std::regex_match(s, m, latex_fraction_re())) {
    cpp_int den(m[3].str());
    if (den != 0) {
      cpp_int num(m[2].str());
      if (m[1].str() == "-") num = -num;
      answer.numeric = rational_to_string(reduce(std::move(num), std::move(den)));
    }
  }
  return answer;
}

ExtractedAnswer extract_boxed(std::string_view text) {
  constexpr std::string_view marker = "\\boxed{";
  size_t last = text.rfind(marker);
  if (last == std::string_view::npos) return ExtractedAnswer{};
  size_t begin = last + marker.size();
  int depth = 1;
  for (size_t i = begin; i < text.size(); ++i) {
    if (text[i] == '{') {
      ++depth;
    } else if (text[i] == '}') {
      if (--depth == 0) {
        return normalize_answer(text.substr(begin, i - begin));
      }
    }
  }
  return ExtractedAnswer{};  // braces never balance
}

bool answers_equal(const ExtractedAnswer& pred, const ExtractedAnswer& gold) {
  if (!pred.has_answer() || !gold.has_answer()) return false;
  if (pred.numeric && gold.numeric) {
    if (*pred.numeric == *gold.numeric) return true;  // reduced forms are canonical
    if (pred.numeric_from_decimal || gold.numeric_from_decimal) {
      auto a = rational_from_string(*pred.numeric);
      auto b = rational_from_string(*gold.numeric);
      if (a && b) {
        // |a-b| <= 1e-9 * max(|a|,|b|), computed exactly.
        cpp_int diff_num = a->num * b->den - b->num * a->den;
        if (diff_num < 0) diff_num = -diff_num;
        cpp_int abs_a = a->num < 0 ? cpp_int(-a->num) : a->num;
        cpp_int abs_b = b->num < 0 ? cpp_int(-b->num) : b->num;
        // Common denominator a.den*b.den on both sides.
        cpp_int bound = abs_a * b->den > abs_b * a->den ? abs_a * b->den : abs_b * a->den;
        return diff_num * 1'000'000'000 <= bound;
      }
    }
    return false;
  }
  return pred.canonical == gold.canonical;
}

bool pass_at_k(const std::vector<bool>& flags, int k) {
  if (k < 1 || static_cast<size_t>(k) > flags.size()) {
    throw KTooLarge("pass_at_k: k=" + std::to_string(k) + " outside 1.." +
                    std::to_string(flags.size()));
  }
  for (int i = 0; i < k; ++i) {
    if (flags[static_cast<size_t>(i)]) return true;
  }
  return false;
}

long long token_total(const SampleOutcome& outcome, const PipelineMode& mode) {
  if (mode.counts_extraction_tokens()) {
    return outcome.extraction_tokens + outcome.reasoning_tokens;
  }
  return outcome.reasoning_tokens;
}

std::string sample_outcome_to_json(const SampleOutcome& outcome) {
  json j;
  j["problem_id"] = outcome.problem_id;
  j["sample_index"] = outcome.sample_index;
  j["correct"] = outcome.correct;
  j["extraction_tokens"] = outcome.extraction_tokens;
  j["reasoning_tokens"] = outcome.reasoning_tokens;
  j["usage_estimated"] = outcome.usage_estimated;
  j["boxed_raw"] = outcome.boxed_raw;
  return j.dump();
}

SampleOutcome sample_outcome_from_json(const std::string& line, int line_no) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw SchemaViolation("outcome file line " + std::to_string(line_no) + ": not a JSON object");
  }
  SampleOutcome outcome;
  try {
    outcome.problem_id = j.at("problem_id").get<std::string>();
    outcome.sample_index = j.at("sample_index").get<int>();
    outcome.correct = j.at("correct").get<bool>();
    outcome.extraction_tokens = j.at("extraction_tokens").get<long long>();
    outcome.reasoning_tokens = j.at("reasoning_tokens").get<long long>();
    outcome.usage_estimated = j.at("usage_estimated").get<bool>();
    outcome.boxed_raw = j.at("boxed_raw").get<std::string>();
  } catch (const json::exception& e) {
    throw SchemaViolation("outcome file line " + std::to_string(line_no) + ": " + e.what());
  }
  return outcome;
}

std::vector<SampleOutcome> read_outcome_file(const std::filesystem::path& file) {
  std::vector<SampleOutcome> outcomes;
  auto lines = split_lines(read_file(file));
  for (size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    outcomes.push_back(sample_outcome_from_json(lines[i], static_cast<int>(i) + 1));
  }
  return outcomes;
}

void write_outcome_file(const std::filesystem::path& file,
                        const std::vector<SampleOutcome>& outcomes) {
  std::string out;
  for (const auto& outcome : outcomes) {
    out += sample_outcome_to_json(outcome);
    out += '\n';
  }
  write_file_atomic(file, out);
}

}  // namespace fcot
