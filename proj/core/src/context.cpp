#include "fcot/context.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "fcot/errors.hpp"
#include "fcot/util.hpp"

namespace fcot {

namespace {

using json = nlohmann::ordered_json;

// ---------------- tag scanner ----------------
//
// The grammar is XML-shaped but not XML: no attributes, no entities, no
// escaping. The scanner recognizes <name> / </name> tokens where name is
// [A-Za-z_][A-Za-z0-9_]*; a '<' that does not start such a token (LaTeX
// "a < b", stray brackets) is plain text. A tag-shaped token carrying extra
// material before its '>' (attributes and the like) is kept but flagged.

struct Tag {
  bool closing = false;
  bool malformed = false;
  std::string name;
  size_t begin = 0;  // position of '<'
  size_t end = 0;    // one past '>'
};

bool name_start(char c) {
  return c == '_' || std::isalpha(static_cast<unsigned char>(c));
}
bool name_char(char c) {
  return c == '_' || std::isalnum(static_cast<unsigned char>(c));
}

std::vector<Tag> scan_tags(std::string_view s) {
  std::vector<Tag> tags;
  size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '<') {
      ++i;
      continue;
    }
    size_t j = i + 1;
    bool closing = false;
    if (j < s.size() && s[j] == '/') {
      closing = true;
      ++j;
    }
    if (j >= s.size() || !name_start(s[j])) {
      ++i;
      continue;
    }
    size_t name_begin = j;
    while (j < s.size() && name_char(s[j])) ++j;
    std::string name(s.substr(name_begin, j - name_begin));
    // Whitespace before '>' is tolerated; anything else marks the tag.
    bool extra = false;
    while (j < s.size() && s[j] != '>' && s[j] != '<') {
      if (!std::isspace(static_cast<unsigned char>(s[j]))) extra = true;
      ++j;
    }
    if (j >= s.size() || s[j] != '>') {
      // No closing '>' before the next '<' or the end: not a tag.
      ++i;
      continue;
    }
    tags.push_back(Tag{closing, extra, std::move(name), i, j + 1});
    i = j + 1;
  }
  return tags;
}

bool is_info_name(std::string_view name, int* index_out) {
  constexpr std::string_view prefix = "info_";
  if (name.substr(0, prefix.size()) != prefix) return false;
  std::string_view digits = name.substr(prefix.size());
  if (digits.empty()) return false;
  long long value = 0;
  for (char c : digits) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    value = value * 10 + (c - '0');
    if (value > 1'000'000) return false;  // absurd index, treat as foreign tag
  }
  if (index_out) *index_out = static_cast<int>(value);
  return true;
}

bool is_known_name(std::string_view name) {
  return name == "context" || name == "question" || is_info_name(name, nullptr);
}

}  // namespace

// ---------------- enums ----------------

const char* to_string(ContextFormat format) {
  switch (format) {
    case ContextFormat::XmlLike: return "xml";
    case ContextFormat::EnumeratedList: return "enumerated";
    case ContextFormat::UnnumberedList: return "unnumbered";
    case ContextFormat::Concatenated: return "concatenated";
  }
  return "?";
}

std::optional<ContextFormat> context_format_from_string(std::string_view s) {
  if (s == "xml" || s == "xml-like") return ContextFormat::XmlLike;
  if (s == "enumerated" || s == "enumerated-list") return ContextFormat::EnumeratedList;
  if (s == "unnumbered" || s == "unnumbered-list") return ContextFormat::UnnumberedList;
  if (s == "concatenated") return ContextFormat::Concatenated;
  return std::nullopt;
}

const char* to_string(Violation v) {
  switch (v) {
    case Violation::MissingRoot: return "MissingRoot";
    case Violation::MultipleRoots: return "MultipleRoots";
    case Violation::UnclosedTag: return "UnclosedTag";
    case Violation::MalformedTag: return "MalformedTag";
    case Violation::UnexpectedElement: return "UnexpectedElement";
    case Violation::UnexpectedText: return "UnexpectedText";
    case Violation::MissingInfo: return "MissingInfo";
    case Violation::NonConsecutiveIndex: return "NonConsecutiveIndex";
    case Violation::EmptyInfo: return "EmptyInfo";
    case Violation::MissingQuestion: return "MissingQuestion";
    case Violation::DuplicateQuestion: return "DuplicateQuestion";
    case Violation::EmptyQuestion: return "EmptyQuestion";
  }
  return "?";
}

std::optional<Violation> violation_from_string(std::string_view s) {
  static const std::pair<std::string_view, Violation> table[] = {
      {"MissingRoot", Violation::MissingRoot},
      {"MultipleRoots", Violation::MultipleRoots},
      {"UnclosedTag", Violation::UnclosedTag},
      {"MalformedTag", Violation::MalformedTag},
      {"UnexpectedElement", Violation::UnexpectedElement},
      {"UnexpectedText", Violation::UnexpectedText},
      {"MissingInfo", Violation::MissingInfo},
      {"NonConsecutiveIndex", Violation::NonConsecutiveIndex},
      {"EmptyInfo", Violation::EmptyInfo},
      {"MissingQuestion", Violation::MissingQuestion},
      {"DuplicateQuestion", Violation::DuplicateQuestion},
      {"EmptyQuestion", Violation::EmptyQuestion},
  };
  for (const auto& [name, v] : table) {
    if (s == name) return v;
  }
  return std::nullopt;
}

bool ValidationReport::has(Violation v) const {
  return std::find(violations.begin(), violations.end(), v) != violations.end();
}

bool ContextBlock::well_formed() const {
  if (infos.empty()) return false;
  for (size_t i = 0; i < infos.size(); ++i) {
    if (infos[i].index != static_cast<int>(i) + 1) return false;
    if (trim(infos[i].text).empty()) return false;
  }
  return !trim(question).empty();
}

// ---------------- think stripping / region extraction ----------------

std::string strip_think_blocks(std::string_view text) {
  std::string out(text);
  size_t pos = 0;
  while (true) {
    size_t open = out.find("<think>", pos);
    if (open == std::string::npos) break;
    size_t close = out.find("</think>", open + 7);
    if (close == std::string::npos) break;  // unterminated, keep as-is
    out.erase(open, close + 8 - open);
    pos = open;
  }
  return out;
}

std::string extract_context_region(std::string_view model_output) {
  std::string s = strip_think_blocks(model_output);
  size_t open = s.find("<context>");
  if (open == std::string::npos) return s;
  // Depth-match nested literal <context> tags to find the close.
  int depth = 1;
  size_t pos = open + 9;
  while (depth > 0) {
    size_t next_open = s.find("<context>", pos);
    size_t next_close = s.find("</context>", pos);
    if (next_close == std::string::npos) return s.substr(open);  // unterminated
    if (next_open != std::string::npos && next_open < next_close) {
      ++depth;
      pos = next_open + 9;
    } else {
      --depth;
      pos = next_close + 10;
    }
  }
  return s.substr(open, pos - open);
}

// ---------------- strict validation ----------------

namespace {

struct Element {
  std::string name;
  int info_index = -1;  // valid for info_k
  std::string text;     // trimmed inner text
  bool closed = false;
  std::vector<Violation> nested;  // violations found inside this element
};

void add(ValidationReport& report, Violation v, std::string detail) {
  report.violations.push_back(v);
  report.details.push_back(std::move(detail));
}

// Collects the inner text of an element opened at tags[open_idx], reporting
// foreign/malformed tags encountered before the matching close. Returns the
// index of the tag that terminated the walk (matching close or root close),
// or tags.size() when input ran out.
size_t read_element(std::string_view s, const std::vector<Tag>& tags, size_t open_idx,
                    Element& element, ValidationReport& report) {
  const Tag& open = tags[open_idx];
  std::string text;
  size_t cursor = open.end;
  for (size_t t = open_idx + 1; t < tags.size(); ++t) {
    const Tag& tag = tags[t];
    text.append(s.substr(cursor, tag.begin - cursor));
    cursor = tag.end;
    if (tag.closing && tag.name == open.name) {
      element.text = trim(text);
      element.closed = true;
      return t;
    }
    if (tag.closing && tag.name == "context") {
      // Root closed before the element did.
      add(report, Violation::UnclosedTag, "<" + open.name + "> never closed");
      element.text = trim(text);
      return t;
    }
    if (tag.malformed) {
      add(report, Violation::MalformedTag,
          "inside <" + open.name + ">: malformed tag <" + tag.name + ">");
    } else {
      add(report, Violation::UnexpectedElement,
          "tag <" + std::string(tag.closing ? "/" : "") + tag.name + "> inside <" + open.name + ">");
    }
  }
  add(report, Violation::UnclosedTag, "<" + open.name + "> never closed");
  element.text = trim(text.append(s.substr(cursor)));
  return tags.size();
}

}  // namespace

ValidationReport validate_strict(std::string_view raw) {
  ValidationReport report;
  std::vector<Tag> tags = scan_tags(raw);

  // Locate the root.
  size_t root_open = tags.size();
  int root_opens = 0;
  for (size_t t = 0; t < tags.size(); ++t) {
    if (!tags[t].closing && tags[t].name == "context") {
      ++root_opens;
      if (root_open == tags.size()) root_open = t;
    }
  }
  if (root_opens == 0) {
    add(report, Violation::MissingRoot, "no <context> element");
    report.valid = false;
    return report;
  }
  if (root_opens > 1) add(report, Violation::MultipleRoots, "more than one <context>");
  if (tags[root_open].malformed) {
    add(report, Violation::MalformedTag, "<context> carries attributes or junk");
  }

  std::vector<int> indices;
  int question_count = 0;
  bool root_closed = false;
  size_t cursor = tags[root_open].end;

  size_t t = root_open + 1;
  while (t < tags.size()) {
    const Tag& tag = tags[t];
    // Bare text between elements must be whitespace.
    std::string between(raw.substr(cursor, tag.begin - cursor));
    if (!trim(between).empty()) {
      add(report, Violation::UnexpectedText, "stray text inside <context>: \"" +
                                                 collapse_whitespace(between).substr(0, 40) + "\"");
    }
    cursor = tag.end;

    if (tag.closing && tag.name == "context") {
      root_closed = true;
      break;
    }
    if (tag.closing) {
      add(report, Violation::MalformedTag, "closing </" + tag.name + "> without open");
      ++t;
      continue;
    }
    if (tag.malformed && is_known_name(tag.name)) {
      add(report, Violation::MalformedTag, "<" + tag.name + "> carries attributes or junk");
    }

    int info_index = -1;
    if (is_info_name(tag.name, &info_index)) {
      Element element;
      size_t stop = read_element(raw, tags, t, element, report);
      indices.push_back(info_index);
      if (element.text.empty()) add(report, Violation::EmptyInfo, "<" + tag.name + "> is empty");
      if (stop < tags.size() && tags[stop].closing && tags[stop].name == "context") {
        root_closed = true;
        cursor = tags[stop].end;
        break;
      }
      cursor = stop < tags.size() ? tags[stop].end : raw.size();
      t = stop + 1;
      continue;
    }
    if (tag.name == "question") {
      Element element;
      size_t stop = read_element(raw, tags, t, element, report);
      ++question_count;
      if (question_count == 1 && element.text.empty()) {
        add(report, Violation::EmptyQuestion, "<question> is empty");
      }
      if (stop < tags.size() && tags[stop].closing && tags[stop].name == "context") {
        root_closed = true;
        cursor = tags[stop].end;
        break;
      }
      cursor = stop < tags.size() ? tags[stop].end : raw.size();
      t = stop + 1;
      continue;
    }
    // Foreign element at root level.
    if (tag.malformed) {
      add(report, Violation::MalformedTag, "<" + tag.name + "> carries attributes or junk");
    } else {
      add(report, Violation::UnexpectedElement, "<" + tag.name + "> inside <context>");
    }
    // Skip to its matching close when present, so its text is not counted.
    size_t skip = t + 1;
    for (; skip < tags.size(); ++skip) {
      if (tags[skip].closing && tags[skip].name == tag.name) break;
      if (tags[skip].closing && tags[skip].name == "context") break;
      if (!tags[skip].closing && is_known_name(tags[skip].name)) break;
    }
    if (skip < tags.size() && tags[skip].closing && tags[skip].name == tag.name) {
      cursor = tags[skip].end;
      t = skip + 1;
    } else {
      ++t;
    }
  }

  if (!root_closed) add(report, Violation::UnclosedTag, "<context> never closed");

  if (indices.empty()) {
    add(report, Violation::MissingInfo, "no <info_k> entries");
  } else {
    for (size_t i = 0; i < indices.size(); ++i) {
      if (indices[i] != static_cast<int>(i) + 1) {
        add(report, Violation::NonConsecutiveIndex,
            "expected info_" + std::to_string(i + 1) + ", found info_" + std::to_string(indices[i]));
        break;
      }
    }
  }
  if (question_count == 0) add(report, Violation::MissingQuestion, "no <question>");
  if (question_count > 1) add(report, Violation::DuplicateQuestion, "more than one <question>");

  report.valid = report.violations.empty();
  return report;
}

// ---------------- parsing ----------------

namespace {

// Shared by both modes: pull (index, text) spans and question texts in
// document order. A span's text runs to the matching close tag when present,
// otherwise to the next tag of any kind.
struct RawSpans {
  std::vector<std::pair<int, std::string>> infos;
  std::vector<std::string> questions;
};

RawSpans collect_spans(std::string_view s) {
  RawSpans spans;
  std::vector<Tag> tags = scan_tags(s);
  for (size_t t = 0; t < tags.size(); ++t) {
    const Tag& tag = tags[t];
    if (tag.closing) continue;
    int info_index = -1;
    bool is_info = is_info_name(tag.name, &info_index);
    if (!is_info && tag.name != "question") continue;
    size_t text_end = s.size();
    for (size_t u = t + 1; u < tags.size(); ++u) {
      if (tags[u].closing && tags[u].name == tag.name) {
        text_end = tags[u].begin;
        break;
      }
      // Another recognized tag interrupts the span: salvage what's there.
      if (is_known_name(tags[u].name)) {
        text_end = tags[u].begin;
        break;
      }
    }
    std::string text = trim(s.substr(tag.end, text_end - tag.end));
    if (is_info) {
      spans.infos.emplace_back(info_index, std::move(text));
    } else {
      spans.questions.push_back(std::move(text));
    }
  }
  return spans;
}

}  // namespace

ContextBlock parse_context(std::string_view raw, ParseMode mode) {
  if (mode == ParseMode::Strict) {
    ValidationReport report = validate_strict(raw);
    if (!report.valid) {
      std::string what = "context fails strict validation:";
      for (size_t i = 0; i < report.violations.size(); ++i) {
        what += " ";
        what += to_string(report.violations[i]);
      }
      throw UnparseableContext(what);
    }
    RawSpans spans = collect_spans(raw);
    ContextBlock block;
    for (auto& [index, text] : spans.infos) block.infos.push_back({index, std::move(text)});
    block.question = spans.questions.empty() ? "" : spans.questions.front();
    return block;
  }

  // Lenient salvage.
  RawSpans spans = collect_spans(raw);
  ContextBlock block;
  for (auto& [index, text] : spans.infos) {
    (void)index;
    if (text.empty()) continue;
    block.infos.push_back({static_cast<int>(block.infos.size()) + 1, std::move(text)});
  }
  for (auto& q : spans.questions) {
    if (!q.empty()) {
      block.question = q;
      break;
    }
  }
  if (block.infos.empty() && block.question.empty()) {
    throw UnparseableContext("no info entries and no question could be salvaged");
  }
  return block;
}

// ---------------- rendering ----------------

std::string render_xml_inner(const ContextBlock& block) {
  std::string out;
  for (const auto& info : block.infos) {
    out += "<info_" + std::to_string(info.index) + ">" + info.text + "</info_" +
           std::to_string(info.index) + ">\n";
  }
  if (!block.question.empty() || block.infos.empty()) {
    out += "<question>" + block.question + "</question>\n";
  }
  if (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

std::string render_context(const ContextBlock& block, ContextFormat format) {
  if (!block.well_formed()) {
    throw InvalidBlock("context block violates its invariants (indices 1..n, non-empty texts)");
  }
  std::string out;
  switch (format) {
    case ContextFormat::XmlLike: {
      out = "<context>\n";
      for (const auto& info : block.infos) {
        out += "    <info_" + std::to_string(info.index) + ">" + info.text + "</info_" +
               std::to_string(info.index) + ">\n";
      }
      out += "    <question>" + block.question + "</question>\n";
      out += "</context>";
      break;
    }
    case ContextFormat::EnumeratedList: {
      out = "Context:\n";
      for (const auto& info : block.infos) {
        out += "info_" + std::to_string(info.index) + ": " + info.text + "\n";
      }
      out += "question: " + block.question;
      break;
    }
    case ContextFormat::UnnumberedList: {
      out = "**Information**\n";
      for (const auto& info : block.infos) {
        out += "- " + info.text + "\n";
      }
      out += "\n**Question**\n" + block.question;
      break;
    }
    case ContextFormat::Concatenated: {
      for (size_t i = 0; i < block.infos.size(); ++i) {
        if (i > 0) out += ". ";
        out += block.infos[i].text;
      }
      out += ". Question: " + block.question;
      break;
    }
  }
  return out;
}

// ---------------- context records ----------------

std::string context_record_to_json(const ContextRecord& record) {
  json j;
  j["problem_id"] = record.problem_id;
  j["raw_context"] = record.raw_context;
  j["valid"] = record.valid;
  j["violations"] = record.violations;
  if (record.extraction_tokens >= 0) {
    j["extraction_tokens"] = record.extraction_tokens;
    j["usage_estimated"] = record.usage_estimated;
  }
  if (!record.error.empty()) j["error"] = record.error;
  return j.dump();
}

ContextRecord context_record_from_json(const std::string& line, int line_no) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw SchemaViolation("context file line " + std::to_string(line_no) + ": not a JSON object");
  }
  ContextRecord record;
  try {
    record.problem_id = j.at("problem_id").get<std::string>();
    record.raw_context = j.at("raw_context").get<std::string>();
    record.valid = j.at("valid").get<bool>();
    record.violations = j.at("violations").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw SchemaViolation("context file line " + std::to_string(line_no) + ": " + e.what());
  }
  if (j.contains("extraction_tokens")) record.extraction_tokens = j["extraction_tokens"].get<long long>();
  if (j.contains("usage_estimated")) record.usage_estimated = j["usage_estimated"].get<bool>();
  if (j.contains("error")) record.error = j["error"].get<std::string>();
  return record;
}

std::vector<ContextRecord> read_context_file(const std::filesystem::path& file) {
  std::vector<ContextRecord> records;
  auto lines = split_lines(read_file(file));
  for (size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    records.push_back(context_record_from_json(lines[i], static_cast<int>(i) + 1));
  }
  return records;
}

void write_context_file(const std::filesystem::path& file,
                        const std::vector<ContextRecord>& records) {
  std::string out;
  for (const auto& record : records) {
    out += context_record_to_json(record);
    out += '\n';
  }
  write_file_atomic(file, out);
}

ContextRecord make_context_record(std::string problem_id, std::string raw_context) {
  ContextRecord record;
  record.problem_id = std::move(problem_id);
  record.raw_context = std::move(raw_context);
  ValidationReport report = validate_strict(record.raw_context);
  record.valid = report.valid;
  for (Violation v : report.violations) record.violations.emplace_back(to_string(v));
  return record;
}

}  // namespace fcot
