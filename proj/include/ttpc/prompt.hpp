#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "ttpc/tactics.hpp"

namespace ttpc {

struct FewShotExample {
  std::string description;
  std::set<Tactic> tactics;
};

// Prompt skeleton with {TACTIC_LIST}, {EXAMPLES} and {DESCRIPTIONS}
// placeholders. The rendered prompt is task instruction + the 14 tactic
// names + few-shot examples + numbered, backtick-delimited descriptions +
// the output format line.
struct PromptTemplate {
  std::string skeleton;
  std::vector<FewShotExample> examples;
  bool strict = false;  // ends with the ONLY-print-the-tactics sentence

  std::string hash() const;  // sha256 over skeleton + rendered examples

  static PromptTemplate default_template();
  static PromptTemplate strict_template();
  static PromptTemplate from_file(const std::filesystem::path& path);
};

struct RenderedPrompt {
  std::string text;
  std::vector<std::string> warnings;  // e.g. escaped backtick runs
};

// Deterministic for fixed inputs. Throws on an empty batch or empty
// descriptions; descriptions containing ``` are escaped with a warning.
RenderedPrompt build_prompt(const PromptTemplate& tmpl,
                            const std::vector<std::string>& descriptions);

// One parsed "Tactic(s): ..." answer slot.
struct ParsedSlot {
  std::set<Tactic> tactics;
  std::vector<std::string> unknowns;
  bool conforming = true;  // false when the model skipped this slot
  std::string line;        // the raw answer line, kept for audit
};

// Extracts the answer lines in order. Missing entries are flagged
// non-conforming (never silently padded as NONE); zero parseable lines is a
// parse error carrying the raw text.
std::vector<ParsedSlot> parse_response(const std::string& raw,
                                       int expected_count);

// Canonical answer line, the exact inverse of parse_response for known
// label sets: "Tactic(s): A, B" or "Tactic(s): NONE".
std::string format_answer_line(const LabelVector& labels);

}  // namespace ttpc
