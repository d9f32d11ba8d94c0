#include "ttpc/prompt.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "ttpc/errors.hpp"
#include "ttpc/sha256.hpp"

namespace ttpc {

namespace {

const char* kDefaultSkeleton =
    "You will be given a number of descriptions delimited by triple "
    "backticks and you have to predict which MITRE ATT&CK tactic(s) each "
    "description relates to. If a description does not relate to any of the "
    "MITRE ATT&CK tactics, simply predict it as [NONE].\n"
    "\n"
    "There are 14 MITRE ATT&CK Enterprise tactics in total and their names "
    "are:\n"
    "\n"
    "{TACTIC_LIST}\n"
    "\n"
    "Here are some examples of how you should do it:\n"
    "\n"
    "{EXAMPLES}\n"
    "\n"
    "Here are the descriptions:\n"
    "\n"
    "{DESCRIPTIONS}\n"
    "\n"
    "Write the output in the following format:\n"
    "Tactic(s): ...\n";

const char* kStrictSuffix =
    "Do NOT add any other information in your answer and ONLY print the "
    "tactics' names.\n";

std::vector<FewShotExample> default_examples() {
  return {
      {"Adversaries may abuse elevation control mechanisms to obtain "
       "higher-level permissions on a system. Native utilities that grant "
       "administrative rights can be invoked to run payloads with elevated "
       "privileges.",
       {Tactic::PrivilegeEscalation}},
      {"Adversaries may reuse stolen web session cookies to sign in to "
       "services as the victim, moving between applications without "
       "triggering the usual authentication checks.",
       {Tactic::LateralMovement, Tactic::DefenseEvasion}},
  };
}

std::string render_tactic_list() {
  std::string out;
  for (const auto& name : tactic_canonical_names()) {
    out += "- ";
    out += name;
    out += '\n';
  }
  if (!out.empty()) out.pop_back();
  return out;
}

std::string render_examples(const std::vector<FewShotExample>& examples) {
  std::string out;
  int n = 1;
  for (const auto& ex : examples) {
    out += std::to_string(n++) + ". " + ex.description + "\n\n";
    out += format_answer_line(vector_from_tactics(ex.tactics));
    out += "\n\n";
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

// Escapes backtick runs that would break the ``` delimiting.
std::string escape_backticks(const std::string& text, bool* escaped) {
  std::string out;
  out.reserve(text.size());
  int run = 0;
  for (char c : text) {
    if (c == '`') {
      ++run;
      if (run >= 3) {
        out += "\\`";
        *escaped = true;
        continue;
      }
    } else {
      run = 0;
    }
    out += c;
  }
  return out;
}

bool replace_once(std::string& s, std::string_view key,
                  const std::string& value) {
  size_t at = s.find(key);
  if (at == std::string::npos) return false;
  s.replace(at, key.size(), value);
  return true;
}

}  // namespace

std::string PromptTemplate::hash() const {
  Sha256 h;
  h.update(skeleton);
  h.update("\x1f");
  h.update(render_examples(examples));
  h.update(strict ? "\x1fstrict" : "\x1f");
  return h.hex_digest();
}

PromptTemplate PromptTemplate::default_template() {
  PromptTemplate t;
  t.skeleton = kDefaultSkeleton;
  t.examples = default_examples();
  return t;
}

PromptTemplate PromptTemplate::strict_template() {
  PromptTemplate t = default_template();
  t.skeleton += "\n";
  t.skeleton += kStrictSuffix;
  t.strict = true;
  return t;
}

PromptTemplate PromptTemplate::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrKind::Io, "cannot open prompt template: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  PromptTemplate t;
  t.skeleton = ss.str();
  t.examples = default_examples();
  if (t.skeleton.find("{DESCRIPTIONS}") == std::string::npos)
    raise(ErrKind::Schema,
          "prompt template must contain a {DESCRIPTIONS} placeholder: " +
              path.string());
  t.strict = t.skeleton.find("ONLY print the tactics' names") != std::string::npos;
  return t;
}

RenderedPrompt build_prompt(const PromptTemplate& tmpl,
                            const std::vector<std::string>& descriptions) {
  if (descriptions.empty())
    raise(ErrKind::InvalidInput, "build_prompt with an empty batch");

  RenderedPrompt out;
  std::string desc_block;
  int n = 1;
  for (const auto& d : descriptions) {
    if (d.empty())
      raise(ErrKind::InvalidInput,
            "build_prompt: description " + std::to_string(n) + " is empty");
    bool escaped = false;
    std::string safe = escape_backticks(d, &escaped);
    if (escaped)
      out.warnings.push_back("description " + std::to_string(n) +
                             " contained a triple-backtick run; escaped");
    desc_block += std::to_string(n) + ". ```" + safe + "```\n\n";
    ++n;
  }
  while (!desc_block.empty() && desc_block.back() == '\n') desc_block.pop_back();

  std::string text = tmpl.skeleton;
  const std::string tactic_list = render_tactic_list();
  replace_once(text, "{TACTIC_LIST}", tactic_list);
  replace_once(text, "{EXAMPLES}", render_examples(tmpl.examples));
  if (!replace_once(text, "{DESCRIPTIONS}", desc_block))
    raise(ErrKind::Schema, "template lacks the {DESCRIPTIONS} placeholder");

  // Ordering contract: all 14 canonical names present in the list section.
  for (const auto& name : tactic_canonical_names()) {
    if (text.find("- " + name) == std::string::npos)
      raise(ErrKind::Schema,
            "rendered prompt is missing tactic " + name + " in its list");
  }
  out.text = std::move(text);
  return out;
}

std::string format_answer_line(const LabelVector& labels) {
  return "Tactic(s): " + format_label_set(labels);
}

namespace {

std::string trim_copy(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Matches an answer cue: "tactic(s):", "tactics:", or "tactic:" in any
// case, optionally preceded by list numbering or markdown clutter. Returns
// the offset just past the colon, or npos.
size_t find_answer_cue(const std::string& line) {
  for (size_t i = 0; i + 6 < line.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(line[i])) != 't') continue;
    static const std::string word = "tactic";
    size_t j = 0;
    while (j < word.size() && i + j < line.size() &&
           std::tolower(static_cast<unsigned char>(line[i + j])) == word[j])
      ++j;
    if (j != word.size()) continue;
    size_t k = i + j;
    if (k < line.size() && (line[k] == 's' || line[k] == 'S')) ++k;
    if (k + 2 < line.size() && line[k] == '(' &&
        (line[k + 1] == 's' || line[k + 1] == 'S') && line[k + 2] == ')')
      k += 3;
    while (k < line.size() && (line[k] == ' ' || line[k] == '*')) ++k;
    if (k < line.size() && line[k] == ':') return k + 1;
  }
  return std::string::npos;
}

std::string strip_decoration(std::string tok) {
  auto should_strip = [](char c) {
    return c == '[' || c == ']' || c == '*' || c == '`' || c == '"' ||
           c == '\'' || c == '.' || c == '(' || c == ')';
  };
  size_t b = 0, e = tok.size();
  while (b < e && (should_strip(tok[b]) ||
                   std::isspace(static_cast<unsigned char>(tok[b]))))
    ++b;
  while (e > b && (should_strip(tok[e - 1]) ||
                   std::isspace(static_cast<unsigned char>(tok[e - 1]))))
    --e;
  return tok.substr(b, e - b);
}

}  // namespace

std::vector<ParsedSlot> parse_response(const std::string& raw,
                                       int expected_count) {
  if (expected_count < 1)
    raise(ErrKind::InvalidInput, "expected_count must be >= 1");

  std::vector<ParsedSlot> slots;
  std::istringstream lines(raw);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const size_t after = find_answer_cue(line);
    if (after == std::string::npos) continue;

    ParsedSlot slot;
    slot.line = trim_copy(line);
    std::string rest = line.substr(after);
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : rest) {
      if (c == ',' || c == ';') {
        tokens.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    tokens.push_back(cur);

    bool any_token = false;
    for (auto& t : tokens) {
      std::string name = strip_decoration(t);
      if (name.empty()) continue;
      any_token = true;
      std::string upper = name;
      for (auto& c : upper)
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      if (upper == "NONE") continue;  // empty label set marker
      TacticOrUnknown r = canonicalize_tactic_name(name);
      if (r.known())
        slot.tactics.insert(*r.tactic);
      else
        slot.unknowns.push_back(r.raw);
    }
    if (!any_token) slot.conforming = false;  // bare cue with no answer
    slots.push_back(std::move(slot));
    if (int(slots.size()) == expected_count) break;
  }

  if (slots.empty()) {
    raise(ErrKind::Parse,
          "no \"Tactic(s):\" lines found in model response; raw text for "
          "audit follows:\n" +
              raw);
  }
  while (int(slots.size()) < expected_count) {
    ParsedSlot missing;
    missing.conforming = false;
    slots.push_back(std::move(missing));
  }
  return slots;
}

}  // namespace ttpc
