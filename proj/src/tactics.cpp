#include "ttpc/tactics.hpp"

#include <algorithm>
#include <bit>
#include <cctype>

#include "ttpc/errors.hpp"

namespace ttpc {

const std::array<std::string, kTacticCount>& tactic_canonical_names() {
  static const std::array<std::string, kTacticCount> names = {
      "COLLECTION",
      "COMMAND_AND_CONTROL",
      "CREDENTIAL_ACCESS",
      "DEFENSE_EVASION",
      "DISCOVERY",
      "EXECUTION",
      "EXFILTRATION",
      "IMPACT",
      "INITIAL_ACCESS",
      "LATERAL_MOVEMENT",
      "PERSISTENCE",
      "PRIVILEGE_ESCALATION",
      "RECONNAISSANCE",
      "RESOURCE_DEVELOPMENT",
  };
  return names;
}

const std::array<std::string, kTacticCount>& tactic_stix_shortnames() {
  static const std::array<std::string, kTacticCount> names = {
      "collection",
      "command-and-control",
      "credential-access",
      "defense-evasion",
      "discovery",
      "execution",
      "exfiltration",
      "impact",
      "initial-access",
      "lateral-movement",
      "persistence",
      "privilege-escalation",
      "reconnaissance",
      "resource-development",
  };
  return names;
}

const std::string& canonical_name(Tactic t) {
  return tactic_canonical_names()[tactic_index(t)];
}

const std::string& stix_shortname(Tactic t) {
  return tactic_stix_shortnames()[tactic_index(t)];
}

LabelVector LabelVector::from_bits(const std::vector<int>& bits) {
  if (bits.size() != static_cast<size_t>(kTacticCount))
    raise(ErrKind::InvalidInput,
          "label vector must have exactly 14 elements, got " +
              std::to_string(bits.size()));
  LabelVector v;
  for (int i = 0; i < kTacticCount; ++i) {
    if (bits[i] != 0 && bits[i] != 1)
      raise(ErrKind::InvalidInput, "label vector elements must be 0 or 1");
    if (bits[i]) v.set(tactic_at(i));
  }
  return v;
}

int LabelVector::count() const { return std::popcount(bits_); }

std::vector<int> LabelVector::bits() const {
  std::vector<int> out(kTacticCount, 0);
  for (int i = 0; i < kTacticCount; ++i)
    if (get(tactic_at(i))) out[i] = 1;
  return out;
}

LabelVector vector_from_tactics(const std::set<Tactic>& tactics) {
  LabelVector v;
  for (Tactic t : tactics) v.set(t);
  return v;
}

std::set<Tactic> tactics_from_vector(const LabelVector& v) {
  std::set<Tactic> out;
  for (int i = 0; i < kTacticCount; ++i)
    if (v.get(tactic_at(i))) out.insert(tactic_at(i));
  return out;
}

std::string format_label_set(const LabelVector& v) {
  if (v.none()) return "NONE";
  std::string out;
  for (int i = 0; i < kTacticCount; ++i) {
    if (!v.get(tactic_at(i))) continue;
    if (!out.empty()) out += ", ";
    out += canonical_name(tactic_at(i));
  }
  return out;
}

namespace {

bool is_separator(char c) { return c == ' ' || c == '-' || c == '_'; }

// Uppercase, squeeze separator runs to '_', trim separators at both ends.
std::string fold_name(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    if (is_separator(c)) {
      if (!out.empty() && out.back() != '_') out += '_';
    } else {
      out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

std::string_view trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

TacticOrUnknown canonicalize_tactic_name(std::string_view raw) {
  std::string_view trimmed = trim(raw);
  if (trimmed.empty())
    raise(ErrKind::InvalidInput, "tactic name must not be empty");
  std::string folded = fold_name(trimmed);
  if (folded.empty())
    raise(ErrKind::InvalidInput, "tactic name must not be empty");
  const auto& names = tactic_canonical_names();
  for (int i = 0; i < kTacticCount; ++i) {
    if (names[i] == folded) return {tactic_at(i), std::string(trimmed)};
  }
  return {std::nullopt, std::string(trimmed)};
}

std::optional<Tactic> tactic_from_canonical(std::string_view name) {
  const auto& names = tactic_canonical_names();
  for (int i = 0; i < kTacticCount; ++i)
    if (names[i] == name) return tactic_at(i);
  return std::nullopt;
}

std::optional<Tactic> tactic_from_shortname(std::string_view shortname) {
  const auto& names = tactic_stix_shortnames();
  for (int i = 0; i < kTacticCount; ++i)
    if (names[i] == shortname) return tactic_at(i);
  return std::nullopt;
}

}  // namespace ttpc
