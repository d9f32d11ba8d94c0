#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ttpc {

// The 14 MITRE ATT&CK Enterprise tactics. Indices follow the alphabetical
// order of the canonical names and are the serialization contract: every
// label vector, dataset header and model artifact uses this ordering.
enum class Tactic : uint8_t {
  Collection = 0,
  CommandAndControl,
  CredentialAccess,
  DefenseEvasion,
  Discovery,
  Execution,
  Exfiltration,
  Impact,
  InitialAccess,
  LateralMovement,
  Persistence,
  PrivilegeEscalation,
  Reconnaissance,
  ResourceDevelopment,
};

inline constexpr int kTacticCount = 14;

const std::array<std::string, kTacticCount>& tactic_canonical_names();
const std::array<std::string, kTacticCount>& tactic_stix_shortnames();

const std::string& canonical_name(Tactic t);
const std::string& stix_shortname(Tactic t);

inline Tactic tactic_at(int index) { return static_cast<Tactic>(index); }
inline int tactic_index(Tactic t) { return static_cast<int>(t); }

// 14-bit multi-label vector. The all-zero vector is the unique
// representation of NONE.
class LabelVector {
 public:
  LabelVector() = default;

  // bits must have exactly 14 elements, each 0 or 1.
  static LabelVector from_bits(const std::vector<int>& bits);

  bool get(Tactic t) const { return (bits_ >> tactic_index(t)) & 1u; }
  void set(Tactic t, bool v = true) {
    if (v)
      bits_ |= (1u << tactic_index(t));
    else
      bits_ &= ~(1u << tactic_index(t));
  }

  bool none() const { return bits_ == 0; }
  int count() const;
  uint16_t mask() const { return bits_; }
  static LabelVector from_mask(uint16_t m) {
    LabelVector v;
    v.bits_ = static_cast<uint16_t>(m & 0x3fffu);
    return v;
  }

  std::vector<int> bits() const;

  friend bool operator==(const LabelVector&, const LabelVector&) = default;

 private:
  uint16_t bits_ = 0;
};

LabelVector vector_from_tactics(const std::set<Tactic>& tactics);
std::set<Tactic> tactics_from_vector(const LabelVector& v);

// Human-readable label set, e.g. "DEFENSE_EVASION, PERSISTENCE" or "NONE".
std::string format_label_set(const LabelVector& v);

// Result of canonicalizing a free-form tactic name. Unrecognized names are
// carried along as Unknown values, never silently dropped.
struct TacticOrUnknown {
  std::optional<Tactic> tactic;
  std::string raw;  // original spelling, kept for diagnostics

  bool known() const { return tactic.has_value(); }
};

// Case-insensitive match after mapping separator runs (space, hyphen,
// underscore) to a single underscore. Throws ErrKind::InvalidInput on an
// empty or all-separator string.
TacticOrUnknown canonicalize_tactic_name(std::string_view raw);

std::optional<Tactic> tactic_from_canonical(std::string_view name);
std::optional<Tactic> tactic_from_shortname(std::string_view shortname);

}  // namespace ttpc
