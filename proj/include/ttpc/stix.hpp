#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ttpc/records.hpp"

namespace ttpc {

struct AttackParseResult {
  std::vector<DescriptionRecord> records;  // sorted by record id
  IngestReport report;
  // technique external id (e.g. "T1055.011") -> tactic set, for CAPEC joins
  std::map<std::string, std::set<Tactic>> technique_index;
};

// Parses an ATT&CK STIX 2.1 bundle. Emits one record per enterprise tactic
// (x-mitre-tactic), technique and sub-technique (attack-pattern); revoked
// and deprecated objects are excluded; attack-patterns with no recognizable
// tactic go to the rejects report instead of being silently dropped.
AttackParseResult parse_attack_bundle(const std::string& bundle_json);
AttackParseResult parse_attack_bundle_file(const std::filesystem::path& path);

// Removes citation markers, HTML tags and markdown link/code markup so the
// stored text is plain prose; collapses runs of whitespace.
std::string strip_description_markup(const std::string& text);

}  // namespace ttpc
