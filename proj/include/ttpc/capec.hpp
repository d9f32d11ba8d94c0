#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ttpc/records.hpp"

namespace ttpc {

struct CapecParseResult {
  std::vector<DescriptionRecord> records;  // sorted by record id
  IngestReport report;
  int total_patterns = 0;  // non-deprecated patterns seen in the catalog
};

// Parses a CAPEC v3.x XML catalog. One record per attack pattern that maps
// to at least one ATT&CK technique in attack_index; the gold labels are the
// union of the referenced techniques' tactic sets. References to technique
// ids missing from the index are skipped with a warning entry; patterns
// left with no resolvable reference are excluded and counted.
CapecParseResult parse_capec_catalog(
    const std::string& catalog_xml,
    const std::map<std::string, std::set<Tactic>>& attack_index);

CapecParseResult parse_capec_catalog_file(
    const std::filesystem::path& path,
    const std::map<std::string, std::set<Tactic>>& attack_index);

}  // namespace ttpc
