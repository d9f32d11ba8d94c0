#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ttpc/tactics.hpp"

namespace ttpc {

enum class Source { Attack, Capec, Generic };

const std::string& source_name(Source s);          // "ATTACK" / "CAPEC" / "GENERIC"
Source source_from_name(const std::string& name);  // throws on unknown

// One attack (or generic) description with provenance and gold labels.
struct DescriptionRecord {
  std::string id;    // source-native identifier (T1055, CAPEC-117, GEN-0031)
  Source source = Source::Attack;
  std::string text;  // document-level description, markup stripped
  LabelVector gold;

  // Throws ErrKind::Schema on invariant violations: empty text, GENERIC
  // with labels, ATTACK/CAPEC without labels.
  void validate() const;
};

// Deterministic k-fold partition of a record set.
struct FoldAssignment {
  int k = 0;
  uint64_t seed = 0;
  std::map<std::string, int> assignment;  // record id -> fold index

  std::vector<int> fold_sizes() const;
};

// Why a source object did not become a record, kept for audit.
struct RejectEntry {
  std::string object_id;
  std::string reason;
};

// Where a record's gold labels came from.
struct TraceEntry {
  std::string record_id;
  std::string source_object;           // STIX id / CAPEC pattern id
  std::vector<std::string> evidence;   // phase names or referenced techniques
};

struct IngestReport {
  std::vector<RejectEntry> rejects;
  std::vector<TraceEntry> trace;
  int skipped_references = 0;  // CAPEC references to unknown techniques
};

}  // namespace ttpc
