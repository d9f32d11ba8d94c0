#pragma once

#include <filesystem>
#include <vector>

#include "ttpc/records.hpp"

namespace ttpc {

struct GenericParseResult {
  std::vector<DescriptionRecord> records;
  bool empty_input_warning = false;
};

// Loads a generic (non-cybersecurity) corpus: newline-delimited plain text
// or JSONL objects {"text": ...} with an optional "id". Every record gets
// the NONE gold vector. Plain-text and JSONL encodings of the same entries
// produce identical records.
GenericParseResult load_generic_corpus(const std::filesystem::path& path);

}  // namespace ttpc
