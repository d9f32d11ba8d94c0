#pragma once

#include <filesystem>
#include <vector>

#include "ttpc/records.hpp"

namespace ttpc {

inline constexpr int kDatasetFormatVersion = 1;

// Dataset JSONL: a header line carrying {format_version, tactic_order},
// then one object per record {id, source, text, tactics}. UTF-8, LF line
// endings, written atomically (temp file + rename). Serialization is
// deterministic: identical records produce identical bytes.
void save_dataset(const std::vector<DescriptionRecord>& records,
                  const std::filesystem::path& path);

// Validates the header ordering contract and every record invariant;
// errors name the offending line.
std::vector<DescriptionRecord> load_dataset(const std::filesystem::path& path);

std::string dataset_line(const DescriptionRecord& r);
std::string dataset_header_line();

}  // namespace ttpc
