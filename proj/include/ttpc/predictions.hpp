#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ttpc/tactics.hpp"

namespace ttpc {

// One model's labels for one description. Shared by the SFT and LLM paths;
// the SFT path fills probs and leaves the response fields empty.
struct PredictionRecord {
  std::string record_id;
  std::string model_id;
  LabelVector predicted;
  std::string raw_response;  // the answer line for this record, "" if missing
  std::vector<std::string> unknown_labels;
  bool conforming = true;
  bool cache_hit = false;   // in-memory diagnostic; not serialized, so cached
                            // reruns reproduce files bit-for-bit
  bool mapped_to_none = false;  // unknown-label policy turned this into NONE
  std::string prompt_hash;
  std::vector<float> probs;  // SFT only

  // Invariant from the response parser: every tactic named in raw_response
  // is either in predicted or listed in unknown_labels.
};

std::string prediction_line(const PredictionRecord& r);

// Predictions JSONL: {record_id, model_id, tactics, unknown_labels,
// raw_response, prompt_hash, conforming [, probs]}. Written atomically.
void save_predictions(const std::vector<PredictionRecord>& records,
                      const std::filesystem::path& path);
std::vector<PredictionRecord> load_predictions(
    const std::filesystem::path& path);

}  // namespace ttpc
