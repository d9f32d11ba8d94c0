#pragma once

// Command implementations shared by the CLI front end and the pipeline
// orchestrator. Internal header, not part of the public surface.

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "ttpc/llm_run.hpp"
#include "ttpc/prompt.hpp"
#include "ttpc/provider.hpp"
#include "ttpc/records.hpp"
#include "ttpc/sft.hpp"

namespace ttpc::cli {

struct IngestOutcome {
  std::filesystem::path dataset;
  int record_count = 0;
  int reject_count = 0;
};

IngestOutcome run_ingest_attack(const std::filesystem::path& bundle,
                                const std::filesystem::path& out,
                                const std::filesystem::path& report_path = {});
IngestOutcome run_ingest_capec(const std::filesystem::path& catalog,
                               const std::filesystem::path& attack_bundle,
                               const std::filesystem::path& out,
                               const std::filesystem::path& report_path = {});
IngestOutcome run_ingest_generic(const std::filesystem::path& input,
                                 const std::filesystem::path& out);

void run_split(const std::filesystem::path& dataset, int k, uint64_t seed,
               const std::filesystem::path& out);

struct TrainOutcome {
  std::filesystem::path best_dir;
  std::vector<std::filesystem::path> fold_dirs;
  double avg_micro_f1 = 0.0;
  double avg_accuracy = 0.0;
  double avg_train_loss = 0.0;
  double avg_test_loss = 0.0;
  int best_fold = 0;
};

TrainOutcome run_train(const std::filesystem::path& dataset,
                       const TrainingConfig& config,
                       const std::filesystem::path& out_dir, int subset,
                       bool quiet);

// Builds a TrainingConfig from a profile name ("table1", "miniature") or a
// JSON file path; base/seed overrides applied afterwards by the caller.
TrainingConfig config_from_spec(const std::string& spec);

void run_predict_sft(const std::filesystem::path& model_dir,
                     const std::filesystem::path& dataset,
                     const std::filesystem::path& out);

// Provider specs: "mock", "replay:<dir>", or a provider-config JSON path.
std::unique_ptr<ChatProvider> provider_from_spec(const std::string& spec);

// Template specs: "default", "strict", or a template file path.
PromptTemplate template_from_spec(const std::string& spec);

struct PredictLlmOutcome {
  std::filesystem::path predictions;
  LlmRunStats stats;
  std::string template_hash;
  std::string model_id;
  bool nondeterministic = false;
};

PredictLlmOutcome run_predict_llm(ChatProvider& provider,
                                  const PromptTemplate& tmpl,
                                  const std::filesystem::path& dataset,
                                  const LlmRunOptions& opts,
                                  const std::filesystem::path& out);

struct ScoreOutcome {
  double micro_f1 = 0.0;
  double accuracy = 0.0;
};

ScoreOutcome run_score(const std::filesystem::path& dataset,
                       const std::filesystem::path& preds,
                       const std::filesystem::path& out_json,
                       const std::filesystem::path& out_csv,
                       const std::filesystem::path& out_md,
                       bool leakage_banner);

void run_overlap(const std::filesystem::path& dataset_or_preds, bool is_preds,
                 const std::filesystem::path& out_csv,
                 const std::filesystem::path& out_svg,
                 const std::string& title);

struct CompareOutcome {
  std::filesystem::path json_path, md_path;
  double micro_f1_a = 0.0, micro_f1_b = 0.0;
  double accuracy_a = 0.0, accuracy_b = 0.0;
};

CompareOutcome run_compare(const std::filesystem::path& dataset,
                           const std::filesystem::path& preds_a,
                           const std::filesystem::path& preds_b,
                           const std::filesystem::path& out_dir,
                           const std::string& rule);

int run_pipeline(const std::filesystem::path& config_path, bool force);

}  // namespace ttpc::cli
