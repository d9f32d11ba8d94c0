#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttpc/metrics.hpp"
#include "ttpc/predictions.hpp"
#include "ttpc/records.hpp"

namespace ttpc {

// Machine-readable forms are the single source of truth; every number in a
// rendered table equals the corresponding JSON value.
nlohmann::json metrics_to_json(const MetricsReport& rep);
std::string metrics_to_csv(const MetricsReport& rep);
std::string metrics_to_markdown(const MetricsReport& rep,
                                const std::string& model_name);

std::string overlap_to_csv(const OverlapMatrix& m);
// Annotated 14x14 heatmap with the totals and multi-label percentage
// columns; self-contained SVG, no rendering dependencies.
std::string overlap_to_svg(const OverlapMatrix& m, const std::string& title);

nlohmann::json agreement_to_json(const AgreementBreakdown& b,
                                 const std::string& model_a,
                                 const std::string& model_b);
std::string agreement_to_markdown(const AgreementBreakdown& b,
                                  const std::string& model_a,
                                  const std::string& model_b);

struct DisagreementRow {
  std::string record_id;
  LabelVector gold, pred_a, pred_b;
  Verdict verdict_a, verdict_b;
};

struct CompareReport {
  std::string model_a, model_b;
  MetricsReport metrics_a, metrics_b;
  AgreementBreakdown breakdown;
  std::vector<DisagreementRow> disagreements;  // records where verdicts differ
  int n_records = 0;
};

// Aligns predictions to the dataset by record id; a coverage gap is an
// error listing the missing ids.
CompareReport make_compare_report(const std::vector<DescriptionRecord>& dataset,
                                  const std::vector<PredictionRecord>& preds_a,
                                  const std::vector<PredictionRecord>& preds_b,
                                  AgreementRule rule = AgreementRule::ExactEquality);

nlohmann::json compare_to_json(const CompareReport& rep);
std::string compare_to_markdown(const CompareReport& rep);

// Aligns one prediction set against the dataset (same coverage contract)
// and returns (gold, pred) vectors in dataset order.
void align_predictions(const std::vector<DescriptionRecord>& dataset,
                       const std::vector<PredictionRecord>& preds,
                       std::vector<LabelVector>* gold,
                       std::vector<LabelVector>* pred);

// Per-run provenance: every artifact a command writes is reachable from
// exactly one manifest.
struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::string dataset_path, dataset_sha256;
  std::vector<std::string> model_ids;
  std::string template_hash;
  std::string started_at, finished_at;  // UTC ISO-8601
  std::vector<std::string> artifacts;
  nlohmann::json extra;

  nlohmann::json to_json() const;
  void save(const std::filesystem::path& path) const;
};

std::string iso8601_now();

}  // namespace ttpc
