#include "ttpc/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ttpc/errors.hpp"

namespace ttpc {

using nlohmann::json;

namespace {

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Correct: return "CORRECT";
    case Verdict::Partial: return "PARTIAL";
    default: return "WRONG";
  }
}

}  // namespace

json metrics_to_json(const MetricsReport& rep) {
  json per;
  for (int i = 0; i < kTacticCount; ++i) {
    const auto& ts = rep.per_tactic[i];
    per[canonical_name(tactic_at(i))] = json{
        {"precision", ts.precision}, {"recall", ts.recall},
        {"f1", ts.f1},               {"support", ts.support},
        {"undefined", ts.undefined}, {"tp", ts.tp},
        {"fp", ts.fp},               {"fn", ts.fn}};
  }
  return json{{"micro_f1", rep.micro_f1},
              {"micro_precision", rep.micro_precision},
              {"micro_recall", rep.micro_recall},
              {"exact_match_accuracy", rep.exact_match_accuracy},
              {"n_records", rep.n_records},
              {"tp", rep.tp},
              {"fp", rep.fp},
              {"fn", rep.fn},
              {"leakage_banner", rep.leakage_banner},
              {"per_tactic", per}};
}

std::string metrics_to_csv(const MetricsReport& rep) {
  std::ostringstream out;
  out << "tactic,precision,recall,f1,support,undefined\n";
  for (int i = 0; i < kTacticCount; ++i) {
    const auto& ts = rep.per_tactic[i];
    out << canonical_name(tactic_at(i)) << ',' << fmt4(ts.precision) << ','
        << fmt4(ts.recall) << ',' << fmt4(ts.f1) << ',' << ts.support << ','
        << (ts.undefined ? 1 : 0) << '\n';
  }
  out << "MICRO," << fmt4(rep.micro_precision) << ',' << fmt4(rep.micro_recall)
      << ',' << fmt4(rep.micro_f1) << ',' << (rep.tp + rep.fn) << ",0\n";
  out << "ACCURACY,,,," << fmt4(rep.exact_match_accuracy) << ",\n";
  return out.str();
}

std::string metrics_to_markdown(const MetricsReport& rep,
                                const std::string& model_name) {
  std::ostringstream out;
  if (rep.leakage_banner)
    out << "> **LEAKAGE NOTICE:** these scores re-evaluate the selected "
           "model on data that overlaps its training folds; they measure "
           "memorization plus generalization, not held-out skill.\n\n";
  out << "### " << model_name << "\n\n";
  out << "| Metric | Value |\n|---|---|\n";
  out << "| Micro-F1 | " << fmt2(rep.micro_f1) << " |\n";
  out << "| Accuracy (exact match) | " << fmt2(rep.exact_match_accuracy)
      << " |\n";
  out << "| Records | " << rep.n_records << " |\n\n";
  out << "| Tactic | Precision | Recall | F1 | Support |\n";
  out << "|---|---|---|---|---|\n";
  for (int i = 0; i < kTacticCount; ++i) {
    const auto& ts = rep.per_tactic[i];
    out << "| " << canonical_name(tactic_at(i)) << " | " << fmt2(ts.precision)
        << " | " << fmt2(ts.recall) << " | " << fmt2(ts.f1) << " | "
        << ts.support << (ts.undefined ? " *" : "") << " |\n";
  }
  out << "\n(* zero-denominator cells reported as 0.00)\n";
  return out.str();
}

std::string overlap_to_csv(const OverlapMatrix& m) {
  std::ostringstream out;
  out << "tactic";
  for (int j = 0; j < kTacticCount; ++j)
    out << ',' << canonical_name(tactic_at(j));
  out << ",total,multi_label_pct\n";
  for (int i = 0; i < kTacticCount; ++i) {
    out << canonical_name(tactic_at(i));
    for (int j = 0; j < kTacticCount; ++j) out << ',' << m.counts[i][j];
    char pct[32];
    std::snprintf(pct, sizeof(pct), "%.1f", m.multi_label_pct[i]);
    out << ',' << m.totals[i] << ',' << pct << '\n';
  }
  return out.str();
}

std::string overlap_to_svg(const OverlapMatrix& m, const std::string& title) {
  const int cell = 34, left = 170, top = 60;
  const int width = left + cell * (kTacticCount + 2) + 40;
  const int height = top + cell * kTacticCount + 40;
  int max_count = 1;
  for (int i = 0; i < kTacticCount; ++i)
    for (int j = 0; j < kTacticCount; ++j)
      max_count = std::max(max_count, m.counts[i][j]);

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" font-family=\"sans-serif\">\n";
  svg << "<text x=\"" << left << "\" y=\"24\" font-size=\"15\">" << title
      << "</text>\n";
  for (int i = 0; i < kTacticCount; ++i) {
    svg << "<text x=\"" << left - 6 << "\" y=\""
        << top + i * cell + cell / 2 + 4
        << "\" font-size=\"9\" text-anchor=\"end\">"
        << canonical_name(tactic_at(i)) << "</text>\n";
    svg << "<text x=\"" << left + i * cell + cell / 2 << "\" y=\"" << top - 8
        << "\" font-size=\"8\" text-anchor=\"middle\" transform=\"rotate(-45 "
        << left + i * cell + cell / 2 << " " << top - 8 << ")\">"
        << canonical_name(tactic_at(i)).substr(0, 12) << "</text>\n";
    for (int j = 0; j < kTacticCount; ++j) {
      const int v = m.counts[i][j];
      const double frac = double(v) / double(max_count);
      const int r = 255;
      const int gb = int(255 - 205 * frac);
      svg << "<rect x=\"" << left + j * cell << "\" y=\"" << top + i * cell
          << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
          << (v == 0 ? "#f7f7f7"
                     : "rgb(" + std::to_string(r) + "," + std::to_string(gb) +
                           "," + std::to_string(gb) + ")")
          << "\" stroke=\"#cccccc\"/>\n";
      if (v > 0)
        svg << "<text x=\"" << left + j * cell + cell / 2 << "\" y=\""
            << top + i * cell + cell / 2 + 4
            << "\" font-size=\"10\" text-anchor=\"middle\">" << v
            << "</text>\n";
    }
    // totals and multi-label percentage columns
    svg << "<text x=\"" << left + kTacticCount * cell + cell / 2 << "\" y=\""
        << top + i * cell + cell / 2 + 4
        << "\" font-size=\"10\" text-anchor=\"middle\" font-weight=\"bold\">"
        << m.totals[i] << "</text>\n";
    char pct[32];
    std::snprintf(pct, sizeof(pct), "%.0f%%", m.multi_label_pct[i]);
    svg << "<text x=\"" << left + (kTacticCount + 1) * cell + cell / 2
        << "\" y=\"" << top + i * cell + cell / 2 + 4
        << "\" font-size=\"10\" text-anchor=\"middle\">" << pct << "</text>\n";
  }
  svg << "<text x=\"" << left + kTacticCount * cell + cell / 2 << "\" y=\""
      << top - 8 << "\" font-size=\"8\" text-anchor=\"middle\">total</text>\n";
  svg << "<text x=\"" << left + (kTacticCount + 1) * cell + cell / 2
      << "\" y=\"" << top - 8
      << "\" font-size=\"8\" text-anchor=\"middle\">multi%</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

namespace {

// Table 6 cell order: the paper's presentation order for the nine
// verdict pairs of models A and B.
const std::array<std::pair<Verdict, Verdict>, 9> kAgreementOrder = {{
    {Verdict::Correct, Verdict::Correct},
    {Verdict::Wrong, Verdict::Wrong},
    {Verdict::Partial, Verdict::Partial},
    {Verdict::Correct, Verdict::Wrong},
    {Verdict::Wrong, Verdict::Correct},
    {Verdict::Partial, Verdict::Wrong},
    {Verdict::Wrong, Verdict::Partial},
    {Verdict::Partial, Verdict::Correct},
    {Verdict::Correct, Verdict::Partial},
}};

std::string cell_label(Verdict a, Verdict b, const std::string& ma,
                       const std::string& mb) {
  auto part = [](Verdict v, const std::string& name) {
    switch (v) {
      case Verdict::Correct: return name + " Correct";
      case Verdict::Partial: return name + " Partially Correct";
      default: return name + " Wrong";
    }
  };
  if (a == b) {
    switch (a) {
      case Verdict::Correct: return ma + " & " + mb + " Correct";
      case Verdict::Partial: return ma + " & " + mb + " Partially Correct";
      default: return ma + " & " + mb + " Wrong";
    }
  }
  return part(a, ma) + ", " + part(b, mb);
}

}  // namespace

json agreement_to_json(const AgreementBreakdown& b, const std::string& model_a,
                       const std::string& model_b) {
  json cells = json::array();
  for (const auto& [va, vb] : kAgreementOrder) {
    cells.push_back(json{{"a", verdict_name(va)},
                         {"b", verdict_name(vb)},
                         {"label", cell_label(va, vb, model_a, model_b)},
                         {"count", b.at(va, vb)}});
  }
  return json{{"model_a", model_a},
              {"model_b", model_b},
              {"total", b.total},
              {"cells", cells}};
}

std::string agreement_to_markdown(const AgreementBreakdown& b,
                                  const std::string& model_a,
                                  const std::string& model_b) {
  std::ostringstream out;
  out << "| " << model_a << " (A) & " << model_b << " (B) | Count |\n";
  out << "|---|---|\n";
  for (const auto& [va, vb] : kAgreementOrder)
    out << "| " << cell_label(va, vb, "A", "B") << " | " << b.at(va, vb)
        << " |\n";
  out << "| Total | " << b.total << " |\n";
  return out.str();
}

void align_predictions(const std::vector<DescriptionRecord>& dataset,
                       const std::vector<PredictionRecord>& preds,
                       std::vector<LabelVector>* gold,
                       std::vector<LabelVector>* pred) {
  std::map<std::string, const PredictionRecord*> by_id;
  for (const auto& p : preds) by_id[p.record_id] = &p;
  std::vector<std::string> missing;
  for (const auto& r : dataset)
    if (!by_id.count(r.id)) missing.push_back(r.id);
  if (!missing.empty()) {
    std::string list;
    for (size_t i = 0; i < missing.size() && i < 20; ++i) {
      if (i) list += ", ";
      list += missing[i];
    }
    if (missing.size() > 20) list += ", ...";
    raise(ErrKind::InvalidInput,
          "predictions do not cover the dataset; " +
              std::to_string(missing.size()) + " record(s) missing: " + list);
  }
  gold->clear();
  pred->clear();
  for (const auto& r : dataset) {
    gold->push_back(r.gold);
    pred->push_back(by_id.at(r.id)->predicted);
  }
}

CompareReport make_compare_report(const std::vector<DescriptionRecord>& dataset,
                                  const std::vector<PredictionRecord>& preds_a,
                                  const std::vector<PredictionRecord>& preds_b,
                                  AgreementRule rule) {
  CompareReport rep;
  rep.n_records = int(dataset.size());
  rep.model_a = preds_a.empty() ? "model-a" : preds_a.front().model_id;
  rep.model_b = preds_b.empty() ? "model-b" : preds_b.front().model_id;

  std::vector<LabelVector> gold, pa, pb;
  align_predictions(dataset, preds_a, &gold, &pa);
  align_predictions(dataset, preds_b, &gold, &pb);

  rep.metrics_a = score(gold, pa);
  rep.metrics_b = score(gold, pb);
  rep.breakdown = agreement(gold, pa, pb, rule);

  for (size_t i = 0; i < dataset.size(); ++i) {
    Verdict va = classify_verdict(gold[i], pa[i], rule);
    Verdict vb = classify_verdict(gold[i], pb[i], rule);
    if (va == vb) continue;
    rep.disagreements.push_back(
        {dataset[i].id, gold[i], pa[i], pb[i], va, vb});
  }
  return rep;
}

json compare_to_json(const CompareReport& rep) {
  json dis = json::array();
  for (const auto& d : rep.disagreements) {
    dis.push_back(json{{"record_id", d.record_id},
                       {"gold", format_label_set(d.gold)},
                       {"pred_a", format_label_set(d.pred_a)},
                       {"pred_b", format_label_set(d.pred_b)},
                       {"verdict_a", verdict_name(d.verdict_a)},
                       {"verdict_b", verdict_name(d.verdict_b)}});
  }
  return json{{"model_a", rep.model_a},
              {"model_b", rep.model_b},
              {"n_records", rep.n_records},
              {"metrics_a", metrics_to_json(rep.metrics_a)},
              {"metrics_b", metrics_to_json(rep.metrics_b)},
              {"agreement", agreement_to_json(rep.breakdown, rep.model_a,
                                              rep.model_b)},
              {"disagreements", dis}};
}

std::string compare_to_markdown(const CompareReport& rep) {
  std::ostringstream out;
  out << "# Model comparison: " << rep.model_a << " vs " << rep.model_b
      << "\n\n";
  out << "| Metric | " << rep.model_a << " | " << rep.model_b << " |\n";
  out << "|---|---|---|\n";
  out << "| Micro-F1 | " << fmt2(rep.metrics_a.micro_f1) << " | "
      << fmt2(rep.metrics_b.micro_f1) << " |\n";
  out << "| Accuracy | " << fmt2(rep.metrics_a.exact_match_accuracy) << " | "
      << fmt2(rep.metrics_b.exact_match_accuracy) << " |\n\n";
  out << "## Per-tactic scores\n\n";
  out << "| Tactic | P (A) | R (A) | F1 (A) | P (B) | R (B) | F1 (B) | "
         "Support |\n";
  out << "|---|---|---|---|---|---|---|---|\n";
  for (int i = 0; i < kTacticCount; ++i) {
    const auto& a = rep.metrics_a.per_tactic[i];
    const auto& b = rep.metrics_b.per_tactic[i];
    out << "| " << canonical_name(tactic_at(i)) << " | " << fmt2(a.precision)
        << " | " << fmt2(a.recall) << " | " << fmt2(a.f1) << " | "
        << fmt2(b.precision) << " | " << fmt2(b.recall) << " | " << fmt2(b.f1)
        << " | " << a.support << " |\n";
  }
  out << "\n## Agreement\n\n";
  out << agreement_to_markdown(rep.breakdown, rep.model_a, rep.model_b);
  out << "\n## Disagreements (" << rep.disagreements.size() << ")\n\n";
  if (rep.disagreements.empty()) {
    out << "none\n";
  } else {
    out << "| Record | Gold | " << rep.model_a << " | " << rep.model_b
        << " | Verdict A | Verdict B |\n";
    out << "|---|---|---|---|---|---|\n";
    for (const auto& d : rep.disagreements) {
      out << "| " << d.record_id << " | " << format_label_set(d.gold) << " | "
          << format_label_set(d.pred_a) << " | " << format_label_set(d.pred_b)
          << " | " << verdict_name(d.verdict_a) << " | "
          << verdict_name(d.verdict_b) << " |\n";
    }
  }
  return out.str();
}

std::string iso8601_now() {
  std::time_t now = std::time(nullptr);
  std::tm tm_utc;
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

json RunManifest::to_json() const {
  return json{{"command", command},
              {"config", config},
              {"dataset_path", dataset_path},
              {"dataset_sha256", dataset_sha256},
              {"model_ids", model_ids},
              {"template_hash", template_hash},
              {"started_at", started_at},
              {"finished_at", finished_at},
              {"artifacts", artifacts},
              {"extra", extra}};
}

void RunManifest::save(const std::filesystem::path& path) const {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrKind::Io, "cannot write manifest: " + path.string());
  out << to_json().dump(2) << '\n';
  out.close();
  std::filesystem::rename(tmp, path);
}

}  // namespace ttpc
