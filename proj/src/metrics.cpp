#include "ttpc/metrics.hpp"

#include "ttpc/errors.hpp"

namespace ttpc {

MetricsReport score(const std::vector<LabelVector>& gold,
                    const std::vector<LabelVector>& pred) {
  if (gold.size() != pred.size())
    raise(ErrKind::InvalidInput,
          "score: gold and prediction lists differ in length (" +
              std::to_string(gold.size()) + " vs " +
              std::to_string(pred.size()) + ")");

  MetricsReport rep;
  rep.n_records = int(gold.size());

  int exact = 0;
  for (size_t r = 0; r < gold.size(); ++r) {
    if (gold[r] == pred[r]) ++exact;
    for (int i = 0; i < kTacticCount; ++i) {
      const bool g = gold[r].get(tactic_at(i));
      const bool p = pred[r].get(tactic_at(i));
      auto& ts = rep.per_tactic[i];
      if (g && p)
        ++ts.tp;
      else if (!g && p)
        ++ts.fp;
      else if (g && !p)
        ++ts.fn;
    }
  }

  for (int i = 0; i < kTacticCount; ++i) {
    auto& ts = rep.per_tactic[i];
    ts.support = int(ts.tp + ts.fn);
    if (ts.tp + ts.fp > 0)
      ts.precision = double(ts.tp) / double(ts.tp + ts.fp);
    else
      ts.undefined = true;
    if (ts.tp + ts.fn > 0)
      ts.recall = double(ts.tp) / double(ts.tp + ts.fn);
    else
      ts.undefined = true;
    if (2 * ts.tp + ts.fp + ts.fn > 0)
      ts.f1 = 2.0 * double(ts.tp) / double(2 * ts.tp + ts.fp + ts.fn);
    else
      ts.undefined = true;
    rep.tp += ts.tp;
    rep.fp += ts.fp;
    rep.fn += ts.fn;
  }

  rep.micro_precision =
      (rep.tp + rep.fp) > 0 ? double(rep.tp) / double(rep.tp + rep.fp) : 0.0;
  rep.micro_recall =
      (rep.tp + rep.fn) > 0 ? double(rep.tp) / double(rep.tp + rep.fn) : 0.0;
  rep.micro_f1 = (2 * rep.tp + rep.fp + rep.fn) > 0
                     ? 2.0 * double(rep.tp) / double(2 * rep.tp + rep.fp + rep.fn)
                     : 0.0;
  rep.exact_match_accuracy =
      gold.empty() ? 0.0 : double(exact) / double(gold.size());
  return rep;
}

OverlapMatrix overlap_matrix(const std::vector<LabelVector>& labels) {
  if (labels.empty())
    raise(ErrKind::InvalidInput, "overlap_matrix over empty input");
  OverlapMatrix m;
  for (const auto& v : labels) {
    const int n = v.count();
    for (int i = 0; i < kTacticCount; ++i) {
      if (!v.get(tactic_at(i))) continue;
      m.totals[i] += 1;
      if (n == 1) {
        m.counts[i][i] += 1;
        continue;
      }
      for (int j = i + 1; j < kTacticCount; ++j) {
        if (!v.get(tactic_at(j))) continue;
        m.counts[i][j] += 1;
        m.counts[j][i] += 1;
      }
    }
  }
  for (int i = 0; i < kTacticCount; ++i) {
    if (m.totals[i] > 0)
      m.multi_label_pct[i] =
          100.0 * double(m.totals[i] - m.counts[i][i]) / double(m.totals[i]);
  }
  return m;
}

Verdict classify_verdict(const LabelVector& gold, const LabelVector& pred,
                         AgreementRule rule) {
  if (rule == AgreementRule::FullRecall) {
    // every gold label recovered counts as correct, extras tolerated
    if ((gold.mask() & pred.mask()) == gold.mask() &&
        (gold.mask() != 0 || pred.mask() == 0))
      return Verdict::Correct;
  }
  if (pred == gold) return Verdict::Correct;
  if ((pred.mask() & gold.mask()) != 0) return Verdict::Partial;
  return Verdict::Wrong;
}

AgreementBreakdown agreement(const std::vector<LabelVector>& gold,
                             const std::vector<LabelVector>& pred_a,
                             const std::vector<LabelVector>& pred_b,
                             AgreementRule rule) {
  if (gold.size() != pred_a.size() || gold.size() != pred_b.size())
    raise(ErrKind::InvalidInput, "agreement: length mismatch");
  AgreementBreakdown out;
  out.total = int(gold.size());
  for (size_t r = 0; r < gold.size(); ++r) {
    Verdict a = classify_verdict(gold[r], pred_a[r], rule);
    Verdict b = classify_verdict(gold[r], pred_b[r], rule);
    out.cells[static_cast<int>(a)][static_cast<int>(b)] += 1;
  }
  return out;
}

double none_corpus_accuracy(const std::vector<DescriptionRecord>& records,
                            const std::vector<LabelVector>& pred) {
  if (records.size() != pred.size())
    raise(ErrKind::InvalidInput, "none_corpus_accuracy: length mismatch");
  if (records.empty())
    raise(ErrKind::InvalidInput, "none_corpus_accuracy over empty input");
  int none = 0;
  for (size_t i = 0; i < records.size(); ++i) {
    if (records[i].source != Source::Generic)
      raise(ErrKind::InvalidInput,
            "none_corpus_accuracy: record " + records[i].id +
                " is not GENERIC");
    if (pred[i].none()) ++none;
  }
  return double(none) / double(records.size());
}

}  // namespace ttpc
