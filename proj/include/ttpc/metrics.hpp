#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ttpc/records.hpp"
#include "ttpc/tactics.hpp"

namespace ttpc {

struct TacticScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int support = 0;          // gold positives for this tactic
  bool undefined = false;   // some denominator was zero; value reported as 0
  int64_t tp = 0, fp = 0, fn = 0;
};

struct MetricsReport {
  double micro_f1 = 0.0;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double exact_match_accuracy = 0.0;
  std::array<TacticScore, kTacticCount> per_tactic;
  int n_records = 0;
  int64_t tp = 0, fp = 0, fn = 0;  // aggregated over all tactics
  // Set when the evaluated records overlap the model's training data
  // (deliberate full-corpus re-evaluation); every rendering carries it.
  bool leakage_banner = false;
};

// Multi-label scores from per-class confusion counts. A NONE prediction
// against NONE gold is an exact match and contributes nothing to the
// counts. Zero-denominator cells score 0 with the undefined flag set.
MetricsReport score(const std::vector<LabelVector>& gold,
                    const std::vector<LabelVector>& pred);

struct OverlapMatrix {
  // counts[i][j], i != j: records containing both tactics; counts[i][i]:
  // records whose label set is exactly {i}.
  std::array<std::array<int, kTacticCount>, kTacticCount> counts{};
  std::array<int, kTacticCount> totals{};          // records containing i
  std::array<double, kTacticCount> multi_label_pct{};  // 0 when totals[i]==0
};

OverlapMatrix overlap_matrix(const std::vector<LabelVector>& labels);

enum class Verdict { Correct = 0, Partial = 1, Wrong = 2 };

// CORRECT: prediction equals gold. PARTIAL: proper non-empty overlap.
// WRONG: disjoint from gold. The alternate rule treats any prediction
// covering all gold labels as CORRECT (full recall).
enum class AgreementRule { ExactEquality, FullRecall };

Verdict classify_verdict(const LabelVector& gold, const LabelVector& pred,
                         AgreementRule rule = AgreementRule::ExactEquality);

struct AgreementBreakdown {
  // cells[a][b]: records where model A got verdict a and model B verdict b
  std::array<std::array<int, 3>, 3> cells{};
  int total = 0;

  int at(Verdict a, Verdict b) const {
    return cells[static_cast<int>(a)][static_cast<int>(b)];
  }
};

AgreementBreakdown agreement(const std::vector<LabelVector>& gold,
                             const std::vector<LabelVector>& pred_a,
                             const std::vector<LabelVector>& pred_b,
                             AgreementRule rule = AgreementRule::ExactEquality);

// Fraction of GENERIC records predicted as NONE. Throws when a
// non-GENERIC record is present.
double none_corpus_accuracy(const std::vector<DescriptionRecord>& records,
                            const std::vector<LabelVector>& pred);

}  // namespace ttpc
