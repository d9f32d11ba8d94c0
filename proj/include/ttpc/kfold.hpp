#pragma once

#include <vector>

#include "ttpc/records.hpp"

namespace ttpc {

// Deterministic shuffled k-fold partition. Fold sizes differ by at most
// one (the first n % k folds get the extra record); identical
// (record set, k, seed) inputs yield the identical assignment.
FoldAssignment kfold_split(const std::vector<DescriptionRecord>& records,
                           int k, uint64_t seed);

// Deterministic n-of-m subset used by the reduced training criteria:
// seeded shuffle, first n picks, original order restored.
std::vector<DescriptionRecord> sample_records(
    const std::vector<DescriptionRecord>& records, size_t n, uint64_t seed);

}  // namespace ttpc
