#include "ttpc/kfold.hpp"

#include <algorithm>
#include <numeric>

#include "ttpc/errors.hpp"
#include "ttpc/rng.hpp"

namespace ttpc {

FoldAssignment kfold_split(const std::vector<DescriptionRecord>& records,
                           int k, uint64_t seed) {
  if (records.empty()) raise(ErrKind::InvalidInput, "kfold over empty record set");
  if (k < 2) raise(ErrKind::InvalidInput, "kfold requires k >= 2");
  if (size_t(k) > records.size())
    raise(ErrKind::InvalidInput,
          "k=" + std::to_string(k) + " exceeds record count " +
              std::to_string(records.size()));

  // Shuffle a canonical (sorted) id list so the assignment depends only on
  // the record set, not on input order.
  std::vector<std::string> ids;
  ids.reserve(records.size());
  for (const auto& r : records) ids.push_back(r.id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    raise(ErrKind::InvalidInput, "duplicate record ids in kfold input");

  Rng rng(seed);
  rng.shuffle(ids);

  const size_t n = ids.size();
  const size_t base = n / size_t(k);
  const size_t extra = n % size_t(k);

  FoldAssignment fa;
  fa.k = k;
  fa.seed = seed;
  size_t at = 0;
  for (int f = 0; f < k; ++f) {
    size_t size = base + (size_t(f) < extra ? 1 : 0);
    for (size_t i = 0; i < size; ++i) fa.assignment[ids[at++]] = f;
  }
  return fa;
}

std::vector<DescriptionRecord> sample_records(
    const std::vector<DescriptionRecord>& records, size_t n, uint64_t seed) {
  if (n >= records.size()) return records;
  std::vector<size_t> idx(records.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  std::vector<DescriptionRecord> out;
  out.reserve(n);
  for (size_t i : idx) out.push_back(records[i]);
  return out;
}

}  // namespace ttpc
