#include "ttpc/records.hpp"

#include "ttpc/errors.hpp"

namespace ttpc {

const std::string& source_name(Source s) {
  static const std::string names[3] = {"ATTACK", "CAPEC", "GENERIC"};
  return names[static_cast<int>(s)];
}

Source source_from_name(const std::string& name) {
  if (name == "ATTACK") return Source::Attack;
  if (name == "CAPEC") return Source::Capec;
  if (name == "GENERIC") return Source::Generic;
  raise(ErrKind::Schema, "unknown record source: " + name);
}

void DescriptionRecord::validate() const {
  if (id.empty()) raise(ErrKind::Schema, "record has empty id");
  if (text.empty()) raise(ErrKind::Schema, "record " + id + " has empty text");
  if (source == Source::Generic) {
    if (!gold.none())
      raise(ErrKind::Schema,
            "GENERIC record " + id + " must carry the NONE label vector");
  } else {
    if (gold.none())
      raise(ErrKind::Schema,
            "record " + id + " from " + source_name(source) +
                " must have at least one tactic");
  }
}

std::vector<int> FoldAssignment::fold_sizes() const {
  std::vector<int> sizes(k, 0);
  for (const auto& [id, fold] : assignment) {
    (void)id;
    sizes.at(fold) += 1;
  }
  return sizes;
}

}  // namespace ttpc
