#include "ttpc/dataset.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "ttpc/errors.hpp"

namespace ttpc {

using nlohmann::json;
namespace fs = std::filesystem;

std::string dataset_header_line() {
  json h;
  h["format_version"] = kDatasetFormatVersion;
  h["tactic_order"] = tactic_canonical_names();
  return h.dump();
}

std::string dataset_line(const DescriptionRecord& r) {
  json o;
  o["id"] = r.id;
  o["source"] = source_name(r.source);
  o["text"] = r.text;
  std::vector<std::string> names;
  for (Tactic t : tactics_from_vector(r.gold)) names.push_back(canonical_name(t));
  o["tactics"] = names;
  return o.dump();
}

void save_dataset(const std::vector<DescriptionRecord>& records,
                  const fs::path& path) {
  for (const auto& r : records) r.validate();
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrKind::Io, "cannot write dataset: " + path.string());
    out << dataset_header_line() << '\n';
    for (const auto& r : records) out << dataset_line(r) << '\n';
    if (!out) raise(ErrKind::Io, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

[[noreturn]] void line_error(const fs::path& path, size_t line_no,
                             const std::string& what) {
  raise(ErrKind::Schema,
        path.string() + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

std::vector<DescriptionRecord> load_dataset(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrKind::Io, "cannot open dataset: " + path.string());

  std::string line;
  size_t line_no = 0;
  if (!std::getline(in, line)) raise(ErrKind::Schema, "empty dataset file: " + path.string());
  ++line_no;

  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error& e) {
    line_error(path, line_no, std::string("bad header: ") + e.what());
  }
  if (!header.contains("format_version") ||
      header["format_version"].get<int>() != kDatasetFormatVersion)
    line_error(path, line_no, "unsupported or missing format_version");
  if (!header.contains("tactic_order") || !header["tactic_order"].is_array())
    line_error(path, line_no, "missing tactic_order header");
  const auto& order = header["tactic_order"];
  const auto& names = tactic_canonical_names();
  if (order.size() != names.size())
    line_error(path, line_no, "tactic_order must list all 14 tactics");
  for (size_t i = 0; i < names.size(); ++i) {
    if (order[i].get<std::string>() != names[i])
      line_error(path, line_no,
                 "tactic_order mismatch at position " + std::to_string(i) +
                     ": expected " + names[i] + ", got " +
                     order[i].get<std::string>());
  }

  std::vector<DescriptionRecord> out;
  std::set<std::string> seen_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json o;
    try {
      o = json::parse(line);
    } catch (const json::parse_error& e) {
      line_error(path, line_no, std::string("bad record json: ") + e.what());
    }
    DescriptionRecord r;
    try {
      r.id = o.at("id").get<std::string>();
      r.source = source_from_name(o.at("source").get<std::string>());
      r.text = o.at("text").get<std::string>();
      const auto& tactics = o.at("tactics");
      if (!tactics.is_array())
        line_error(path, line_no, "tactics must be an array");
      if (tactics.size() > size_t(kTacticCount))
        line_error(path, line_no,
                   "tactics list has " + std::to_string(tactics.size()) +
                       " entries; at most 14 are possible");
      std::set<Tactic> set;
      for (const auto& name : tactics) {
        auto t = tactic_from_canonical(name.get<std::string>());
        if (!t)
          line_error(path, line_no,
                     "unknown tactic name: " + name.get<std::string>());
        if (!set.insert(*t).second)
          line_error(path, line_no,
                     "duplicate tactic: " + name.get<std::string>());
      }
      r.gold = vector_from_tactics(set);
    } catch (const json::exception& e) {
      line_error(path, line_no, std::string("bad record: ") + e.what());
    }
    if (!seen_ids.insert(r.id).second)
      line_error(path, line_no, "duplicate record id: " + r.id);
    try {
      r.validate();
    } catch (const Error& e) {
      line_error(path, line_no, e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace ttpc
