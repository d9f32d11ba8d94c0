#include "ttpc/capec.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ttpc/errors.hpp"
#include "ttpc/stix.hpp"
#include "ttpc/xml.hpp"

namespace ttpc {

CapecParseResult parse_capec_catalog(
    const std::string& catalog_xml,
    const std::map<std::string, std::set<Tactic>>& attack_index) {
  auto root = xml::parse(catalog_xml);
  if (root->name != "Attack_Pattern_Catalog")
    raise(ErrKind::Schema, "root element is not Attack_Pattern_Catalog");
  const xml::Element* patterns = root->first("Attack_Patterns");
  if (!patterns)
    raise(ErrKind::Schema, "catalog has no Attack_Patterns section");

  CapecParseResult result;
  auto& rep = result.report;

  for (const xml::Element* ap : patterns->all("Attack_Pattern")) {
    const std::string capec_id = "CAPEC-" + ap->attr("ID", "?");
    const std::string status = ap->attr("Status");
    if (status == "Deprecated") {
      rep.rejects.push_back({capec_id, "deprecated pattern"});
      continue;
    }
    result.total_patterns += 1;

    std::set<Tactic> tactics;
    std::vector<std::string> used_refs;
    bool has_attack_mapping = false;
    if (const xml::Element* maps = ap->first("Taxonomy_Mappings")) {
      for (const xml::Element* m : maps->all("Taxonomy_Mapping")) {
        if (m->attr("Taxonomy_Name") != "ATTACK") continue;
        has_attack_mapping = true;
        const xml::Element* entry = m->first("Entry_ID");
        if (!entry) continue;
        // CAPEC writes ATT&CK ids without the T prefix, e.g. "1574.010".
        std::string tid = entry->deep_text();
        if (!tid.empty() && tid[0] != 'T') tid = "T" + tid;
        auto it = attack_index.find(tid);
        if (it == attack_index.end()) {
          rep.rejects.push_back(
              {capec_id, "reference to unknown technique " + tid + " skipped"});
          rep.skipped_references += 1;
          continue;
        }
        tactics.insert(it->second.begin(), it->second.end());
        used_refs.push_back(tid);
      }
    }

    if (!has_attack_mapping) continue;  // not in scope: no ATT&CK relevance
    if (tactics.empty()) {
      rep.rejects.push_back(
          {capec_id, "all ATT&CK references unresolved; pattern excluded"});
      continue;
    }

    const xml::Element* desc = ap->first("Description");
    std::string text = desc ? desc->deep_text() : "";
    if (const xml::Element* ext = ap->first("Extended_Description")) {
      std::string more = ext->deep_text();
      if (!more.empty()) {
        if (!text.empty()) text += ' ';
        text += more;
      }
    }
    text = strip_description_markup(text);
    if (text.empty()) {
      rep.rejects.push_back({capec_id, "pattern with empty description"});
      continue;
    }

    DescriptionRecord r;
    r.id = capec_id;
    r.source = Source::Capec;
    r.text = std::move(text);
    r.gold = vector_from_tactics(tactics);
    rep.trace.push_back({r.id, capec_id, used_refs});
    result.records.push_back(std::move(r));
  }

  std::sort(result.records.begin(), result.records.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  std::sort(rep.trace.begin(), rep.trace.end(),
            [](const auto& a, const auto& b) { return a.record_id < b.record_id; });
  return result;
}

CapecParseResult parse_capec_catalog_file(
    const std::filesystem::path& path,
    const std::map<std::string, std::set<Tactic>>& attack_index) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrKind::Io, "cannot open CAPEC catalog: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_capec_catalog(ss.str(), attack_index);
}

}  // namespace ttpc
