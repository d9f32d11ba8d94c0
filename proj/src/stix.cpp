#include "ttpc/stix.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ttpc/errors.hpp"

namespace ttpc {

using nlohmann::json;

std::string strip_description_markup(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    // (Citation: ...) markers
    if (text.compare(i, 10, "(Citation:") == 0) {
      size_t close = text.find(')', i);
      if (close != std::string::npos) {
        i = close + 1;
        continue;
      }
    }
    // HTML tags
    if (text[i] == '<') {
      size_t close = text.find('>', i);
      if (close != std::string::npos) {
        i = close + 1;
        continue;
      }
    }
    // markdown links [text](url) -> text
    if (text[i] == '[') {
      size_t close = text.find(']', i);
      if (close != std::string::npos && close + 1 < n && text[close + 1] == '(') {
        size_t paren = text.find(')', close + 1);
        if (paren != std::string::npos) {
          out.append(text, i + 1, close - i - 1);
          i = paren + 1;
          continue;
        }
      }
    }
    if (text[i] == '`') {  // inline code markers
      ++i;
      continue;
    }
    out += text[i++];
  }
  // collapse whitespace runs
  std::string collapsed;
  collapsed.reserve(out.size());
  bool in_space = false;
  for (char c : out) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      in_space = true;
    } else {
      if (in_space && !collapsed.empty()) collapsed += ' ';
      in_space = false;
      collapsed += c;
    }
  }
  return collapsed;
}

namespace {

bool object_active(const json& o) {
  if (o.value("revoked", false)) return false;
  if (o.value("x_mitre_deprecated", false)) return false;
  return true;
}

bool enterprise_domain(const json& o) {
  if (!o.contains("x_mitre_domains")) return true;  // older bundles omit it
  for (const auto& d : o["x_mitre_domains"])
    if (d.get<std::string>() == "enterprise-attack") return true;
  return false;
}

std::string external_id(const json& o) {
  if (!o.contains("external_references")) return {};
  for (const auto& ref : o["external_references"]) {
    const std::string src = ref.value("source_name", "");
    if (src == "mitre-attack" || src == "mitre-atlas")
      return ref.value("external_id", "");
  }
  return {};
}

}  // namespace

AttackParseResult parse_attack_bundle(const std::string& bundle_json) {
  json bundle;
  try {
    bundle = json::parse(bundle_json);
  } catch (const json::parse_error& e) {
    raise_parse("STIX bundle is not valid JSON: " + std::string(e.what()),
                e.byte);
  }
  if (!bundle.is_object() || bundle.value("type", "") != "bundle" ||
      !bundle.contains("objects") || !bundle["objects"].is_array())
    raise(ErrKind::Schema, "document is not a STIX bundle with objects[]");

  AttackParseResult result;
  auto& rep = result.report;

  for (const auto& o : bundle["objects"]) {
    if (!o.is_object()) continue;
    const std::string type = o.value("type", "");
    const std::string stix_id = o.value("id", "");

    if (type == "x-mitre-tactic") {
      if (!object_active(o) || !enterprise_domain(o)) continue;
      const std::string shortname = o.value("x_mitre_shortname", "");
      auto tactic = tactic_from_shortname(shortname);
      if (!tactic) {
        rep.rejects.push_back({stix_id, "unknown tactic shortname: " + shortname});
        continue;
      }
      DescriptionRecord r;
      r.id = external_id(o);
      if (r.id.empty()) {
        rep.rejects.push_back({stix_id, "tactic without external id"});
        continue;
      }
      r.source = Source::Attack;
      r.text = strip_description_markup(o.value("description", ""));
      r.gold.set(*tactic);
      if (r.text.empty()) {
        rep.rejects.push_back({stix_id, "tactic with empty description"});
        continue;
      }
      rep.trace.push_back({r.id, stix_id, {shortname}});
      result.records.push_back(std::move(r));
      continue;
    }

    if (type != "attack-pattern") continue;
    if (!object_active(o)) {
      rep.rejects.push_back({stix_id, "revoked or deprecated"});
      continue;
    }
    if (!enterprise_domain(o)) {
      rep.rejects.push_back({stix_id, "not in the enterprise domain"});
      continue;
    }

    const std::string ext_id = external_id(o);
    if (ext_id.empty()) {
      rep.rejects.push_back({stix_id, "attack-pattern without external id"});
      continue;
    }

    std::set<Tactic> tactics;
    std::vector<std::string> evidence;
    if (o.contains("kill_chain_phases")) {
      for (const auto& ph : o["kill_chain_phases"]) {
        if (ph.value("kill_chain_name", "") != "mitre-attack") continue;
        const std::string phase = ph.value("phase_name", "");
        evidence.push_back(phase);
        auto t = tactic_from_shortname(phase);
        if (t) tactics.insert(*t);
      }
    }
    if (tactics.empty()) {
      rep.rejects.push_back({stix_id, "no recognizable ATT&CK tactic"});
      continue;
    }

    DescriptionRecord r;
    r.id = ext_id;
    r.source = Source::Attack;
    r.text = strip_description_markup(o.value("description", ""));
    r.gold = vector_from_tactics(tactics);
    if (r.text.empty()) {
      rep.rejects.push_back({stix_id, "attack-pattern with empty description"});
      continue;
    }
    result.technique_index[ext_id] = tactics;
    rep.trace.push_back({r.id, stix_id, evidence});
    result.records.push_back(std::move(r));
  }

  std::sort(result.records.begin(), result.records.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  std::sort(rep.trace.begin(), rep.trace.end(),
            [](const auto& a, const auto& b) { return a.record_id < b.record_id; });
  return result;
}

AttackParseResult parse_attack_bundle_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrKind::Io, "cannot open bundle: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_attack_bundle(ss.str());
}

}  // namespace ttpc
