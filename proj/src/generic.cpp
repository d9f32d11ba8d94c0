#include "ttpc/generic.hpp"

#include <fstream>

#include <json.hpp>

#include "ttpc/errors.hpp"

namespace ttpc {

using nlohmann::json;

GenericParseResult load_generic_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrKind::Io, "cannot open generic corpus: " + path.string());

  GenericParseResult result;
  std::string line;
  size_t line_no = 0;
  int index = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    DescriptionRecord r;
    r.source = Source::Generic;
    if (line.front() == '{') {
      json o;
      try {
        o = json::parse(line);
      } catch (const json::parse_error& e) {
        raise(ErrKind::Parse, path.string() + ":" + std::to_string(line_no) +
                                  ": bad JSONL entry: " + e.what());
      }
      if (!o.contains("text") || !o["text"].is_string())
        raise(ErrKind::Schema, path.string() + ":" + std::to_string(line_no) +
                                   ": JSONL entry missing \"text\"");
      r.text = o["text"].get<std::string>();
      if (o.contains("id")) r.id = o["id"].get<std::string>();
    } else {
      r.text = line;
    }
    if (r.id.empty()) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "GEN-%04d", index);
      r.id = buf;
    }
    ++index;
    r.validate();
    result.records.push_back(std::move(r));
  }
  result.empty_input_warning = result.records.empty();
  return result;
}

}  // namespace ttpc
