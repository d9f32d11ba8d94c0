#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace ttpc::xml {

// Small DOM parser covering the XML subset used by CAPEC catalogs:
// elements with namespace prefixes, attributes, character data, CDATA,
// comments, processing instructions, DOCTYPE, and the five predefined
// entities plus numeric character references. Not a validating parser.
struct Element {
  std::string name;  // prefix stripped: "capec:Attack_Pattern" -> "Attack_Pattern"
  std::map<std::string, std::string> attrs;
  std::vector<std::unique_ptr<Element>> children;
  std::string text;  // concatenated direct character data
  // document order of mixed content: (is_element, index into children/chunks)
  std::vector<std::pair<bool, size_t>> layout;
  std::vector<std::string> chunks;  // direct text pieces in document order

  const Element* first(std::string_view child_name) const;
  std::vector<const Element*> all(std::string_view child_name) const;
  std::string attr(std::string_view key, const std::string& fallback = "") const;
  // All character data in this subtree, element boundaries separated by
  // single spaces, whitespace collapsed.
  std::string deep_text() const;
};

// Parses a whole document and returns the root element. Throws
// ErrKind::Parse with a byte offset on malformed input.
std::unique_ptr<Element> parse(std::string_view doc);

}  // namespace ttpc::xml
