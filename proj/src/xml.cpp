#include "ttpc/xml.hpp"

#include <cctype>

#include "ttpc/errors.hpp"

namespace ttpc::xml {

namespace {

std::string strip_prefix(std::string_view name) {
  size_t colon = name.find(':');
  return std::string(colon == std::string_view::npos ? name
                                                     : name.substr(colon + 1));
}

class Parser {
 public:
  explicit Parser(std::string_view doc) : doc_(doc) {}

  std::unique_ptr<Element> parse_document() {
    skip_prolog();
    auto root = parse_element();
    skip_misc();
    if (pos_ != doc_.size())
      fail("trailing content after the document element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    raise_parse("xml: " + what, pos_);
  }

  char peek() const { return pos_ < doc_.size() ? doc_[pos_] : '\0'; }
  bool starts_with(std::string_view s) const {
    return doc_.compare(pos_, s.size(), s) == 0;
  }
  void expect(std::string_view s) {
    if (!starts_with(s)) fail("expected '" + std::string(s) + "'");
    pos_ += s.size();
  }
  void skip_ws() {
    while (pos_ < doc_.size() &&
           std::isspace(static_cast<unsigned char>(doc_[pos_])))
      ++pos_;
  }

  void skip_comment() {
    expect("<!--");
    size_t end = doc_.find("-->", pos_);
    if (end == std::string_view::npos) fail("unterminated comment");
    pos_ = end + 3;
  }

  void skip_pi() {
    expect("<?");
    size_t end = doc_.find("?>", pos_);
    if (end == std::string_view::npos) fail("unterminated processing instruction");
    pos_ = end + 2;
  }

  void skip_doctype() {
    expect("<!DOCTYPE");
    int depth = 1;
    while (pos_ < doc_.size() && depth > 0) {
      if (doc_[pos_] == '<') ++depth;
      if (doc_[pos_] == '>') --depth;
      ++pos_;
    }
    if (depth != 0) fail("unterminated DOCTYPE");
  }

  void skip_prolog() {
    for (;;) {
      skip_ws();
      if (starts_with("<?"))
        skip_pi();
      else if (starts_with("<!--"))
        skip_comment();
      else if (starts_with("<!DOCTYPE"))
        skip_doctype();
      else
        break;
    }
  }

  void skip_misc() {
    for (;;) {
      skip_ws();
      if (starts_with("<!--"))
        skip_comment();
      else if (starts_with("<?"))
        skip_pi();
      else
        break;
    }
  }

  bool name_char(char c) const {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
           c == '-' || c == ':' || c == '.';
  }

  std::string read_name() {
    size_t start = pos_;
    while (pos_ < doc_.size() && name_char(doc_[pos_])) ++pos_;
    if (pos_ == start) fail("expected a name");
    return std::string(doc_.substr(start, pos_ - start));
  }

  std::string decode_entities(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (size_t i = 0; i < raw.size();) {
      if (raw[i] != '&') {
        out += raw[i++];
        continue;
      }
      size_t semi = raw.find(';', i);
      if (semi == std::string_view::npos) fail("unterminated entity");
      std::string_view ent = raw.substr(i + 1, semi - i - 1);
      if (ent == "amp")
        out += '&';
      else if (ent == "lt")
        out += '<';
      else if (ent == "gt")
        out += '>';
      else if (ent == "quot")
        out += '"';
      else if (ent == "apos")
        out += '\'';
      else if (!ent.empty() && ent[0] == '#') {
        long code = 0;
        if (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X'))
          code = std::strtol(std::string(ent.substr(2)).c_str(), nullptr, 16);
        else
          code = std::strtol(std::string(ent.substr(1)).c_str(), nullptr, 10);
        // UTF-8 encode
        if (code < 0x80) {
          out += char(code);
        } else if (code < 0x800) {
          out += char(0xC0 | (code >> 6));
          out += char(0x80 | (code & 0x3F));
        } else if (code < 0x10000) {
          out += char(0xE0 | (code >> 12));
          out += char(0x80 | ((code >> 6) & 0x3F));
          out += char(0x80 | (code & 0x3F));
        } else {
          out += char(0xF0 | (code >> 18));
          out += char(0x80 | ((code >> 12) & 0x3F));
          out += char(0x80 | ((code >> 6) & 0x3F));
          out += char(0x80 | (code & 0x3F));
        }
      } else {
        fail("unknown entity: &" + std::string(ent) + ";");
      }
      i = semi + 1;
    }
    return out;
  }

  void parse_attributes(Element& el) {
    for (;;) {
      skip_ws();
      char c = peek();
      if (c == '>' || c == '/' || c == '\0') return;
      std::string name = read_name();
      skip_ws();
      expect("=");
      skip_ws();
      char quote = peek();
      if (quote != '"' && quote != '\'') fail("attribute value must be quoted");
      ++pos_;
      size_t end = doc_.find(quote, pos_);
      if (end == std::string_view::npos) fail("unterminated attribute value");
      el.attrs[strip_prefix(name)] = decode_entities(doc_.substr(pos_, end - pos_));
      pos_ = end + 1;
    }
  }

  static void add_text(Element& el, std::string piece) {
    el.text += piece;
    el.chunks.push_back(std::move(piece));
    el.layout.emplace_back(false, el.chunks.size() - 1);
  }

  std::unique_ptr<Element> parse_element() {
    expect("<");
    auto el = std::make_unique<Element>();
    std::string raw_name = read_name();
    el->name = strip_prefix(raw_name);
    parse_attributes(*el);
    skip_ws();
    if (starts_with("/>")) {
      pos_ += 2;
      return el;
    }
    expect(">");

    for (;;) {
      if (pos_ >= doc_.size()) fail("unterminated element <" + raw_name + ">");
      if (starts_with("</")) {
        pos_ += 2;
        std::string close = read_name();
        if (close != raw_name)
          fail("mismatched close tag </" + close + "> for <" + raw_name + ">");
        skip_ws();
        expect(">");
        return el;
      }
      if (starts_with("<!--")) {
        skip_comment();
        continue;
      }
      if (starts_with("<![CDATA[")) {
        pos_ += 9;
        size_t end = doc_.find("]]>", pos_);
        if (end == std::string_view::npos) fail("unterminated CDATA");
        add_text(*el, std::string(doc_.substr(pos_, end - pos_)));
        pos_ = end + 3;
        continue;
      }
      if (starts_with("<?")) {
        skip_pi();
        continue;
      }
      if (peek() == '<') {
        el->children.push_back(parse_element());
        el->layout.emplace_back(true, el->children.size() - 1);
        continue;
      }
      size_t next = doc_.find('<', pos_);
      if (next == std::string_view::npos) fail("unterminated character data");
      add_text(*el, decode_entities(doc_.substr(pos_, next - pos_)));
      pos_ = next;
    }
  }

  std::string_view doc_;
  size_t pos_ = 0;
};

void collect_text(const Element& el, std::string& out) {
  auto append = [&out](std::string_view piece) {
    for (char c : piece) {
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        if (!out.empty() && out.back() != ' ') out += ' ';
      } else {
        out += c;
      }
    }
  };
  for (const auto& [is_element, idx] : el.layout) {
    if (is_element) {
      if (!out.empty() && out.back() != ' ') out += ' ';
      collect_text(*el.children[idx], out);
      if (!out.empty() && out.back() != ' ') out += ' ';
    } else {
      append(el.chunks[idx]);
    }
  }
}

}  // namespace

const Element* Element::first(std::string_view child_name) const {
  for (const auto& c : children)
    if (c->name == child_name) return c.get();
  return nullptr;
}

std::vector<const Element*> Element::all(std::string_view child_name) const {
  std::vector<const Element*> out;
  for (const auto& c : children)
    if (c->name == child_name) out.push_back(c.get());
  return out;
}

std::string Element::attr(std::string_view key, const std::string& fallback) const {
  auto it = attrs.find(std::string(key));
  return it == attrs.end() ? fallback : it->second;
}

std::string Element::deep_text() const {
  std::string out;
  collect_text(*this, out);
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::unique_ptr<Element> parse(std::string_view doc) {
  Parser p(doc);
  return p.parse_document();
}

}  // namespace ttpc::xml
