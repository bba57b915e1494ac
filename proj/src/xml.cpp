#include "mdao/xml.hpp"

#include <cctype>
#include <cstdint>

namespace mdao::xml {

std::optional<std::string> Element::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (k == key) return v;
  }
  return std::nullopt;
}

const Element* Element::child(std::string_view child_name) const {
  for (const auto& c : children) {
    if (c.name == child_name) return &c;
  }
  return nullptr;
}

std::vector<const Element*> Element::children_named(std::string_view child_name) const {
  std::vector<const Element*> out;
  for (const auto& c : children) {
    if (c.name == child_name) out.push_back(&c);
  }
  return out;
}

std::string_view trim(std::string_view s) {
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool Element::has_text() const { return !trim(text).empty(); }

std::string Element::trimmed_text() const { return std::string(trim(text)); }

std::string escape(std::string_view raw, bool attribute) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"':
        if (attribute) {
          out += "&quot;";
        } else {
          out += c;
        }
        break;
      default: out += c;
    }
  }
  return out;
}

namespace {

class Reader {
 public:
  explicit Reader(std::string_view doc) : doc_(doc) {}

  Element document() {
    skip_misc();
    if (at_end()) fail("document has no root element");
    if (!starts_with("<") || starts_with("</")) fail("expected root element");
    Element root = element();
    skip_misc();
    if (!at_end()) fail("content after the root element");
    return root;
  }

 private:
  std::string_view doc_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_, column_); }

  bool at_end() const { return pos_ >= doc_.size(); }
  char peek() const { return at_end() ? '\0' : doc_[pos_]; }
  bool starts_with(std::string_view s) const { return doc_.substr(pos_, s.size()) == s; }

  char advance() {
    char c = doc_[pos_++];
    if (c == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    return c;
  }

  void advance(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) advance();
  }

  void expect(std::string_view s) {
    if (!starts_with(s)) fail("expected '" + std::string(s) + "'");
    advance(s.size());
  }

  static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
  static bool is_name_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ':' ||
           static_cast<unsigned char>(c) >= 0x80;
  }
  static bool is_name_char(char c) {
    return is_name_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.';
  }

  void skip_space() {
    while (!at_end() && is_space(peek())) advance();
  }

  void skip_until(std::string_view terminator, const char* what) {
    while (!at_end() && !starts_with(terminator)) advance();
    if (at_end()) fail(std::string("unterminated ") + what);
    advance(terminator.size());
  }

  // Prolog/epilog: whitespace, comments, processing instructions.
  void skip_misc() {
    for (;;) {
      skip_space();
      if (starts_with("<?")) {
        skip_until("?>", "processing instruction");
      } else if (starts_with("<!--")) {
        skip_until("-->", "comment");
      } else if (starts_with("<!DOCTYPE")) {
        fail("DOCTYPE declarations are not supported");
      } else {
        return;
      }
    }
  }

  std::string name() {
    if (!is_name_start(peek())) fail("expected a name");
    std::size_t start = pos_;
    while (!at_end() && is_name_char(peek())) advance();
    return std::string(doc_.substr(start, pos_ - start));
  }

  static void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  void entity(std::string& out) {
    expect("&");
    std::size_t start = pos_;
    while (!at_end() && peek() != ';' && pos_ - start < 12) advance();
    if (peek() != ';') fail("unterminated entity reference");
    std::string_view ref = doc_.substr(start, pos_ - start);
    advance();
    if (ref == "lt") {
      out += '<';
    } else if (ref == "gt") {
      out += '>';
    } else if (ref == "amp") {
      out += '&';
    } else if (ref == "quot") {
      out += '"';
    } else if (ref == "apos") {
      out += '\'';
    } else if (ref.size() > 1 && ref[0] == '#') {
      std::uint32_t cp = 0;
      bool hex = ref[1] == 'x';
      std::string_view digits = ref.substr(hex ? 2 : 1);
      if (digits.empty()) fail("empty character reference");
      for (char c : digits) {
        int d;
        if (std::isdigit(static_cast<unsigned char>(c))) {
          d = c - '0';
        } else if (hex && std::isxdigit(static_cast<unsigned char>(c))) {
          d = std::tolower(static_cast<unsigned char>(c)) - 'a' + 10;
        } else {
          fail("invalid character reference");
        }
        cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(d);
        if (cp > 0x10FFFF) fail("character reference out of range");
      }
      append_utf8(out, cp);
    } else {
      fail("unknown entity '&" + std::string(ref) + ";'");
    }
  }

  std::string attribute_value() {
    char quote = peek();
    if (quote != '"' && quote != '\'') fail("expected quoted attribute value");
    advance();
    std::string value;
    while (!at_end() && peek() != quote) {
      if (peek() == '<') fail("'<' in attribute value");
      if (peek() == '&') {
        entity(value);
      } else {
        value += advance();
      }
    }
    if (at_end()) fail("unterminated attribute value");
    advance();
    return value;
  }

  Element element() {
    Element el;
    el.line = line_;
    el.column = column_;
    expect("<");
    el.name = name();
    for (;;) {
      bool had_space = !at_end() && is_space(peek());
      skip_space();
      if (starts_with("/>")) {
        advance(2);
        return el;
      }
      if (starts_with(">")) {
        advance();
        break;
      }
      if (!had_space) fail("expected whitespace, '>' or '/>'");
      std::string key = name();
      for (const auto& [k, v] : el.attributes) {
        if (k == key) fail("duplicate attribute '" + key + "'");
      }
      skip_space();
      expect("=");
      skip_space();
      el.attributes.emplace_back(std::move(key), attribute_value());
    }
    // content
    for (;;) {
      if (at_end()) fail("unterminated element <" + el.name + ">");
      if (starts_with("</")) {
        advance(2);
        std::string closing = name();
        if (closing != el.name) fail("mismatched closing tag </" + closing + "> for <" + el.name + ">");
        skip_space();
        expect(">");
        return el;
      }
      if (starts_with("<!--")) {
        skip_until("-->", "comment");
      } else if (starts_with("<![CDATA[")) {
        advance(9);
        std::size_t start = pos_;
        while (!at_end() && !starts_with("]]>")) advance();
        if (at_end()) fail("unterminated CDATA section");
        el.text += doc_.substr(start, pos_ - start);
        advance(3);
      } else if (starts_with("<?")) {
        skip_until("?>", "processing instruction");
      } else if (starts_with("<")) {
        el.children.push_back(element());
      } else if (peek() == '&') {
        entity(el.text);
      } else {
        el.text += advance();
      }
    }
  }
};

}  // namespace

Element parse(std::string_view document) { return Reader(document).document(); }

}  // namespace mdao::xml
