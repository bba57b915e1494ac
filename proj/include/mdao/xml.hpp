#pragma once

// Minimal XML element reader/writer for the exchange files used in this
// project. Supports elements, attributes, character data, comments,
// processing instructions, CDATA and the predefined/numeric entities.
// DTDs and namespaces are not supported.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mdao/error.hpp"

namespace mdao::xml {

struct Element {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Element> children;
  std::string text;  // concatenated character data, untrimmed
  int line = 0;
  int column = 0;

  std::optional<std::string> attribute(std::string_view key) const;
  const Element* child(std::string_view child_name) const;
  std::vector<const Element*> children_named(std::string_view child_name) const;
  bool has_text() const;  // any non-whitespace character data
  std::string trimmed_text() const;
};

/// Parses a complete document with exactly one root element.
/// Throws ParseError carrying the 1-based line/column of the problem.
Element parse(std::string_view document);

std::string escape(std::string_view raw, bool attribute);

std::string_view trim(std::string_view s);

}  // namespace mdao::xml
