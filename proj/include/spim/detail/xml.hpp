#pragma once

// Minimal non-validating XML reader: elements, attributes, character data,
// the five predefined entities and numeric character references. Comments and
// processing instructions are skipped; DOCTYPE and CDATA are rejected.

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spim::detail {

struct XmlElement {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<XmlElement> children;
  std::string text;  // concatenated character data directly inside this element

  const std::string* attribute(std::string_view key) const noexcept;
};

/// Throws spim::Error(Errc::malformed) on anything it cannot read.
XmlElement parse_xml(std::string_view doc);

}  // namespace spim::detail
