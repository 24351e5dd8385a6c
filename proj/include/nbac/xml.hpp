#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Minimal XML reader for the XACML-subset grammars (manifest and rule
// documents). Supports elements, attributes, text content, comments and an
// optional XML declaration; no namespaces, DTDs or CDATA.

namespace nbac::xml {

struct ParseError : std::runtime_error {
    int line;
    int column;

    ParseError(const std::string& what, int line, int column)
        : std::runtime_error(what + " at line " + std::to_string(line) + ", column " +
                             std::to_string(column)),
          line(line),
          column(column) {}
};

struct Element {
    std::string name;
    std::map<std::string, std::string> attributes;
    std::vector<Element> children;
    std::string text;  // concatenated character data, trimmed
    int line = 0;
    int column = 0;

    const std::string* attribute(const std::string& key) const;
};

// Parses a document fragment: zero or more top-level elements (the manifest
// grammar has no single root).
std::vector<Element> parse_fragment(std::string_view input);

// Escapes &<>"' for text and attribute values.
std::string escape(std::string_view text);

}  // namespace nbac::xml
