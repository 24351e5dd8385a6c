#include "nbac/xml.hpp"

#include <cctype>

namespace nbac::xml {

const std::string* Element::attribute(const std::string& key) const {
    auto it = attributes.find(key);
    return it == attributes.end() ? nullptr : &it->second;
}

namespace {

class Reader {
public:
    explicit Reader(std::string_view input) : input_(input) {}

    std::vector<Element> parse_fragment() {
        std::vector<Element> roots;
        skip_misc();
        while (!eof()) {
            if (peek() != '<') fail("expected element");
            roots.push_back(parse_element());
            skip_misc();
        }
        return roots;
    }

private:
    std::string_view input_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;

    bool eof() const { return pos_ >= input_.size(); }
    char peek() const { return input_[pos_]; }

    char advance() {
        char c = input_[pos_++];
        if (c == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        return c;
    }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_, column_); }

    bool starts_with(std::string_view s) const { return input_.substr(pos_, s.size()) == s; }

    void expect(std::string_view s) {
        if (!starts_with(s)) fail("expected '" + std::string(s) + "'");
        for (std::size_t i = 0; i < s.size(); ++i) advance();
    }

    void skip_ws() {
        while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) advance();
    }

    // Whitespace, comments and the optional <?xml ...?> declaration.
    void skip_misc() {
        for (;;) {
            skip_ws();
            if (starts_with("<!--")) {
                expect("<!--");
                while (!eof() && !starts_with("-->")) advance();
                if (eof()) fail("unterminated comment");
                expect("-->");
            } else if (starts_with("<?")) {
                expect("<?");
                while (!eof() && !starts_with("?>")) advance();
                if (eof()) fail("unterminated processing instruction");
                expect("?>");
            } else {
                return;
            }
        }
    }

    std::string parse_name() {
        std::string name;
        while (!eof()) {
            char c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' ||
                c == ':') {
                name.push_back(advance());
            } else {
                break;
            }
        }
        if (name.empty()) fail("expected name");
        return name;
    }

    std::string parse_entity() {
        expect("&");
        std::string ref;
        while (!eof() && peek() != ';') ref.push_back(advance());
        if (eof()) fail("unterminated entity reference");
        advance();  // ';'
        if (ref == "lt") return "<";
        if (ref == "gt") return ">";
        if (ref == "amp") return "&";
        if (ref == "quot") return "\"";
        if (ref == "apos") return "'";
        fail("unknown entity '&" + ref + ";'");
    }

    std::string parse_attr_value() {
        if (eof() || (peek() != '"' && peek() != '\'')) fail("expected quoted attribute value");
        char quote = advance();
        std::string value;
        while (!eof() && peek() != quote) {
            if (peek() == '&')
                value += parse_entity();
            else
                value.push_back(advance());
        }
        if (eof()) fail("unterminated attribute value");
        advance();  // closing quote
        return value;
    }

    Element parse_element() {
        int el_line = line_;
        int el_column = column_;
        expect("<");
        Element el;
        el.line = el_line;
        el.column = el_column;
        el.name = parse_name();

        for (;;) {
            skip_ws();
            if (eof()) fail("unterminated start tag");
            if (peek() == '>') {
                advance();
                break;
            }
            if (starts_with("/>")) {
                expect("/>");
                return el;
            }
            std::string attr = parse_name();
            skip_ws();
            expect("=");
            skip_ws();
            if (!el.attributes.emplace(attr, parse_attr_value()).second)
                fail("duplicate attribute '" + attr + "'");
        }

        std::string text;
        for (;;) {
            if (eof()) fail("unterminated element '" + el.name + "'");
            if (starts_with("</")) {
                expect("</");
                std::string closing = parse_name();
                if (closing != el.name)
                    fail("mismatched closing tag '" + closing + "' for '" + el.name + "'");
                skip_ws();
                expect(">");
                break;
            }
            if (starts_with("<!--")) {
                skip_misc();
            } else if (peek() == '<') {
                el.children.push_back(parse_element());
            } else if (peek() == '&') {
                text += parse_entity();
            } else {
                text.push_back(advance());
            }
        }

        auto first = text.find_first_not_of(" \t\r\n");
        if (first != std::string::npos) {
            auto last = text.find_last_not_of(" \t\r\n");
            el.text = text.substr(first, last - first + 1);
        }
        return el;
    }
};

}  // namespace

std::vector<Element> parse_fragment(std::string_view input) { return Reader(input).parse_fragment(); }

std::string escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

}  // namespace nbac::xml
