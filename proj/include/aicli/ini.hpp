#pragma once

// The INI dialect shared by configuration files and mock-server rule files:
//
//   # comment            (whole lines only, so values may contain '#')
//   [section]
//   key = value
//   long = first line \   <- a trailing backslash continues the value
//          second line      (continuation lines join with '\n')

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "aicli/strings.hpp"

namespace aicli::ini {

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct Entry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

struct Section {
    std::string name;
    std::size_t line = 0;
    std::vector<Entry> entries;

    const Entry* find(std::string_view key) const {
        const Entry* found = nullptr;
        for (const auto& e : entries)
            if (e.key == key) found = &e;
        return found;
    }
};

struct Document {
    std::vector<Section> sections;
};

inline Document parse(std::string_view text) {
    Document doc;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    Entry* pending = nullptr;  // entry whose value continues on the next line

    auto next_line = [&](std::string_view& out) {
        if (pos >= text.size()) return false;
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        out = text.substr(pos, nl - pos);
        if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
        pos = nl + 1;
        ++line_no;
        return true;
    };

    auto strip_continuation = [](std::string_view v, bool& continues) {
        continues = !v.empty() && v.back() == '\\';
        if (continues) v = trim(v.substr(0, v.size() - 1));
        return std::string(v);
    };

    std::string_view raw;
    while (next_line(raw)) {
        auto line = trim(raw);
        if (pending) {
            bool continues = false;
            pending->value += '\n';
            pending->value += strip_continuation(line, continues);
            if (!continues) pending = nullptr;
            continue;
        }
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
            auto name = trim(line.substr(1, line.size() - 2));
            if (name.empty()) throw ParseError(line_no, "empty section name");
            doc.sections.push_back(Section{to_lower(name), line_no, {}});
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
        auto key = trim(line.substr(0, eq));
        if (key.empty()) throw ParseError(line_no, "empty key");
        if (doc.sections.empty()) throw ParseError(line_no, "key '" + std::string(key) + "' outside any section");
        bool continues = false;
        auto value = strip_continuation(trim(line.substr(eq + 1)), continues);
        auto& entries = doc.sections.back().entries;
        entries.push_back(Entry{to_lower(key), std::move(value), line_no});
        if (continues) pending = &entries.back();
    }
    if (pending) throw ParseError(line_no, "continuation at end of input");
    return doc;
}

// Writes a value so that parse() reads it back unchanged, provided no line of
// it has surrounding whitespace or ends in a backslash. Embedded newlines
// become continuation lines.
inline std::string format_value(std::string_view value) {
    return replace_all(std::string(value), "\n", " \\\n");
}

}  // namespace aicli::ini
