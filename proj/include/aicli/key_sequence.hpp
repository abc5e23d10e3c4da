#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "aicli/strings.hpp"

namespace aicli {

class KeySequenceError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A hotkey in two forms: what people write in configuration ("ctrl-x a")
/// and the bytes a terminal delivers to the line editor ("\x18a").
///
/// Tokens are whitespace-separated and case-insensitive:
///   ctrl-<c>   the control character c & 0x1f
///   meta-<c>   ESC followed by c
///   esc, tab, space
///   <c>        a single printable character, lower-cased
class KeySequence {
public:
    KeySequence() = default;

    static KeySequence parse(std::string_view human) {
        auto tokens = split_whitespace(human);
        if (tokens.empty()) throw KeySequenceError("empty key sequence");
        std::string wire;
        for (const auto& raw : tokens) {
            auto token = to_lower(raw);
            if (token.rfind("ctrl-", 0) == 0 || token.rfind("c-", 0) == 0) {
                auto rest = token.substr(token.find('-') + 1);
                if (rest.size() != 1) throw KeySequenceError("bad control key '" + raw + "'");
                wire += static_cast<char>(rest[0] & 0x1f);
            } else if (token.rfind("meta-", 0) == 0 || token.rfind("m-", 0) == 0) {
                auto rest = token.substr(token.find('-') + 1);
                if (rest.size() != 1) throw KeySequenceError("bad meta key '" + raw + "'");
                wire += '\x1b';
                wire += rest[0];
            } else if (token == "esc") {
                wire += '\x1b';
            } else if (token == "tab") {
                wire += '\t';
            } else if (token == "space") {
                wire += ' ';
            } else if (token.size() == 1 && token[0] > 0x20 && token[0] < 0x7f) {
                wire += token[0];
            } else {
                throw KeySequenceError("unknown key '" + raw + "'");
            }
        }
        KeySequence seq;
        seq.human_ = to_lower(human);
        seq.wire_ = std::move(wire);
        return seq;
    }

    static KeySequence default_binding() { return parse("ctrl-x a"); }

    const std::string& human() const noexcept { return human_; }
    const std::string& wire() const noexcept { return wire_; }

    // The wire form as the editor's key-sequence binder expects it; that
    // function treats backslash as an escape introducer.
    std::string editor_keyseq() const { return replace_all(wire_, "\\", "\\\\"); }

    friend bool operator==(const KeySequence& a, const KeySequence& b) { return a.wire_ == b.wire_; }

private:
    std::string human_;
    std::string wire_;
};

}  // namespace aicli
