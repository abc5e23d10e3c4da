#pragma once

#include <algorithm>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "aicli/config.hpp"
#include "aicli/strings.hpp"

namespace aicli::chat {

enum class Role { system, user, assistant };

inline const char* to_string(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

inline Role role_from_string(std::string_view s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    throw std::invalid_argument("unknown role '" + std::string(s) + "'");
}

struct ChatMessage {
    Role role = Role::user;
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct PromptContext {
    ProgramProfile profile;
    std::vector<std::string> history;  // oldest first
    std::string live_prompt;
    std::string instructions = defaults::instructions;
};

/// A line from the host's history. Prompts that the model failed to answer
/// are put back into history marked `failed` so they never become context.
struct HistoryEntry {
    std::string text;
    bool failed = false;
};

/// The system message: the profile's prompt followed by the standing
/// instructions, with `{comment}` replaced by the profile's comment leader.
inline ChatMessage system_prompt(const ProgramProfile& profile,
                                 std::string_view instructions = defaults::instructions) {
    auto standing = replace_all(std::string(instructions), "{comment}", profile.comment_leader);
    std::string content = profile.system_prompt;
    if (!content.empty() && !standing.empty()) content += ' ';
    content += standing;
    return ChatMessage{Role::system, std::move(content)};
}

/// Builds the message list: system, canned exchanges, the last
/// `history_limit` history lines as user messages, then the live prompt.
inline std::vector<ChatMessage> assemble(const PromptContext& ctx, std::size_t history_limit) {
    if (trim(ctx.live_prompt).empty()) throw std::invalid_argument("live prompt is empty");

    std::size_t history_count = std::min(history_limit, ctx.history.size());
    std::vector<ChatMessage> messages;
    messages.reserve(2 + 2 * ctx.profile.exchanges.size() + history_count);

    messages.push_back(system_prompt(ctx.profile, ctx.instructions));
    for (const auto& ex : ctx.profile.exchanges) {
        messages.push_back(ChatMessage{Role::user, ex.user});
        messages.push_back(ChatMessage{Role::assistant, ex.assistant});
    }
    for (auto it = ctx.history.end() - static_cast<std::ptrdiff_t>(history_count); it != ctx.history.end(); ++it)
        messages.push_back(ChatMessage{Role::user, *it});
    messages.push_back(ChatMessage{Role::user, ctx.live_prompt});
    return messages;
}

/// The last `limit` usable history lines, oldest first. Blank lines and
/// failed prompts are dropped before the limit is applied.
inline std::vector<std::string> harvest_history(std::span<const HistoryEntry> raw, std::size_t limit) {
    std::vector<std::string> kept;
    for (const auto& entry : raw)
        if (!entry.failed && !trim(entry.text).empty()) kept.push_back(entry.text);
    if (kept.size() > limit) kept.erase(kept.begin(), kept.end() - static_cast<std::ptrdiff_t>(limit));
    return kept;
}

inline std::vector<std::string> harvest_history(const std::vector<std::string>& raw, std::size_t limit) {
    std::vector<HistoryEntry> entries;
    entries.reserve(raw.size());
    for (const auto& line : raw) entries.push_back(HistoryEntry{line, false});
    return harvest_history(std::span<const HistoryEntry>(entries), limit);
}

}  // namespace aicli::chat
