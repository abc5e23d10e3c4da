#pragma once

// Attaching AI help to a host program's GNU Readline.
//
// Nothing here links against Readline. Every entry point and editing-state
// variable is looked up at run time through a resolver (dlsym on the global
// scope in the preloaded shim), so a host without Readline leaves the table
// unresolved and the shim stays inert.
//
// Required Readline symbols:
//   rl_line_buffer  rl_point  rl_end          editing-state variables
//   rl_bind_keyseq  rl_add_defun              binding installation
//   rl_insert_text  rl_delete_text            buffer replacement
//   rl_redisplay
// Optional:
//   history_list  add_history  replace_history_entry  free_history_entry
//   rl_ding  rl_named_function

#include <unistd.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "aicli/backend.hpp"
#include "aicli/chat.hpp"
#include "aicli/config.hpp"
#include "aicli/key_sequence.hpp"
#include "aicli/openai_backend.hpp"

namespace aicli::attach {

/// Name under which the help function is registered with the editor.
inline constexpr const char* kHelpFunctionName = "ai-help";

using CommandFunc = int (*)(int count, int key);

// Layout of Readline's HIST_ENTRY.
struct HistoryRecord {
    char* line;
    char* timestamp;
    void* data;
};

/// Looks up a symbol in the host process; nullptr when absent.
using Resolver = std::function<void*(const char*)>;

struct ReadlineAbi {
    char** line_buffer = nullptr;
    int* point = nullptr;
    int* end = nullptr;
    int (*bind_keyseq)(const char*, CommandFunc) = nullptr;
    int (*add_defun)(const char*, CommandFunc, int) = nullptr;
    int (*insert_text)(const char*) = nullptr;
    int (*delete_text)(int, int) = nullptr;
    void (*redisplay)() = nullptr;

    HistoryRecord** (*history_list)() = nullptr;
    void (*add_history)(const char*) = nullptr;
    HistoryRecord* (*replace_history_entry)(int, const char*, void*) = nullptr;
    void* (*free_history_entry)(HistoryRecord*) = nullptr;
    int (*ding)() = nullptr;
    CommandFunc (*named_function)(const char*) = nullptr;

    std::map<std::string, void*> resolved;
};

/// Resolves the Readline ABI, or nothing if any required symbol is missing.
inline std::optional<ReadlineAbi> detect_abi(const Resolver& resolve) {
    ReadlineAbi abi;
    bool complete = true;
    auto bind = [&](auto& slot, const char* name, bool required) {
        void* sym = resolve(name);
        if (!sym) {
            complete = complete && !required;
            return;
        }
        slot = reinterpret_cast<std::remove_reference_t<decltype(slot)>>(sym);
        abi.resolved[name] = sym;
    };
    bind(abi.line_buffer, "rl_line_buffer", true);
    bind(abi.point, "rl_point", true);
    bind(abi.end, "rl_end", true);
    bind(abi.bind_keyseq, "rl_bind_keyseq", true);
    bind(abi.add_defun, "rl_add_defun", true);
    bind(abi.insert_text, "rl_insert_text", true);
    bind(abi.delete_text, "rl_delete_text", true);
    bind(abi.redisplay, "rl_redisplay", true);
    if (!complete) return std::nullopt;
    bind(abi.history_list, "history_list", false);
    bind(abi.add_history, "add_history", false);
    bind(abi.replace_history_entry, "replace_history_entry", false);
    bind(abi.free_history_entry, "free_history_entry", false);
    bind(abi.ding, "rl_ding", false);
    bind(abi.named_function, "rl_named_function", false);
    return abi;
}

/// Registers `handler` as the editor function "ai-help" and binds `seq` to
/// it in the active keymap. Returns an error description on failure.
inline std::optional<std::string> install_binding(const ReadlineAbi& abi, const KeySequence& seq,
                                                  CommandFunc handler) {
    if (seq.wire().empty()) return "empty key sequence";
    if (abi.add_defun(kHelpFunctionName, handler, -1) != 0) return "editor rejected function registration";
    if (abi.bind_keyseq(seq.editor_keyseq().c_str(), handler) != 0)
        return "editor rejected key sequence '" + seq.human() + "'";
    return std::nullopt;
}

/// Marks history entries holding prompts the model failed to answer.
inline char failed_prompt_marker = 0;

inline std::vector<chat::HistoryEntry> read_host_history(const ReadlineAbi& abi) {
    std::vector<chat::HistoryEntry> entries;
    if (!abi.history_list) return entries;
    HistoryRecord** list = abi.history_list();
    for (; list && *list; ++list) {
        const HistoryRecord* rec = *list;
        entries.push_back(chat::HistoryEntry{rec->line ? rec->line : "", rec->data == &failed_prompt_marker});
    }
    return entries;
}

/// The most recent `limit` usable lines of the host's history, oldest first.
inline std::vector<std::string> harvest_host_history(const ReadlineAbi& abi, std::size_t limit) {
    auto entries = read_host_history(abi);
    return chat::harvest_history(std::span<const chat::HistoryEntry>(entries), limit);
}

/// Appends `prompt` to the host's history, marked as failed.
inline void record_failed_prompt(const ReadlineAbi& abi, const std::string& prompt) {
    if (!abi.add_history) return;
    abi.add_history(prompt.c_str());
    if (!abi.replace_history_entry || !abi.history_list) return;
    int last = -1;
    for (HistoryRecord** list = abi.history_list(); list && *list; ++list) ++last;
    if (last < 0) return;
    if (HistoryRecord* old = abi.replace_history_entry(last, prompt.c_str(), &failed_prompt_marker);
        old && abi.free_history_entry)
        abi.free_history_entry(old);
}

struct AttachState {
    bool detected = false;
    bool bound = false;
    std::string program;
    std::map<std::string, void*> resolved;
    int init_count = 0;
    std::string failure;
};

/// Per-process attachment: configuration, resolved ABI, and the help
/// function's behaviour.
class Attacher {
public:
    struct Options {
        Resolver resolve;
        Environment env;
        std::filesystem::path cwd;
        std::string program;
        CommandFunc handler = nullptr;
        SearchPaths search_paths{};
        backend::BackendFactory make_backend = backend::default_backend_factory();
    };

    /// Runs at most once per Attacher; later calls return the first state.
    const AttachState& on_load(Options opts) {
        std::call_once(loaded_, [&] { load(std::move(opts)); });
        return state_;
    }

    const AttachState& state() const noexcept { return state_; }
    const Config& config() const noexcept { return config_; }

    /// The hotkey action: replaces the natural-language text in the edit
    /// buffer with the model's command, or with a comment line on failure.
    int on_hotkey() {
        if (!abi_) return 0;
        const ReadlineAbi& abi = *abi_;
        std::string prompt;
        if (*abi.line_buffer && *abi.end > 0) prompt.assign(*abi.line_buffer, static_cast<std::size_t>(*abi.end));
        if (trim(prompt).empty()) {
            ring_bell(abi);
            return 0;
        }

        auto profile = profile_for(config_, state_.program);
        auto outcome = ask(abi, profile, prompt);
        state_.init_count = backend_ ? backend_->init_count() : 0;

        if (outcome) {
            replace_buffer(abi, outcome.value());
        } else {
            log("request failed: " + outcome.error().message());
            auto line = profile.comment_leader + " ai-cli error: " + outcome.error().describe();
            replace_buffer(abi, replace_all(line, "\n", " "));
            record_failed_prompt(abi, prompt);
        }
        return 0;
    }

    void log(const std::string& message) const {
        if (!config_.log_file) return;
        std::ofstream out(*config_.log_file, std::ios::app);
        out << "ai-cli[" << getpid() << "] " << state_.program << ": " << message << "\n";
    }

private:
    void load(Options opts) {
        state_.program = opts.program;
        try {
            config_ = aicli::load(opts.env, opts.cwd, opts.search_paths);
        } catch (const std::exception& e) {
            // Without configuration there is no binding to install.
            state_.failure = std::string("configuration: ") + e.what();
            return;
        }
        make_backend_ = std::move(opts.make_backend);

        auto abi = detect_abi(opts.resolve);
        if (!abi) return;
        state_.detected = true;
        state_.resolved = abi->resolved;
        abi_ = std::move(abi);

        // Another copy of the shim already registered the function.
        if (abi_->named_function && abi_->named_function(kHelpFunctionName)) {
            state_.bound = true;
            return;
        }
        if (auto err = install_binding(*abi_, config_.key_binding, opts.handler)) {
            state_.failure = *err;
            log("binding failed: " + *err);
            return;
        }
        state_.bound = true;
    }

    backend::Result<std::string> ask(const ReadlineAbi& abi, const ProgramProfile& profile, const std::string& prompt) {
        if (!backend_) backend_ = make_backend_(config_);
        if (auto init = backend_->lazy_init(); !init) return init.error();

        chat::PromptContext ctx{profile, harvest_host_history(abi, static_cast<std::size_t>(config_.history_context)),
                                prompt, config_.instructions};
        auto messages = chat::assemble(ctx, static_cast<std::size_t>(config_.history_context));
        auto reply = backend_->complete(backend::make_request(config_, std::move(messages)));
        if (!reply) return reply.error();
        std::string command = reply.value().content;
        while (!command.empty() && (command.back() == '\n' || command.back() == '\r' || command.back() == ' '))
            command.pop_back();
        return command;
    }

    static void replace_buffer(const ReadlineAbi& abi, const std::string& text) {
        abi.delete_text(0, *abi.end);
        *abi.point = 0;
        abi.insert_text(text.c_str());
        *abi.point = *abi.end;
        abi.redisplay();
    }

    static void ring_bell(const ReadlineAbi& abi) {
        if (abi.ding) {
            abi.ding();
        } else {
            [[maybe_unused]] auto n = ::write(STDOUT_FILENO, "\a", 1);
        }
    }

    std::once_flag loaded_;
    AttachState state_;
    Config config_;
    std::optional<ReadlineAbi> abi_;
    backend::BackendFactory make_backend_;
    std::unique_ptr<backend::Backend> backend_;
};

}  // namespace aicli::attach
