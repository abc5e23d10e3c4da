#pragma once

#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "aicli/backend.hpp"
#include "aicli/chat.hpp"
#include "aicli/config.hpp"
#include "aicli/openai_backend.hpp"

namespace aicli::nl2cmd {

enum ExitCode : int { kOk = 0, kConfigError = 2, kMissingKey = 3, kBackendError = 4 };

struct CliInvocation {
    std::string program = "bash";
    std::string prompt;
    std::vector<std::string> context;
    bool show_cost = false;
    std::optional<std::string> model;
    std::optional<double> temperature;
    std::optional<std::string> endpoint;
    std::optional<std::string> config_file;
};

inline constexpr const char* kUsage =
    "usage: nl2cmd [--program NAME] [--context LINE]... [--model M] [--temperature T]\n"
    "              [--endpoint URL] [--config FILE] [--cost] [PROMPT...]\n";

/// Translates one natural-language request into a command. Only the
/// command goes to `out`; every diagnostic goes to `err`.
inline int run(const CliInvocation& inv, Environment env, const std::filesystem::path& cwd, std::ostream& out,
               std::ostream& err, const SearchPaths& paths = {},
               const backend::BackendFactory& make_backend = backend::default_backend_factory()) {
    if (trim(inv.prompt).empty()) {
        err << "nl2cmd: empty prompt\n" << kUsage;
        return kConfigError;
    }
    if (inv.program.empty()) {
        err << "nl2cmd: empty program name\n";
        return kConfigError;
    }

    Config config;
    try {
        if (inv.config_file) {
            std::error_code ec;
            if (!std::filesystem::is_regular_file(*inv.config_file, ec))
                throw ConfigError("no such configuration file: " + *inv.config_file);
            env[kConfigEnvVar] = *inv.config_file;
        }
        PartialConfig overrides;
        if (inv.temperature) {
            validate::temperature(*inv.temperature);
            overrides.temperature = inv.temperature;
        }
        if (inv.endpoint) {
            validate::endpoint_url(*inv.endpoint);
            overrides.endpoint_url = inv.endpoint;
        }
        overrides.model = inv.model;
        config = load(env, cwd, paths, {overrides});
    } catch (const ConfigError& e) {
        err << "nl2cmd: " << e.what() << "\n";
        return kConfigError;
    }
    for (const auto& w : config.warnings) err << "nl2cmd: warning: " << w << "\n";

    if (!config.api_key || config.api_key->empty()) {
        err << "nl2cmd: no API key; set [auth] api_key in a configuration file or " << kApiKeyEnvVar << "\n";
        return kMissingKey;
    }

    auto limit = static_cast<std::size_t>(config.history_context);
    chat::PromptContext ctx{profile_for(config, inv.program), chat::harvest_history(inv.context, limit), inv.prompt,
                            config.instructions};
    auto backend = make_backend(config);
    auto reply = backend->complete(backend::make_request(config, chat::assemble(ctx, limit)));
    if (!reply) {
        err << "nl2cmd: " << reply.error().message() << "\n";
        return reply.error().kind == backend::BackendError::Kind::missing_api_key ? kMissingKey : kBackendError;
    }

    std::string command = reply.value().content;
    while (!command.empty() && (command.back() == '\n' || command.back() == '\r')) command.pop_back();
    out << command << "\n";

    if (inv.show_cost) {
        const auto& u = backend->ledger().totals();
        err << "usage: prompt_tokens=" << u.prompt_tokens << " completion_tokens=" << u.completion_tokens
            << " total_tokens=" << u.total_tokens << " cost=$" << std::setprecision(6)
            << backend::estimate_cost(backend->ledger()) << "\n";
    }
    return kOk;
}

}  // namespace aicli::nl2cmd
