#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "aicli/default_config.hpp"
#include "aicli/ini.hpp"
#include "aicli/key_sequence.hpp"
#include "aicli/strings.hpp"

namespace aicli {

/// Names the extra configuration file layered on top of all others.
inline constexpr const char* kConfigEnvVar = "AI_CLI_CONFIG";
/// Supplies the API key when no configuration file sets `[auth] api_key`.
inline constexpr const char* kApiKeyEnvVar = "OPENAI_API_KEY";
/// Pseudo-path of the configuration compiled into the library.
inline constexpr const char* kBundledSource = "<bundled>";

namespace defaults {
inline constexpr const char* model = "gpt-3.5-turbo";
inline constexpr double temperature = 0.7;
inline constexpr const char* endpoint_url = "https://api.openai.com/v1/chat/completions";
inline constexpr int history_context = 3;
inline constexpr long timeout_ms = 30000;
inline constexpr int max_exchanges = 3;
inline constexpr double price_per_1k_prompt = 0.0015;
inline constexpr double price_per_1k_completion = 0.002;
inline constexpr const char* comment_leader = "#";
inline constexpr const char* instructions =
    "Respond with exactly one executable command and nothing else. "
    "Do not add explanations, markdown, or code fences. "
    "If the request can only be answered with text, write the text as comment lines "
    "starting with the program's comment leader ({comment}).";
inline constexpr const char* fallback_system_prompt =
    "You are an assistant who provides executable commands for the {program} "
    "command-line interface.";
}  // namespace defaults

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ConfigSource {
    std::filesystem::path path;
    int precedence = 0;

    friend bool operator==(const ConfigSource&, const ConfigSource&) = default;
};

struct Exchange {
    std::string user;
    std::string assistant;

    friend bool operator==(const Exchange&, const Exchange&) = default;
};

struct ProgramProfile {
    std::string program;
    std::string system_prompt;
    std::vector<Exchange> exchanges;
    std::string comment_leader = defaults::comment_leader;

    friend bool operator==(const ProgramProfile&, const ProgramProfile&) = default;
};

/// The keys one configuration file defines. Absent keys stay empty.
struct PartialConfig {
    std::optional<std::string> model;
    std::optional<double> temperature;
    std::optional<std::string> api_key;
    std::optional<std::string> endpoint_url;
    std::optional<KeySequence> key_binding;
    std::optional<int> history_context;
    std::optional<long> timeout_ms;
    std::optional<int> max_exchanges;
    std::optional<std::string> instructions;
    std::optional<double> price_per_1k_prompt;
    std::optional<double> price_per_1k_completion;
    std::optional<std::string> log_file;
    std::map<std::string, ProgramProfile> profiles;
    std::vector<std::string> warnings;

    friend bool operator==(const PartialConfig&, const PartialConfig&) = default;
};

/// The effective configuration after layering; every field is populated.
struct Config {
    std::string model = defaults::model;
    double temperature = defaults::temperature;
    std::optional<std::string> api_key;
    std::string endpoint_url = defaults::endpoint_url;
    KeySequence key_binding = KeySequence::default_binding();
    int history_context = defaults::history_context;
    long timeout_ms = defaults::timeout_ms;
    int max_exchanges = defaults::max_exchanges;
    std::string instructions = defaults::instructions;
    double price_per_1k_prompt = defaults::price_per_1k_prompt;
    double price_per_1k_completion = defaults::price_per_1k_completion;
    std::optional<std::string> log_file;
    std::map<std::string, ProgramProfile> profiles;
    std::vector<std::string> warnings;

    friend bool operator==(const Config&, const Config&) = default;
};

// Range checks shared by the parser and command-line overrides.
namespace validate {

inline void temperature(double t) {
    if (!(t >= 0.0 && t <= 2.0)) throw ConfigError("temperature must be within [0, 2]");
}
inline void history_context(long n) {
    if (n < 0) throw ConfigError("history_context must be non-negative");
}
inline void timeout_ms(long ms) {
    if (ms <= 0) throw ConfigError("timeout_ms must be positive");
}
inline void endpoint_url(std::string_view url) {
    auto scheme_end = url.find("://");
    auto scheme = to_lower(url.substr(0, scheme_end == std::string_view::npos ? 0 : scheme_end));
    if ((scheme != "http" && scheme != "https") || url.size() <= scheme_end + 3)
        throw ConfigError("endpoint must be an absolute http(s) URL: '" + std::string(url) + "'");
}

}  // namespace validate

namespace detail {

template <typename Number>
Number parse_number(const ini::Entry& e) {
    Number value{};
    auto text = trim(e.value);
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ConfigError("line " + std::to_string(e.line) + ": '" + e.key +
                          "' expects a number, got '" + e.value + "'");
    return value;
}

template <typename Check, typename Value>
void checked(const ini::Entry& e, Check check, Value v) {
    try {
        check(v);
    } catch (const ConfigError& err) {
        throw ConfigError("line " + std::to_string(e.line) + ": " + err.what());
    }
}

inline ProgramProfile parse_profile(const ini::Section& section, std::vector<std::string>& warnings) {
    ProgramProfile profile;
    profile.program = section.name.substr(std::string_view("prompt-").size());
    if (profile.program.empty())
        throw ConfigError("line " + std::to_string(section.line) + ": prompt section names no program");

    std::map<int, std::string> users;
    std::map<int, std::string> assistants;
    for (const auto& e : section.entries) {
        if (e.key == "system") {
            profile.system_prompt = e.value;
        } else if (e.key == "comment") {
            profile.comment_leader = e.value;
        } else if (e.key.rfind("user-", 0) == 0 || e.key.rfind("assistant-", 0) == 0) {
            bool is_user = e.key[0] == 'u';
            ini::Entry index{e.key, e.key.substr(e.key.find('-') + 1), e.line};
            int n = parse_number<int>(index);
            if (n < 1)
                throw ConfigError("line " + std::to_string(e.line) + ": exchange numbers start at 1");
            (is_user ? users : assistants)[n] = e.value;
        } else {
            warnings.push_back("[" + section.name + "] line " + std::to_string(e.line) +
                               ": unknown key '" + e.key + "'");
        }
    }
    // Exchanges must be complete user/assistant pairs numbered 1..n.
    int expected = 1;
    for (const auto& [n, text] : users) {
        if (n != expected || !assistants.count(n))
            throw ConfigError("line " + std::to_string(section.line) + ": [" + section.name +
                              "] exchanges must be complete user-N/assistant-N pairs numbered from 1");
        profile.exchanges.push_back(Exchange{text, assistants.at(n)});
        ++expected;
    }
    if (assistants.size() != users.size())
        throw ConfigError("line " + std::to_string(section.line) + ": [" + section.name +
                          "] has an assistant-N without a matching user-N");
    return profile;
}

inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace detail

/// Parses one configuration file. Throws ConfigError naming the offending
/// line on syntax or type errors; unknown sections and keys become warnings.
inline PartialConfig parse_source(std::string_view text) {
    ini::Document doc;
    try {
        doc = ini::parse(text);
    } catch (const ini::ParseError& e) {
        throw ConfigError(e.what());
    }

    PartialConfig out;
    auto unknown = [&](const ini::Section& s, const ini::Entry& e) {
        out.warnings.push_back("[" + s.name + "] line " + std::to_string(e.line) + ": unknown key '" +
                               e.key + "'");
    };
    for (const auto& s : doc.sections) {
        if (s.name == "general") {
            for (const auto& e : s.entries) {
                if (e.key == "model") {
                    out.model = e.value;
                } else if (e.key == "temperature") {
                    auto t = detail::parse_number<double>(e);
                    detail::checked(e, validate::temperature, t);
                    out.temperature = t;
                } else if (e.key == "endpoint") {
                    detail::checked(e, validate::endpoint_url, e.value);
                    out.endpoint_url = e.value;
                } else if (e.key == "timeout_ms") {
                    auto ms = detail::parse_number<long>(e);
                    detail::checked(e, validate::timeout_ms, ms);
                    out.timeout_ms = ms;
                } else if (e.key == "history_context") {
                    auto n = detail::parse_number<int>(e);
                    detail::checked(e, validate::history_context, n);
                    out.history_context = n;
                } else if (e.key == "max_exchanges") {
                    auto n = detail::parse_number<int>(e);
                    if (n < 0) throw ConfigError("line " + std::to_string(e.line) + ": max_exchanges must be non-negative");
                    out.max_exchanges = n;
                } else if (e.key == "instructions") {
                    out.instructions = e.value;
                } else if (e.key == "price_per_1k_prompt") {
                    out.price_per_1k_prompt = detail::parse_number<double>(e);
                } else if (e.key == "price_per_1k_completion") {
                    out.price_per_1k_completion = detail::parse_number<double>(e);
                } else if (e.key == "log_file") {
                    out.log_file = e.value;
                } else {
                    unknown(s, e);
                }
            }
        } else if (s.name == "binding") {
            for (const auto& e : s.entries) {
                if (e.key == "key") {
                    try {
                        out.key_binding = KeySequence::parse(e.value);
                    } catch (const KeySequenceError& err) {
                        throw ConfigError("line " + std::to_string(e.line) + ": " + err.what());
                    }
                } else {
                    unknown(s, e);
                }
            }
        } else if (s.name == "auth") {
            for (const auto& e : s.entries) {
                if (e.key == "api_key")
                    out.api_key = e.value;
                else
                    unknown(s, e);
            }
        } else if (s.name.rfind("prompt-", 0) == 0) {
            auto profile = detail::parse_profile(s, out.warnings);
            out.profiles[profile.program] = std::move(profile);
        } else {
            out.warnings.push_back("line " + std::to_string(s.line) + ": unknown section [" + s.name + "]");
        }
    }
    return out;
}

/// Layers partial configurations in ascending precedence: each key takes
/// the value of the last layer defining it, profiles are replaced whole,
/// and anything left undefined gets its default.
inline Config merge(const std::vector<PartialConfig>& layers) {
    Config c;
    for (const auto& layer : layers) {
        if (layer.model) c.model = *layer.model;
        if (layer.temperature) c.temperature = *layer.temperature;
        if (layer.api_key) c.api_key = *layer.api_key;
        if (layer.endpoint_url) c.endpoint_url = *layer.endpoint_url;
        if (layer.key_binding) c.key_binding = *layer.key_binding;
        if (layer.history_context) c.history_context = *layer.history_context;
        if (layer.timeout_ms) c.timeout_ms = *layer.timeout_ms;
        if (layer.max_exchanges) c.max_exchanges = *layer.max_exchanges;
        if (layer.instructions) c.instructions = *layer.instructions;
        if (layer.price_per_1k_prompt) c.price_per_1k_prompt = *layer.price_per_1k_prompt;
        if (layer.price_per_1k_completion) c.price_per_1k_completion = *layer.price_per_1k_completion;
        if (layer.log_file) c.log_file = *layer.log_file;
        for (const auto& [name, profile] : layer.profiles) c.profiles[name] = profile;
        c.warnings.insert(c.warnings.end(), layer.warnings.begin(), layer.warnings.end());
    }
    for (auto& [name, profile] : c.profiles) {
        if (profile.exchanges.size() > static_cast<std::size_t>(c.max_exchanges)) {
            c.warnings.push_back("profile '" + name + "' truncated to " + std::to_string(c.max_exchanges) +
                                 " exchanges");
            profile.exchanges.resize(static_cast<std::size_t>(c.max_exchanges));
        }
    }
    return c;
}

/// The inverse of merge for a single layer: every key defined.
inline PartialConfig to_partial(const Config& c) {
    PartialConfig p;
    p.model = c.model;
    p.temperature = c.temperature;
    p.api_key = c.api_key;
    p.endpoint_url = c.endpoint_url;
    p.key_binding = c.key_binding;
    p.history_context = c.history_context;
    p.timeout_ms = c.timeout_ms;
    p.max_exchanges = c.max_exchanges;
    p.instructions = c.instructions;
    p.price_per_1k_prompt = c.price_per_1k_prompt;
    p.price_per_1k_completion = c.price_per_1k_completion;
    p.log_file = c.log_file;
    p.profiles = c.profiles;
    p.warnings = c.warnings;
    return p;
}

/// Canonical writer: parse_source(serialize(p)) reproduces p apart from warnings.
inline std::string serialize(const PartialConfig& p) {
    std::ostringstream out;
    out << "[general]\n";
    if (p.model) out << "model = " << *p.model << "\n";
    if (p.temperature) out << "temperature = " << detail::format_double(*p.temperature) << "\n";
    if (p.endpoint_url) out << "endpoint = " << *p.endpoint_url << "\n";
    if (p.timeout_ms) out << "timeout_ms = " << *p.timeout_ms << "\n";
    if (p.history_context) out << "history_context = " << *p.history_context << "\n";
    if (p.max_exchanges) out << "max_exchanges = " << *p.max_exchanges << "\n";
    if (p.instructions) out << "instructions = " << ini::format_value(*p.instructions) << "\n";
    if (p.price_per_1k_prompt) out << "price_per_1k_prompt = " << detail::format_double(*p.price_per_1k_prompt) << "\n";
    if (p.price_per_1k_completion)
        out << "price_per_1k_completion = " << detail::format_double(*p.price_per_1k_completion) << "\n";
    if (p.log_file) out << "log_file = " << *p.log_file << "\n";
    if (p.key_binding) out << "\n[binding]\nkey = " << p.key_binding->human() << "\n";
    if (p.api_key) out << "\n[auth]\napi_key = " << *p.api_key << "\n";
    for (const auto& [name, profile] : p.profiles) {
        out << "\n[prompt-" << name << "]\n";
        out << "system = " << ini::format_value(profile.system_prompt) << "\n";
        out << "comment = " << profile.comment_leader << "\n";
        for (std::size_t i = 0; i < profile.exchanges.size(); ++i) {
            out << "user-" << i + 1 << " = " << ini::format_value(profile.exchanges[i].user) << "\n";
            out << "assistant-" << i + 1 << " = " << ini::format_value(profile.exchanges[i].assistant) << "\n";
        }
    }
    return out.str();
}

/// Where configuration files are looked for; overridable for tests.
struct SearchPaths {
    std::filesystem::path system_file = "/etc/ai-cli.ini";
    std::string user_file_name = ".ai-cli.ini";
    std::string local_file_name = ".ai-cli.ini";
};

/// Returns the configuration sources in ascending precedence: the bundled
/// defaults, then the system, user-home, current-directory, and
/// environment-named files that exist.
inline std::vector<ConfigSource> locate_sources(const Environment& env, const std::filesystem::path& cwd,
                                                const SearchPaths& paths = {}) {
    std::vector<std::filesystem::path> candidates;
    candidates.emplace_back(paths.system_file);
    if (auto home = env_lookup(env, "HOME"); home && !home->empty())
        candidates.emplace_back(std::filesystem::path(*home) / paths.user_file_name);
    candidates.emplace_back(cwd / paths.local_file_name);
    if (auto extra = env_lookup(env, kConfigEnvVar); extra && !extra->empty())
        candidates.emplace_back(*extra);

    std::vector<ConfigSource> sources{ConfigSource{kBundledSource, 0}};
    for (const auto& path : candidates) {
        std::error_code ec;
        if (!std::filesystem::is_regular_file(path, ec)) continue;
        // The same file reached twice (e.g. cwd == HOME) keeps its higher rank.
        std::erase_if(sources, [&](const ConfigSource& s) {
            return s.path != kBundledSource && std::filesystem::equivalent(s.path, path, ec);
        });
        sources.push_back(ConfigSource{path, static_cast<int>(sources.size())});
    }
    for (std::size_t i = 0; i < sources.size(); ++i) sources[i].precedence = static_cast<int>(i);
    return sources;
}

inline std::string read_source(const ConfigSource& source) {
    if (source.path == kBundledSource) return std::string(bundled_config);
    std::ifstream in(source.path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + source.path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline PartialConfig parse_file(const ConfigSource& source) {
    try {
        return parse_source(read_source(source));
    } catch (const ConfigError& e) {
        throw ConfigError(source.path.string() + ": " + e.what());
    }
}

/// Locates, parses and merges every source, then falls back to the API key
/// environment variable when no file supplied one.
inline Config load(const Environment& env, const std::filesystem::path& cwd, const SearchPaths& paths = {},
                   const std::vector<PartialConfig>& extra_layers = {}) {
    std::vector<PartialConfig> layers;
    for (const auto& source : locate_sources(env, cwd, paths)) layers.push_back(parse_file(source));
    layers.insert(layers.end(), extra_layers.begin(), extra_layers.end());
    Config c = merge(layers);
    if (!c.api_key || c.api_key->empty()) {
        if (auto key = env_lookup(env, kApiKeyEnvVar); key && !key->empty()) c.api_key = *key;
    }
    return c;
}

/// The configured profile for `program`, or a generic one naming it.
inline ProgramProfile profile_for(const Config& config, const std::string& program) {
    if (auto it = config.profiles.find(program); it != config.profiles.end()) return it->second;
    ProgramProfile fallback;
    fallback.program = program;
    fallback.system_prompt = replace_all(defaults::fallback_system_prompt, "{program}", program);
    return fallback;
}

}  // namespace aicli
