#pragma once

// Provider-neutral side of the completions backend: the wire data model,
// its JSON encoding, errors, and token accounting. The OpenAI-compatible
// implementation lives in openai_backend.hpp.

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "aicli/chat.hpp"

namespace aicli::backend {

struct ChatRequest {
    std::string model;
    double temperature = 0.0;
    std::vector<chat::ChatMessage> messages;

    friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

struct Usage {
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
    std::uint64_t total_tokens = 0;

    friend bool operator==(const Usage&, const Usage&) = default;
};

struct ChatResponse {
    std::string id;
    std::string model;
    std::string content;
    std::string finish_reason;
    Usage usage;
};

struct BackendError {
    enum class Kind { network, timeout, http_status, api_error, malformed_response, missing_api_key };

    Kind kind = Kind::network;
    int status = 0;      // HTTP status for http_status
    std::string detail;  // server message for api_error, diagnostic otherwise

    /// Short form used inside the host's edit buffer, e.g. "http_status 500".
    std::string describe() const {
        switch (kind) {
            case Kind::network: return "network: " + detail;
            case Kind::timeout: return "timeout";
            case Kind::http_status: return "http_status " + std::to_string(status);
            case Kind::api_error: return "api_error: " + detail;
            case Kind::malformed_response: return "malformed_response: " + detail;
            case Kind::missing_api_key: return "missing API key";
        }
        return detail;
    }

    /// Long form for diagnostics streams; includes any server message.
    std::string message() const {
        if (kind == Kind::http_status && !detail.empty()) return describe() + ": " + detail;
        if (kind == Kind::timeout && !detail.empty()) return describe() + ": " + detail;
        return describe();
    }
};

/// Either a value or a BackendError.
template <typename T>
class Result {
public:
    Result(T value) : v_(std::move(value)) {}
    Result(BackendError error) : v_(std::move(error)) {}

    bool ok() const noexcept { return v_.index() == 0; }
    explicit operator bool() const noexcept { return ok(); }
    const T& value() const { return std::get<0>(v_); }
    T& value() { return std::get<0>(v_); }
    const BackendError& error() const { return std::get<1>(v_); }

private:
    std::variant<T, BackendError> v_;
};

struct Unit {};

/// Field order on the wire: model, temperature, messages; role before content.
inline std::string serialize_request(const ChatRequest& req) {
    nlohmann::ordered_json j;
    j["model"] = req.model;
    j["temperature"] = req.temperature;
    auto messages = nlohmann::ordered_json::array();
    for (const auto& m : req.messages) {
        nlohmann::ordered_json msg;
        msg["role"] = chat::to_string(m.role);
        msg["content"] = m.content;
        messages.push_back(std::move(msg));
    }
    j["messages"] = std::move(messages);
    return j.dump();
}

/// Inverse of serialize_request; used by the mock server. Throws
/// std::invalid_argument on anything that is not a chat request.
inline ChatRequest parse_request(std::string_view body) {
    auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw std::invalid_argument("request is not a JSON object");
    ChatRequest req;
    try {
        req.model = j.at("model").get<std::string>();
        req.temperature = j.value("temperature", 1.0);
        for (const auto& m : j.at("messages"))
            req.messages.push_back(chat::ChatMessage{chat::role_from_string(m.at("role").get<std::string>()),
                                                     m.at("content").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("bad chat request: ") + e.what());
    }
    return req;
}

inline Result<ChatResponse> parse_response(std::string_view body) {
    using Kind = BackendError::Kind;
    auto malformed = [](std::string why) { return BackendError{Kind::malformed_response, 0, std::move(why)}; };

    auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return malformed("response is not a JSON object");

    if (auto err = j.find("error"); err != j.end() && err->is_object()) {
        auto msg = err->find("message");
        return BackendError{Kind::api_error, 0,
                            msg != err->end() && msg->is_string() ? msg->get<std::string>() : err->dump()};
    }

    auto choices = j.find("choices");
    if (choices == j.end() || !choices->is_array() || choices->empty()) return malformed("no choices");
    const auto& first = (*choices)[0];
    if (!first.is_object() || !first.contains("message") || !first["message"].is_object())
        return malformed("choice has no message");
    const auto& message = first["message"];
    auto content = message.find("content");
    if (content == message.end() || !content->is_string()) return malformed("message has no content");

    auto str = [](const nlohmann::json& obj, const char* key) {
        auto it = obj.find(key);
        return it != obj.end() && it->is_string() ? it->get<std::string>() : std::string();
    };

    ChatResponse out;
    out.id = str(j, "id");
    out.model = str(j, "model");
    out.content = content->get<std::string>();
    out.finish_reason = str(first, "finish_reason");
    if (auto usage = j.find("usage"); usage != j.end()) {
        if (!usage->is_object()) return malformed("usage is not an object");
        auto count = [&](const char* key, std::uint64_t& dst) {
            auto it = usage->find(key);
            if (it == usage->end()) return true;
            if (!it->is_number_unsigned()) return false;
            dst = it->get<std::uint64_t>();
            return true;
        };
        if (!count("prompt_tokens", out.usage.prompt_tokens) ||
            !count("completion_tokens", out.usage.completion_tokens) ||
            !count("total_tokens", out.usage.total_tokens))
            return malformed("usage counts are not non-negative integers");
        if (out.usage.total_tokens != out.usage.prompt_tokens + out.usage.completion_tokens)
            return malformed("usage total_tokens != prompt_tokens + completion_tokens");
    }
    return out;
}

/// Cumulative token usage for a session, priced per thousand tokens.
class UsageLedger {
public:
    UsageLedger() = default;
    UsageLedger(double price_per_1k_prompt, double price_per_1k_completion)
        : price_prompt_(price_per_1k_prompt), price_completion_(price_per_1k_completion) {}

    void add(const Usage& u) {
        totals_.prompt_tokens += u.prompt_tokens;
        totals_.completion_tokens += u.completion_tokens;
        totals_.total_tokens += u.total_tokens;
    }

    const Usage& totals() const noexcept { return totals_; }
    double price_per_1k_prompt() const noexcept { return price_prompt_; }
    double price_per_1k_completion() const noexcept { return price_completion_; }

private:
    Usage totals_;
    double price_prompt_ = defaults::price_per_1k_prompt;
    double price_completion_ = defaults::price_per_1k_completion;
};

inline double estimate_cost(const UsageLedger& ledger) {
    const auto& u = ledger.totals();
    return static_cast<double>(u.prompt_tokens) * ledger.price_per_1k_prompt() / 1000.0 +
           static_cast<double>(u.completion_tokens) * ledger.price_per_1k_completion() / 1000.0;
}

/// The seam between callers and a model provider.
class Backend {
public:
    virtual ~Backend() = default;

    /// Initializes whatever the provider needs on first use; later calls
    /// return the cached outcome.
    virtual Result<Unit> lazy_init() = 0;
    virtual Result<ChatResponse> complete(const ChatRequest& req) = 0;
    virtual const UsageLedger& ledger() const = 0;
    /// How many times the provider's network stack was initialized (0 or 1).
    virtual int init_count() const = 0;
};

}  // namespace aicli::backend
