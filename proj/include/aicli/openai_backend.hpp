#pragma once

// OpenAI-compatible chat-completions provider. Everything provider-specific
// is in this file; other providers implement backend::Backend alongside it.

#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <utility>

#include "aicli/backend.hpp"
#include "aicli/config.hpp"
#include "aicli/http_stack.hpp"

namespace aicli::backend {

class OpenAiBackend : public Backend {
public:
    explicit OpenAiBackend(const Config& config,
                           std::unique_ptr<http::Transport> transport = std::make_unique<http::CurlTransport>())
        : endpoint_(config.endpoint_url),
          api_key_(config.api_key.value_or("")),
          timeout_ms_(config.timeout_ms),
          ledger_(config.price_per_1k_prompt, config.price_per_1k_completion),
          transport_(std::move(transport)) {}

    Result<Unit> lazy_init() override {
        std::call_once(init_once_, [this] {
            ++init_count_;
            init_result_ = transport_->initialize();
        });
        return *init_result_;
    }

    int init_count() const override { return init_count_; }

    Result<ChatResponse> complete(const ChatRequest& req) override {
        if (api_key_.empty())
            return BackendError{BackendError::Kind::missing_api_key, 0,
                                std::string("set [auth] api_key or ") + kApiKeyEnvVar};
        if (auto init = lazy_init(); !init) return init.error();

        auto reply = transport_->post(endpoint_,
                                      {{"Authorization", "Bearer " + api_key_}, {"Content-Type", "application/json"}},
                                      serialize_request(req), timeout_ms_);
        if (!reply) return reply.error();
        const auto& http = reply.value();
        if (http.status != 200) {
            BackendError err{BackendError::Kind::http_status, static_cast<int>(http.status), ""};
            // Keep the provider's explanation when it sent its error envelope.
            if (auto parsed = parse_response(http.body);
                !parsed && parsed.error().kind == BackendError::Kind::api_error)
                err.detail = parsed.error().detail;
            return err;
        }
        auto parsed = parse_response(http.body);
        if (parsed) ledger_.add(parsed.value().usage);
        return parsed;
    }

    const UsageLedger& ledger() const override { return ledger_; }

private:
    std::string endpoint_;
    std::string api_key_;
    long timeout_ms_;
    UsageLedger ledger_;
    std::unique_ptr<http::Transport> transport_;
    std::once_flag init_once_;
    int init_count_ = 0;
    std::optional<Result<Unit>> init_result_;
};

/// Builds the request for a configured model from assembled messages.
inline ChatRequest make_request(const Config& config, std::vector<chat::ChatMessage> messages) {
    return ChatRequest{config.model, config.temperature, std::move(messages)};
}

using BackendFactory = std::function<std::unique_ptr<Backend>(const Config&)>;

inline BackendFactory default_backend_factory() {
    return [](const Config& c) { return std::make_unique<OpenAiBackend>(c); };
}

}  // namespace aicli::backend
