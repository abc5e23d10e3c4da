#pragma once

// OpenAI-compatible mock completions server for offline tests.
//
// Rule files use the configuration INI dialect, one section per rule,
// evaluated in file order; a [default] section replaces the catch-all:
//
//   [rule-uptime]
//   # substring of the last user message; exact = true compares whole text
//   match = running
//   exact = false
//   reply = uptime
//   prompt_tokens = 167
//   completion_tokens = 1
//   status = 200
//   delay_ms = 0
//   # sent verbatim instead of a completion envelope
//   body = {"raw": "body"}

#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "aicli/backend.hpp"
#include "aicli/ini.hpp"

namespace aicli::testkit {

inline constexpr const char* kCompletionsPath = "/v1/chat/completions";

struct MockRule {
    std::string match;  // empty matches everything
    bool exact = false;
    std::string reply = "echo mock";
    backend::Usage usage{10, 1, 11};
    int status = 200;
    int delay_ms = 0;
    std::optional<std::string> body_override;

    bool matches(std::string_view last_user_message) const {
        return exact ? last_user_message == match : last_user_message.find(match) != std::string_view::npos;
    }
};

struct RecordedExchange {
    std::string raw_body;
    std::optional<backend::ChatRequest> request;  // empty when the body did not parse
    std::string authorization;
    std::chrono::system_clock::time_point timestamp;
    std::size_t rule_index = 0;  // index into rules; rules.size() means the catch-all
};

/// The response body for a rule: the provider's completion envelope, or the
/// rule's error envelope for non-200 statuses.
inline std::string completion_body(const MockRule& rule, const std::string& model, std::uint64_t sequence) {
    if (rule.body_override) return *rule.body_override;
    nlohmann::ordered_json j;
    if (rule.status != 200) {
        j["error"] = {{"message", rule.reply}, {"type", "mock_error"}, {"code", rule.status}};
        return j.dump();
    }
    j["id"] = "chatcmpl-mock-" + std::to_string(sequence);
    j["object"] = "chat.completion";
    j["created"] = 1691681377;
    j["model"] = model;
    nlohmann::ordered_json message;
    message["role"] = "assistant";
    message["content"] = rule.reply;
    nlohmann::ordered_json choice;
    choice["index"] = 0;
    choice["message"] = std::move(message);
    choice["finish_reason"] = "stop";
    j["choices"] = nlohmann::ordered_json::array({std::move(choice)});
    j["usage"] = {{"prompt_tokens", rule.usage.prompt_tokens},
                  {"completion_tokens", rule.usage.completion_tokens},
                  {"total_tokens", rule.usage.prompt_tokens + rule.usage.completion_tokens}};
    return j.dump();
}

/// Reads rules from the INI dialect. Sections are rules in order, except
/// [default], which becomes the returned catch-all.
inline std::pair<std::vector<MockRule>, MockRule> parse_rules(std::string_view text) {
    auto doc = ini::parse(text);
    std::vector<MockRule> rules;
    MockRule fallback;
    for (const auto& section : doc.sections) {
        MockRule rule;
        for (const auto& e : section.entries) {
            auto num = [&] {
                try {
                    std::size_t used = 0;
                    long v = std::stol(e.value, &used);
                    if (used != e.value.size() || v < 0) throw std::invalid_argument(e.value);
                    return v;
                } catch (const std::exception&) {
                    throw ini::ParseError(e.line, "'" + e.key + "' expects a non-negative integer");
                }
            };
            if (e.key == "match") rule.match = e.value;
            else if (e.key == "exact") rule.exact = (e.value == "true" || e.value == "1" || e.value == "yes");
            else if (e.key == "reply") rule.reply = e.value;
            else if (e.key == "prompt_tokens") rule.usage.prompt_tokens = static_cast<std::uint64_t>(num());
            else if (e.key == "completion_tokens") rule.usage.completion_tokens = static_cast<std::uint64_t>(num());
            else if (e.key == "status") rule.status = static_cast<int>(num());
            else if (e.key == "delay_ms") rule.delay_ms = static_cast<int>(num());
            else if (e.key == "body") rule.body_override = e.value;
            else throw ini::ParseError(e.line, "unknown rule key '" + e.key + "'");
        }
        rule.usage.total_tokens = rule.usage.prompt_tokens + rule.usage.completion_tokens;
        if (section.name == "default")
            fallback = rule;
        else
            rules.push_back(std::move(rule));
    }
    return {std::move(rules), std::move(fallback)};
}

/// Serves POST /v1/chat/completions on 127.0.0.1 from a background thread,
/// one request at a time, recording every exchange.
class MockServer {
public:
    explicit MockServer(std::vector<MockRule> rules, MockRule fallback = {})
        : rules_(std::move(rules)), fallback_(std::move(fallback)) {
        server_.new_task_queue = [] { return new httplib::ThreadPool(1); };
        server_.Post(kCompletionsPath, [this](const httplib::Request& req, httplib::Response& res) {
            handle(req, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        if (port_ <= 0) throw std::runtime_error("mock server: cannot bind a loopback port");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    ~MockServer() { stop(); }

    void stop() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    int port() const noexcept { return port_; }
    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    std::string endpoint() const { return base_url() + kCompletionsPath; }

    std::vector<RecordedExchange> recordings() const {
        std::lock_guard lock(mutex_);
        return recorded_;
    }

private:
    void handle(const httplib::Request& req, httplib::Response& res) {
        RecordedExchange rec;
        rec.raw_body = req.body;
        rec.authorization = req.get_header_value("Authorization");
        rec.timestamp = std::chrono::system_clock::now();

        std::string last_user;
        std::string model = "mock-model";
        try {
            rec.request = backend::parse_request(req.body);
            model = rec.request->model;
            for (const auto& m : rec.request->messages)
                if (m.role == chat::Role::user) last_user = m.content;
        } catch (const std::invalid_argument&) {
            // Recorded as unparsed; the catch-all still answers.
        }

        const MockRule* rule = &fallback_;
        rec.rule_index = rules_.size();
        for (std::size_t i = 0; i < rules_.size(); ++i) {
            if (rules_[i].matches(last_user)) {
                rule = &rules_[i];
                rec.rule_index = i;
                break;
            }
        }

        std::uint64_t sequence;
        {
            std::lock_guard lock(mutex_);
            recorded_.push_back(rec);
            sequence = recorded_.size();
        }
        if (rule->delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(rule->delay_ms));
        res.status = rule->status;
        res.set_content(completion_body(*rule, model, sequence), "application/json");
    }

    std::vector<MockRule> rules_;
    MockRule fallback_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    mutable std::mutex mutex_;
    std::vector<RecordedExchange> recorded_;
};

}  // namespace aicli::testkit
