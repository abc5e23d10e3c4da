// aicli-mock: serve scripted chat completions on a loopback port.
//
//   aicli-mock --rules rules.ini
//   listening on http://127.0.0.1:40123/v1/chat/completions
//
// Each request is logged to standard output as one JSON line.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "aicli/testkit/mock_server.hpp"

namespace {
volatile std::sig_atomic_t stop_requested = 0;
void on_signal(int) { stop_requested = 1; }
}  // namespace

int main(int argc, char** argv) {
    std::string rules_file;
    std::string reply = "echo mock";
    CLI::App app{"OpenAI-compatible mock completions server"};
    app.add_option("--rules", rules_file, "Rule file (INI, one section per rule)")->check(CLI::ExistingFile);
    app.add_option("--reply", reply, "Catch-all reply when no rule file is given")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    std::vector<aicli::testkit::MockRule> rules;
    aicli::testkit::MockRule fallback;
    fallback.reply = reply;
    if (!rules_file.empty()) {
        std::ifstream in(rules_file);
        std::stringstream text;
        text << in.rdbuf();
        try {
            std::tie(rules, fallback) = aicli::testkit::parse_rules(text.str());
        } catch (const aicli::ini::ParseError& e) {
            std::cerr << "aicli-mock: " << rules_file << ": " << e.what() << "\n";
            return 2;
        }
    }

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);

    aicli::testkit::MockServer server(std::move(rules), std::move(fallback));
    std::cout << "listening on " << server.endpoint() << std::endl;

    std::size_t reported = 0;
    while (!stop_requested) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        auto recs = server.recordings();
        for (; reported < recs.size(); ++reported) {
            const auto& r = recs[reported];
            nlohmann::json line{{"rule", r.rule_index}, {"body", r.raw_body}};
            std::cout << line.dump() << std::endl;
        }
    }
    server.stop();
    return 0;
}
