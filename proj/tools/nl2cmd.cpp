// nl2cmd: translate a natural-language request into a command.
//
//   nl2cmd --program bash "How long has the computer been running?"
//   echo "list open ports" | nl2cmd --cost

#include <filesystem>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aicli/nl2cmd.hpp"

int main(int argc, char** argv) {
    aicli::nl2cmd::CliInvocation inv;
    std::vector<std::string> words;
    double temperature = 0;
    std::string model, endpoint, config_file;

    CLI::App app{"Translate a natural-language request into a command for an interactive program"};
    app.add_option("--program", inv.program, "Program the command is for")->capture_default_str();
    app.add_option("--context", inv.context, "A previously typed command given as context (repeatable)");
    auto* model_opt = app.add_option("--model", model, "Model identifier");
    auto* temp_opt = app.add_option("--temperature", temperature, "Sampling temperature in [0, 2]");
    auto* endpoint_opt = app.add_option("--endpoint", endpoint, "Chat-completions endpoint URL");
    auto* config_opt = app.add_option("--config", config_file, "Extra configuration file (highest precedence)");
    app.add_flag("--cost", inv.show_cost, "Print token usage and cost to standard error");
    app.add_option("prompt", words, "The request; read from standard input when omitted");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : aicli::nl2cmd::kConfigError;
    }

    if (*model_opt) inv.model = model;
    if (*temp_opt) inv.temperature = temperature;
    if (*endpoint_opt) inv.endpoint = endpoint;
    if (*config_opt) inv.config_file = config_file;

    if (words.empty()) {
        inv.prompt.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
        inv.prompt = std::string(aicli::trim(inv.prompt));
    } else {
        std::ostringstream joined;
        for (std::size_t i = 0; i < words.size(); ++i) joined << (i ? " " : "") << words[i];
        inv.prompt = joined.str();
    }

    std::error_code ec;
    return aicli::nl2cmd::run(inv, aicli::current_environment(), std::filesystem::current_path(ec), std::cout,
                              std::cerr);
}
