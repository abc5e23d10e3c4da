// Preloadable shim: LD_PRELOAD=libaicli.so <program>
//
// The constructor runs before the host's main(). It only reads
// configuration and looks up symbols; the HTTP stack is loaded the first
// time the hotkey is pressed.

#include <dlfcn.h>
#include <errno.h>
#include <unistd.h>

#include <filesystem>
#include <string>
#include <system_error>

#include "aicli/attach.hpp"

namespace {

aicli::attach::Attacher& attacher() {
    static aicli::attach::Attacher instance;
    return instance;
}

int ai_help(int /*count*/, int /*key*/) {
    try {
        return attacher().on_hotkey();
    } catch (const std::exception& e) {
        attacher().log(std::string("hotkey failed: ") + e.what());
    } catch (...) {
        attacher().log("hotkey failed");
    }
    return 0;
}

std::string host_program() {
    std::string name = program_invocation_short_name ? program_invocation_short_name : "";
    if (name.empty()) {
        std::error_code ec;
        name = std::filesystem::read_symlink("/proc/self/exe", ec).filename().string();
    }
    return name;
}

__attribute__((constructor)) void aicli_on_load() {
    try {
        std::error_code ec;
        auto cwd = std::filesystem::current_path(ec);
        aicli::attach::Attacher::Options opts;
        opts.resolve = [](const char* name) { return dlsym(RTLD_DEFAULT, name); };
        opts.env = aicli::current_environment();
        opts.cwd = cwd;
        opts.program = host_program();
        opts.handler = &ai_help;
        const auto& state = attacher().on_load(std::move(opts));
        if (!state.failure.empty()) attacher().log(state.failure);
    } catch (...) {
        // Never disturb the host.
    }
}

}  // namespace

// Test hook: lets a host report what the shim did.
extern "C" __attribute__((visibility("default"))) int aicli_shim_state(int* detected, int* bound, int* init_count) {
    const auto& s = attacher().state();
    if (detected) *detected = s.detected;
    if (bound) *bound = s.bound;
    if (init_count) *init_count = aicli::http::curl::init_count();
    return 0;
}
