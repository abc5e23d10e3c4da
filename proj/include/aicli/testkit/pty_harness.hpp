#pragma once

// Expect-style driver for host programs running on a pseudo-terminal with
// the shim preloaded, optionally under a ptrace-based syscall tracer.

#include <fcntl.h>
#include <poll.h>
#include <pty.h>
#include <signal.h>
#include <sys/ptrace.h>
#include <sys/syscall.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "aicli/config.hpp"
#include "aicli/strings.hpp"

namespace aicli::testkit {

using Clock = std::chrono::steady_clock;

inline bool is_loopback_url(std::string_view url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) return false;
    auto rest = url.substr(scheme_end + 3);
    std::string_view host;
    if (!rest.empty() && rest.front() == '[') {
        host = rest.substr(0, rest.find(']') + 1);
    } else {
        host = rest.substr(0, rest.find_first_of(":/"));
    }
    return host == "127.0.0.1" || host == "localhost" || host == "[::1]";
}

struct PtySession {
    std::vector<std::string> argv;
    std::string endpoint;                          // must be a loopback URL
    std::optional<std::filesystem::path> preload;  // shim to inject, if any
    std::string api_key = "test-key";
    std::string extra_config;  // INI text appended to the generated config
    Environment extra_env;
    bool trace_syscalls = false;
};

struct Step {
    enum class Kind { send, hotkey, expect, silent, expect_exit };
    Kind kind = Kind::send;
    std::string text;
    std::chrono::milliseconds duration{5000};
};

namespace step {
inline Step send(std::string bytes) { return {Step::Kind::send, std::move(bytes), {}}; }
inline Step line(std::string text) { return {Step::Kind::send, std::move(text) + "\r", {}}; }
inline Step hotkey(std::string wire) { return {Step::Kind::hotkey, std::move(wire), {}}; }
inline Step expect(std::string text, std::chrono::milliseconds timeout = std::chrono::milliseconds(5000)) {
    return {Step::Kind::expect, std::move(text), timeout};
}
/// No output may arrive for the whole duration.
inline Step silent(std::chrono::milliseconds duration) { return {Step::Kind::silent, {}, duration}; }
inline Step expect_exit(std::chrono::milliseconds timeout = std::chrono::milliseconds(5000)) {
    return {Step::Kind::expect_exit, {}, timeout};
}
}  // namespace step

struct SyscallEvent {
    std::string name;
    Clock::time_point when;
};

struct PtyResult {
    std::string transcript;
    bool exited = false;
    int exit_code = -1;
    int term_signal = 0;
    std::optional<Clock::time_point> first_hotkey;
    std::vector<SyscallEvent> syscalls;
};

class HarnessError : public std::runtime_error {
public:
    enum class Kind { expect_timeout, host_crashed, unexpected_output, capability_unavailable, spawn_failed };

    HarnessError(Kind kind, const std::string& what, std::string transcript = {})
        : std::runtime_error(what), kind_(kind), transcript_(std::move(transcript)) {}
    Kind kind() const noexcept { return kind_; }
    const std::string& transcript() const noexcept { return transcript_; }

private:
    Kind kind_;
    std::string transcript_;
};

namespace detail {

inline std::string syscall_name(long nr) {
    static const std::map<long, const char*> names = {
        {SYS_read, "read"},         {SYS_write, "write"},       {SYS_openat, "openat"},
        {SYS_close, "close"},       {SYS_mmap, "mmap"},         {SYS_munmap, "munmap"},
        {SYS_mprotect, "mprotect"}, {SYS_brk, "brk"},           {SYS_ioctl, "ioctl"},
        {SYS_socket, "socket"},     {SYS_connect, "connect"},   {SYS_sendto, "sendto"},
        {SYS_recvfrom, "recvfrom"}, {SYS_sendmsg, "sendmsg"},   {SYS_recvmsg, "recvmsg"},
        {SYS_bind, "bind"},         {SYS_getrandom, "getrandom"}, {SYS_exit_group, "exit_group"},
        {SYS_execve, "execve"},     {SYS_clone, "clone"},       {SYS_futex, "futex"},
        {SYS_rt_sigaction, "rt_sigaction"}, {SYS_newfstatat, "newfstatat"},
        {SYS_getsockopt, "getsockopt"}, {SYS_setsockopt, "setsockopt"}, {SYS_socketpair, "socketpair"},
    };
    auto it = names.find(nr);
    return it != names.end() ? it->second : "syscall_" + std::to_string(nr);
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "aicli-pty-XXXXXX").string();
        if (!mkdtemp(tmpl.data())) throw HarnessError(HarnessError::Kind::spawn_failed, "mkdtemp failed");
        path = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

// Shared between the driving thread and the thread that forked the host
// (which, being its ptrace parent, must also reap it).
struct ChildWatch {
    std::atomic<bool> done{false};
    int exit_code = -1;
    int term_signal = 0;
    std::mutex mutex;
    std::vector<SyscallEvent> syscalls;
};

inline void trace_loop(pid_t pid, ChildWatch& watch) {
    int status = 0;
    if (waitpid(pid, &status, 0) != pid || !WIFSTOPPED(status)) {
        // ptrace refused: the child exits with 126 before exec.
        watch.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        watch.term_signal = WIFSIGNALED(status) ? WTERMSIG(status) : 0;
        watch.done = true;
        return;
    }
    ptrace(PTRACE_SETOPTIONS, pid, nullptr,
           PTRACE_O_TRACESYSGOOD | PTRACE_O_EXITKILL | PTRACE_O_TRACEEXEC | PTRACE_O_TRACECLONE | PTRACE_O_TRACEFORK |
               PTRACE_O_TRACEVFORK);
    ptrace(PTRACE_SYSCALL, pid, nullptr, nullptr);
    while (true) {
        pid_t tid = waitpid(-1, &status, __WALL);
        if (tid < 0) break;
        if (WIFEXITED(status) || WIFSIGNALED(status)) {
            if (tid == pid) {
                watch.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
                watch.term_signal = WIFSIGNALED(status) ? WTERMSIG(status) : 0;
                break;
            }
            continue;
        }
        if (!WIFSTOPPED(status)) continue;
        int sig = WSTOPSIG(status);
        int inject = 0;
        if (sig == (SIGTRAP | 0x80)) {
            __ptrace_syscall_info info{};
            if (ptrace(PTRACE_GET_SYSCALL_INFO, tid, sizeof info, &info) > 0 &&
                info.op == PTRACE_SYSCALL_INFO_ENTRY) {
                std::lock_guard lock(watch.mutex);
                watch.syscalls.push_back(SyscallEvent{syscall_name(static_cast<long>(info.entry.nr)), Clock::now()});
            }
        } else if (sig == SIGTRAP && (status >> 16) != 0) {
            // clone/fork event stop
        } else if (sig != SIGSTOP || tid == pid) {
            inject = sig;
        }
        ptrace(PTRACE_SYSCALL, tid, nullptr, reinterpret_cast<void*>(static_cast<long>(inject)));
    }
    // Reap stray traced threads/children.
    while (waitpid(-1, &status, __WALL | WNOHANG) > 0) {
    }
    watch.done = true;
}

inline void wait_loop(pid_t pid, ChildWatch& watch) {
    int status = 0;
    if (waitpid(pid, &status, 0) == pid) {
        watch.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        watch.term_signal = WIFSIGNALED(status) ? WTERMSIG(status) : 0;
    }
    watch.done = true;
}

}  // namespace detail

/// Whether this platform lets the harness trace a child's syscalls.
inline bool syscall_tracing_available() {
#if defined(__linux__) && defined(PTRACE_GET_SYSCALL_INFO)
    static const bool available = [] {
        pid_t pid = fork();
        if (pid < 0) return false;
        if (pid == 0) {
            if (ptrace(PTRACE_TRACEME, 0, nullptr, nullptr) != 0) _exit(126);
            raise(SIGSTOP);
            _exit(0);
        }
        int status = 0;
        waitpid(pid, &status, 0);
        if (!WIFSTOPPED(status)) return false;
        __ptrace_syscall_info info{};
        bool ok = ptrace(PTRACE_GET_SYSCALL_INFO, pid, sizeof info, &info) >= 0;
        kill(pid, SIGKILL);
        ptrace(PTRACE_CONT, pid, nullptr, nullptr);
        waitpid(pid, &status, 0);
        return ok;
    }();
    return available;
#else
    return false;
#endif
}

/// Writes the shim configuration pointing at the session's endpoint.
inline std::string session_config(const PtySession& session) {
    return "[general]\nendpoint = " + session.endpoint + "\ntimeout_ms = 5000\n\n[auth]\napi_key = " +
           session.api_key + "\n\n" + session.extra_config + "\n";
}

/// Spawns the session's host on a pseudo-terminal, plays `script`, and
/// returns what the terminal showed. Throws HarnessError when an expect
/// times out, output appears during a silent step, or the host dies from a
/// signal before the script finishes.
inline PtyResult pty_run(const PtySession& session, const std::vector<Step>& script) {
    using HE = HarnessError;
    if (session.argv.empty()) throw HE(HE::Kind::spawn_failed, "empty command line");
    if (!is_loopback_url(session.endpoint))
        throw std::invalid_argument("harness endpoint must be a loopback address: " + session.endpoint);
    if (session.trace_syscalls && !syscall_tracing_available())
        throw HE(HE::Kind::capability_unavailable, "syscall tracing is unavailable on this platform");

    detail::TempDir dir;
    auto config_path = dir.path / "ai-cli.ini";
    std::ofstream(config_path) << session_config(session);

    Environment env;
    for (const char* keep : {"PATH", "LANG", "LC_ALL"})
        if (const char* v = std::getenv(keep)) env[keep] = v;
    env["TERM"] = "dumb";
    env["HOME"] = dir.path.string();
    env["INPUTRC"] = "/dev/null";
    env[kConfigEnvVar] = config_path.string();
    if (session.preload) env["LD_PRELOAD"] = session.preload->string();
    for (const auto& [k, v] : session.extra_env) env[k] = v;

    std::vector<std::string> env_strings;
    for (const auto& [k, v] : env) env_strings.push_back(k + "=" + v);
    std::vector<char*> envp;
    for (auto& s : env_strings) envp.push_back(s.data());
    envp.push_back(nullptr);
    std::vector<std::string> argv_strings = session.argv;
    std::vector<char*> argv;
    for (auto& s : argv_strings) argv.push_back(s.data());
    argv.push_back(nullptr);
    std::string cwd = dir.path.string();

    detail::ChildWatch watch;
    std::promise<std::pair<pid_t, int>> spawned;
    auto spawned_future = spawned.get_future();
    const bool trace = session.trace_syscalls;

    std::thread reaper([&] {
        winsize ws{24, 200, 0, 0};
        int master = -1;
        pid_t pid = forkpty(&master, nullptr, nullptr, &ws);
        if (pid == 0) {
            if (chdir(cwd.c_str()) != 0) _exit(127);
            if (trace) {
                if (ptrace(PTRACE_TRACEME, 0, nullptr, nullptr) != 0) _exit(126);
                raise(SIGSTOP);
            }
            execve(argv[0], argv.data(), envp.data());
            _exit(127);
        }
        spawned.set_value({pid, master});
        if (pid < 0) {
            watch.done = true;
            return;
        }
        if (trace)
            detail::trace_loop(pid, watch);
        else
            detail::wait_loop(pid, watch);
    });

    auto [pid, master] = spawned_future.get();
    if (pid < 0) {
        reaper.join();
        throw HE(HE::Kind::spawn_failed, "forkpty failed");
    }

    PtyResult result;
    std::size_t cursor = 0;  // expects match text that arrived after the previous match

    enum class Pumped { data, idle, closed };
    // Reads whatever arrives within `wait`.
    auto pump = [&](std::chrono::milliseconds wait) {
        pollfd pfd{master, POLLIN, 0};
        int rc = poll(&pfd, 1, static_cast<int>(wait.count()));
        if (rc == 0) return Pumped::idle;
        if (rc < 0) return Pumped::closed;
        char buf[4096];
        ssize_t n = read(master, buf, sizeof buf);
        if (n <= 0) return Pumped::closed;
        result.transcript.append(buf, static_cast<std::size_t>(n));
        return Pumped::data;
    };

    auto finish = [&] {
        if (!watch.done) kill(pid, SIGKILL);
        while (!watch.done) pump(std::chrono::milliseconds(20));
        while (pump(std::chrono::milliseconds(0)) == Pumped::data) {
        }
        reaper.join();
        close(master);
        result.exited = watch.exit_code >= 0;
        result.exit_code = watch.exit_code;
        result.term_signal = watch.term_signal;
        std::lock_guard lock(watch.mutex);
        result.syscalls = watch.syscalls;
    };

    try {
        for (const auto& s : script) {
            switch (s.kind) {
                case Step::Kind::send:
                case Step::Kind::hotkey: {
                    if (s.kind == Step::Kind::hotkey && !result.first_hotkey) result.first_hotkey = Clock::now();
                    std::size_t off = 0;
                    while (off < s.text.size()) {
                        ssize_t n = write(master, s.text.data() + off, s.text.size() - off);
                        if (n <= 0) throw HE(HE::Kind::host_crashed, "terminal closed while sending", result.transcript);
                        off += static_cast<std::size_t>(n);
                    }
                    break;
                }
                case Step::Kind::expect: {
                    auto deadline = Clock::now() + s.duration;
                    while (true) {
                        if (auto pos = result.transcript.find(s.text, cursor); pos != std::string::npos) {
                            cursor = pos + s.text.size();
                            break;
                        }
                        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
                        if (left.count() <= 0)
                            throw HE(HE::Kind::expect_timeout, "timed out waiting for '" + s.text + "'",
                                     result.transcript);
                        auto got = pump(std::min(left, std::chrono::milliseconds(50)));
                        if (got == Pumped::closed || (got == Pumped::idle && watch.done)) {
                            while (pump(std::chrono::milliseconds(0)) == Pumped::data) {
                            }
                            if (result.transcript.find(s.text, cursor) != std::string::npos) continue;
                            if (!watch.done) continue;
                            if (watch.term_signal != 0)
                                throw HE(HE::Kind::host_crashed,
                                         "host killed by signal " + std::to_string(watch.term_signal) +
                                             " while waiting for '" + s.text + "'",
                                         result.transcript);
                            throw HE(HE::Kind::expect_timeout, "host exited before '" + s.text + "' appeared",
                                     result.transcript);
                        }
                    }
                    break;
                }
                case Step::Kind::silent: {
                    auto before = result.transcript.size();
                    auto deadline = Clock::now() + s.duration;
                    while (Clock::now() < deadline) {
                        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
                        if (pump(std::max(left, std::chrono::milliseconds(1))) == Pumped::closed) break;
                    }
                    if (result.transcript.size() != before)
                        throw HE(HE::Kind::unexpected_output, "output arrived during a silent step",
                                 result.transcript);
                    break;
                }
                case Step::Kind::expect_exit: {
                    auto deadline = Clock::now() + s.duration;
                    while (!watch.done && Clock::now() < deadline) pump(std::chrono::milliseconds(20));
                    if (!watch.done)
                        throw HE(HE::Kind::expect_timeout, "host did not exit", result.transcript);
                    break;
                }
            }
        }
    } catch (...) {
        finish();
        throw;
    }
    finish();
    if (result.term_signal != 0 && result.term_signal != SIGKILL)
        throw HE(HE::Kind::host_crashed, "host killed by signal " + std::to_string(result.term_signal),
                 result.transcript);
    return result;
}

/// Runs the session under the syscall tracer and returns the host's
/// syscalls in order. Throws HarnessError(capability_unavailable) when the
/// platform has no usable tracer.
inline PtyResult trace_syscalls(PtySession session, const std::vector<Step>& script) {
    session.trace_syscalls = true;
    return pty_run(session, script);
}

}  // namespace aicli::testkit
