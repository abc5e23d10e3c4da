#include <gtest/gtest.h>

#include "aicli/attach.hpp"
#include "fake_editor.hpp"
#include "test_support.hpp"

using namespace aicli;
using namespace aicli::attach;
using aicli::test::FakeBackendLog;
using aicli::test::FakeEditor;
using aicli::test::TempDir;

namespace {

Attacher* active = nullptr;
int hotkey_handler(int, int) { return active->on_hotkey(); }

class AttachTest : public ::testing::Test {
protected:
    void SetUp() override {
        aicli::test::current_editor = &editor;
        active = &attacher;
        log = std::make_shared<FakeBackendLog>();
    }
    void TearDown() override {
        aicli::test::current_editor = nullptr;
        active = nullptr;
    }

    Attacher::Options options(const std::string& config_text = "") {
        Attacher::Options o;
        o.resolve = editor.resolver();
        o.env = {{"HOME", dir.path().string()}};
        if (!config_text.empty()) {
            aicli::test::write_file(dir / "cfg.ini", config_text);
            o.env[kConfigEnvVar] = (dir / "cfg.ini").string();
        }
        o.cwd = dir.path();
        o.program = "bash";
        o.handler = &hotkey_handler;
        o.search_paths.system_file = dir / "no-system-file";
        o.make_backend = aicli::test::fake_factory(log);
        return o;
    }

    TempDir dir;
    FakeEditor editor;
    Attacher attacher;
    std::shared_ptr<FakeBackendLog> log;
};

}  // namespace

TEST(DetectAbi, AbsentWhenAnyRequiredSymbolIsMissing) {
    FakeEditor e;
    for (const char* sym : {"rl_line_buffer", "rl_point", "rl_end", "rl_bind_keyseq", "rl_add_defun",
                            "rl_insert_text", "rl_delete_text", "rl_redisplay"}) {
        e.missing = {sym};
        EXPECT_FALSE(detect_abi(e.resolver())) << sym;
    }
    e.missing.clear();
    auto abi = detect_abi(e.resolver());
    ASSERT_TRUE(abi);
    EXPECT_EQ(abi->resolved.size(), 14u);
}

TEST(DetectAbi, OptionalSymbolsMayBeAbsent) {
    FakeEditor e;
    e.with_history = false;
    auto abi = detect_abi(e.resolver());
    ASSERT_TRUE(abi);
    EXPECT_EQ(abi->history_list, nullptr);
    EXPECT_TRUE(harvest_host_history(*abi, 3).empty());
}

TEST(DetectAbi, NothingResolvableMeansNothingDetected) {
    EXPECT_FALSE(detect_abi([](const char*) -> void* { return nullptr; }));
}

TEST_F(AttachTest, LoadBindsDefaultSequenceWithoutTouchingTheNetwork) {
    const auto& st = attacher.on_load(options());
    EXPECT_TRUE(st.detected);
    EXPECT_TRUE(st.bound);
    EXPECT_EQ(st.init_count, 0);
    EXPECT_EQ(log->inits, 0);
    ASSERT_EQ(editor.functions.count("ai-help"), 1u);
    ASSERT_EQ(editor.bindings.count("\x18\x61"), 1u);
    EXPECT_EQ(editor.bindings["\x18\x61"], &hotkey_handler);
}

TEST_F(AttachTest, ConfiguredSequenceIsBound) {
    attacher.on_load(options("[binding]\nkey = ctrl-g\n"));
    EXPECT_EQ(editor.bindings.count("\x07"), 1u);
    EXPECT_EQ(editor.bindings.count("\x18\x61"), 0u);
}

TEST_F(AttachTest, OnLoadIsIdempotent) {
    attacher.on_load(options());
    editor.bindings.clear();
    const auto& st = attacher.on_load(options());
    EXPECT_TRUE(st.bound);
    EXPECT_TRUE(editor.bindings.empty());
}

TEST_F(AttachTest, SecondAttacherSeesExistingFunctionAndDoesNotRebind) {
    attacher.on_load(options());
    editor.bindings.clear();
    Attacher other;
    const auto& st = other.on_load(options());
    EXPECT_TRUE(st.bound);
    EXPECT_TRUE(editor.bindings.empty());
}

TEST_F(AttachTest, RejectedBindingLeavesUnbound) {
    editor.bind_result = 1;
    const auto& st = attacher.on_load(options());
    EXPECT_TRUE(st.detected);
    EXPECT_FALSE(st.bound);
    EXPECT_NE(st.failure.find("ctrl-x a"), std::string::npos) << st.failure;
}

TEST_F(AttachTest, MissingEditorIsInert) {
    editor.missing = {"rl_bind_keyseq"};
    const auto& st = attacher.on_load(options());
    EXPECT_FALSE(st.detected);
    EXPECT_FALSE(st.bound);
    EXPECT_TRUE(editor.functions.empty());
    editor.set_line("anything");
    attacher.on_hotkey();
    EXPECT_EQ(editor.text, "anything");
    EXPECT_EQ(log->inits, 0);
}

TEST_F(AttachTest, BadConfigurationIsInert) {
    const auto& st = attacher.on_load(options("[general]\ntemperature = hot\n"));
    EXPECT_FALSE(st.bound);
    EXPECT_NE(st.failure.find("configuration"), std::string::npos);
    EXPECT_TRUE(editor.bindings.empty());
}

TEST_F(AttachTest, HotkeyReplacesBufferWithCommand) {
    attacher.on_load(options());
    log->replies.push_back(aicli::test::reply("uptime\n"));
    editor.set_line("How long has the computer been running?");
    attacher.on_hotkey();
    EXPECT_EQ(editor.text, "uptime");
    EXPECT_EQ(editor.point, editor.end);
    EXPECT_EQ(editor.redisplays, 1);
    EXPECT_EQ(log->inits, 1);
    EXPECT_EQ(attacher.state().init_count, 1);
    ASSERT_EQ(log->requests.size(), 1u);
    EXPECT_EQ(log->requests[0].messages.back().content, "How long has the computer been running?");
    EXPECT_EQ(log->requests[0].messages.front().role, chat::Role::system);
}

TEST_F(AttachTest, BlankBufferRingsBellAndSendsNothing) {
    attacher.on_load(options());
    editor.set_line("   ");
    attacher.on_hotkey();
    EXPECT_EQ(editor.dings, 1);
    EXPECT_EQ(editor.text, "   ");
    EXPECT_TRUE(log->requests.empty());
    EXPECT_EQ(log->inits, 0);
}

TEST_F(AttachTest, BackendInitializedOnceAcrossManyHotkeys) {
    attacher.on_load(options());
    for (int i = 0; i < 10; ++i) {
        editor.set_line("prompt " + std::to_string(i));
        attacher.on_hotkey();
    }
    EXPECT_EQ(log->inits, 1);
    EXPECT_EQ(log->requests.size(), 10u);
}

TEST_F(AttachTest, FailureLeavesCommentAndMarksPromptFailed) {
    attacher.on_load(options());
    editor.push_history("ls");
    log->replies.push_back(backend::BackendError{backend::BackendError::Kind::http_status, 500, "boom"});
    editor.set_line("list big files");
    attacher.on_hotkey();
    EXPECT_EQ(editor.text, "# ai-cli error: http_status 500");

    ASSERT_EQ(editor.history.size(), 2u);
    EXPECT_STREQ(editor.history[1]->line, "list big files");
    EXPECT_EQ(editor.history[1]->data, &failed_prompt_marker);

    // The failed prompt never becomes context for later requests.
    editor.set_line("show uptime");
    attacher.on_hotkey();
    ASSERT_EQ(log->requests.size(), 2u);
    for (const auto& m : log->requests[1].messages) EXPECT_NE(m.content, "list big files");
    auto& msgs = log->requests[1].messages;
    EXPECT_EQ(msgs[msgs.size() - 2].content, "ls");
}

TEST_F(AttachTest, ErrorCommentUsesProfileLeaderAndStaysOneLine) {
    attacher.on_load(options());
    auto o = options();
    Attacher sql;
    o.program = "sqlite3";
    active = &sql;
    sql.on_load(o);
    log->replies.push_back(backend::BackendError{backend::BackendError::Kind::api_error, 0, "bad\nthing"});
    editor.set_line("count rows");
    sql.on_hotkey();
    EXPECT_EQ(editor.text, "-- ai-cli error: api_error: bad thing");
}

TEST_F(AttachTest, HistoryContextIsTheMostRecentLines) {
    attacher.on_load(options("[general]\nhistory_context = 2\n"));
    for (const char* h : {"cd /tmp", "ls -la", "df -h", "free -m"}) editor.push_history(h);
    editor.set_line("what next");
    attacher.on_hotkey();
    ASSERT_EQ(log->requests.size(), 1u);
    const auto& msgs = log->requests[0].messages;
    ASSERT_GE(msgs.size(), 3u);
    EXPECT_EQ(msgs[msgs.size() - 3], (chat::ChatMessage{chat::Role::user, "df -h"}));
    EXPECT_EQ(msgs[msgs.size() - 2], (chat::ChatMessage{chat::Role::user, "free -m"}));
}

TEST_F(AttachTest, LogFileReceivesFailures) {
    auto logfile = dir / "ai.log";
    attacher.on_load(options("[general]\nlog_file = " + logfile.string() + "\n"));
    log->replies.push_back(backend::BackendError{backend::BackendError::Kind::timeout, 0, ""});
    editor.set_line("slow");
    attacher.on_hotkey();
    EXPECT_EQ(editor.text, "# ai-cli error: timeout");
    EXPECT_NE(aicli::test::read_file(logfile).find("request failed: timeout"), std::string::npos);
}

TEST(RecordFailedPrompt, WithoutHistoryIsNoOp) {
    FakeEditor e;
    aicli::test::current_editor = &e;
    e.with_history = false;
    auto abi = detect_abi(e.resolver());
    ASSERT_TRUE(abi);
    record_failed_prompt(*abi, "x");
    EXPECT_TRUE(e.history.empty());
    aicli::test::current_editor = nullptr;
}
