#include <gtest/gtest.h>

#include "aicli/chat.hpp"
#include "aicli/key_sequence.hpp"
#include "test_support.hpp"

using namespace aicli;
using namespace aicli::chat;
using aicli::test::Gen;

TEST(KeySequence, DefaultIsCtrlXA) {
    auto seq = KeySequence::default_binding();
    EXPECT_EQ(seq.wire(), std::string("\x18\x61"));
    EXPECT_EQ(KeySequence::parse("Ctrl-X A").wire(), seq.wire());
}

TEST(KeySequence, ControlMapsToLowFiveBits) {
    EXPECT_EQ(KeySequence::parse("ctrl-g").wire(), "\x07");
    EXPECT_EQ(KeySequence::parse("CTRL-G").wire(), "\x07");
    for (char c = 'a'; c <= 'z'; ++c)
        EXPECT_EQ(KeySequence::parse(std::string("ctrl-") + c).wire(), std::string(1, static_cast<char>(c & 0x1f)));
}

TEST(KeySequence, NamedAndMetaKeys) {
    EXPECT_EQ(KeySequence::parse("meta-a").wire(), "\x1b" "a");
    EXPECT_EQ(KeySequence::parse("esc space tab").wire(), "\x1b \t");
}

TEST(KeySequence, MalformedSequencesAreRejected) {
    EXPECT_THROW(KeySequence::parse("ctrl-"), KeySequenceError);
    EXPECT_THROW(KeySequence::parse(""), KeySequenceError);
    EXPECT_THROW(KeySequence::parse("ctrl-xy"), KeySequenceError);
    EXPECT_THROW(KeySequence::parse("hyper-a"), KeySequenceError);
}

TEST(KeySequence, EditorFormEscapesBackslash) {
    EXPECT_EQ(KeySequence::parse("ctrl-x \\").editor_keyseq(), "\x18\\\\");
}

TEST(Role, SerializedForms) {
    EXPECT_STREQ(to_string(Role::system), "system");
    EXPECT_STREQ(to_string(Role::user), "user");
    EXPECT_STREQ(to_string(Role::assistant), "assistant");
    EXPECT_EQ(role_from_string("assistant"), Role::assistant);
    EXPECT_THROW(role_from_string("tool"), std::invalid_argument);
}

TEST(SystemPrompt, BashProfileNamesExecutableCommands) {
    auto msg = system_prompt(profile_for(Config{}, "bash"));
    EXPECT_EQ(msg.role, Role::system);
    EXPECT_NE(msg.content.find("executable commands"), std::string::npos);
    EXPECT_NE(msg.content.find("bash"), std::string::npos);
    // The standing instructions follow the profile prompt.
    EXPECT_NE(msg.content.find("explanations"), std::string::npos);
    EXPECT_NE(msg.content.find("comment"), std::string::npos);
}

TEST(SystemPrompt, EmptyProfilePromptGivesExactlyTheInstructions) {
    ProgramProfile p;
    p.program = "bash";
    auto msg = system_prompt(p);
    EXPECT_EQ(msg.content, replace_all(defaults::instructions, "{comment}", "#"));
}

TEST(SystemPrompt, GdbProfileNamesGdb) {
    auto c = merge({parse_source(bundled_config)});
    auto msg = system_prompt(profile_for(c, "gdb"));
    EXPECT_NE(msg.content.find("gdb"), std::string::npos);
}

TEST(SystemPrompt, CommentLeaderIsSubstituted) {
    ProgramProfile p{"sqlite3", "SQL helper.", {}, "--"};
    auto msg = system_prompt(p);
    EXPECT_NE(msg.content.find("(--)"), std::string::npos) << msg.content;
    EXPECT_EQ(msg.content.find("{comment}"), std::string::npos);
}

TEST(SystemPrompt, EmptyInstructionsLeaveProfilePromptAlone) {
    ProgramProfile p{"bash", "Prompt.", {}, "#"};
    EXPECT_EQ(system_prompt(p, "").content, "Prompt.");
}

TEST(Assemble, ReproducesDocumentedFourMessageRequest) {
    PromptContext ctx;
    ctx.profile = ProgramProfile{"bash",
                                 "You are an assistant who provides executable commands for the bash command-line "
                                 "interface.",
                                 {{"List files in current directory", "ls"}},
                                 "#"};
    ctx.live_prompt = "How long has the computer been running?";
    ctx.instructions = "";
    auto msgs = assemble(ctx, 3);
    std::vector<ChatMessage> expected{
        {Role::system, "You are an assistant who provides executable commands for the bash command-line interface."},
        {Role::user, "List files in current directory"},
        {Role::assistant, "ls"},
        {Role::user, "How long has the computer been running?"},
    };
    EXPECT_EQ(msgs, expected);
}

TEST(Assemble, MinimalIsSystemThenUser) {
    PromptContext ctx;
    ctx.profile.program = "x";
    ctx.live_prompt = "do it";
    auto msgs = assemble(ctx, 3);
    ASSERT_EQ(msgs.size(), 2u);
    EXPECT_EQ(msgs[0].role, Role::system);
    EXPECT_EQ(msgs[1], (ChatMessage{Role::user, "do it"}));
}

TEST(Assemble, ThreeExchangesFiveHistoryLimitThree) {
    PromptContext ctx;
    ctx.profile.exchanges = {{"u1", "a1"}, {"u2", "a2"}, {"u3", "a3"}};
    ctx.history = {"h1", "h2", "h3", "h4", "h5"};
    ctx.live_prompt = "now";
    auto msgs = assemble(ctx, 3);
    // 1 + 2*3 + min(3, 5) + 1
    ASSERT_EQ(msgs.size(), 11u);
    EXPECT_EQ(msgs[7], (ChatMessage{Role::user, "h3"}));
    EXPECT_EQ(msgs[8], (ChatMessage{Role::user, "h4"}));
    EXPECT_EQ(msgs[9], (ChatMessage{Role::user, "h5"}));
    EXPECT_EQ(msgs[10], (ChatMessage{Role::user, "now"}));
}

TEST(Assemble, BlankLivePromptIsRejected) {
    PromptContext ctx;
    ctx.live_prompt = " \t\n";
    EXPECT_THROW(assemble(ctx, 3), std::invalid_argument);
    ctx.live_prompt = "";
    EXPECT_THROW(assemble(ctx, 3), std::invalid_argument);
}

TEST(HarvestHistory, Examples) {
    EXPECT_TRUE(harvest_history(std::vector<std::string>{}, 3).empty());
    EXPECT_EQ(harvest_history(std::vector<std::string>{"a", "b", "c", "d"}, 2), (std::vector<std::string>{"c", "d"}));
    EXPECT_EQ(harvest_history(std::vector<std::string>{"ls", "", "uptime"}, 5),
              (std::vector<std::string>{"ls", "uptime"}));
    EXPECT_TRUE(harvest_history(std::vector<std::string>{"a"}, 0).empty());
}

TEST(HarvestHistory, FailedPromptsAreSkippedBeforeLimiting) {
    std::vector<HistoryEntry> raw{{"ls", false}, {"list big files", true}, {"pwd", false}, {"   ", false}};
    EXPECT_EQ(harvest_history(std::span<const HistoryEntry>(raw), 2), (std::vector<std::string>{"ls", "pwd"}));
}

TEST(AssembleProperties, OrderingAndLengthHoldForRandomInputs) {
    Gen g(1);
    for (int trial = 0; trial < 1000; ++trial) {
        PromptContext ctx;
        ctx.profile.program = g.ident();
        ctx.profile.system_prompt = g.coin() ? g.text() : "";
        int pairs = g.range(0, 3);
        for (int i = 0; i < pairs; ++i) ctx.profile.exchanges.push_back({g.text(), g.text(2)});
        int hist = g.range(0, 8);
        for (int i = 0; i < hist; ++i) ctx.history.push_back(g.text(3));
        ctx.live_prompt = g.text();
        std::size_t limit = static_cast<std::size_t>(g.range(0, 6));

        auto msgs = assemble(ctx, limit);
        auto again = assemble(ctx, limit);
        EXPECT_EQ(msgs, again);

        std::size_t used = std::min(limit, ctx.history.size());
        ASSERT_EQ(msgs.size(), 1 + 2 * ctx.profile.exchanges.size() + used + 1);
        EXPECT_EQ(msgs.front().role, Role::system);
        EXPECT_EQ(msgs.back(), (ChatMessage{Role::user, ctx.live_prompt}));
        for (std::size_t i = 1; i < msgs.size(); ++i)
            EXPECT_FALSE(msgs[i].role == Role::assistant && msgs[i - 1].role == Role::assistant);
        for (std::size_t i = 0; i < ctx.profile.exchanges.size(); ++i) {
            EXPECT_EQ(msgs[1 + 2 * i], (ChatMessage{Role::user, ctx.profile.exchanges[i].user}));
            EXPECT_EQ(msgs[2 + 2 * i], (ChatMessage{Role::assistant, ctx.profile.exchanges[i].assistant}));
        }
        for (std::size_t i = 0; i < used; ++i)
            EXPECT_EQ(msgs[1 + 2 * ctx.profile.exchanges.size() + i].content,
                      ctx.history[ctx.history.size() - used + i]);
    }
}
