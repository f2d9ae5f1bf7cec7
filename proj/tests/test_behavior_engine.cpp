#include <doctest.h>

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lifesim/behavior_engine.hpp"
#include "lifesim/desire_pool.hpp"
#include "lifesim/errors.hpp"
#include "lifesim/gateway.hpp"

using namespace lifesim;

namespace {

// Embedding stub with hand-picked vectors, so similarities are exact.
struct MapEmbed : EmbedBackend {
    std::map<std::string, std::vector<float>> vectors;
    std::vector<float> embed(std::string_view text) override {
        auto it = vectors.find(std::string(text));
        if (it == vectors.end())
            throw ValidationError("unexpected embed query: " + std::string(text));
        return it->second;
    }
    std::size_t dim() const override { return vectors.begin()->second.size(); }
    std::string name() const override { return "map"; }
};

struct RecordingBackend : ChatBackend {
    std::shared_ptr<ChatBackend> inner;
    std::vector<ChatRequest> requests;
    explicit RecordingBackend(std::shared_ptr<ChatBackend> b) : inner(std::move(b)) {}
    ChatResult chat(const ChatRequest& req) override {
        requests.push_back(req);
        return inner->chat(req);
    }
    std::string name() const override { return inner->name(); }
};

Json ordered(const std::string& tag, const std::string& reply) {
    return Json{{"tag", tag}, {"match", "ordered"}, {"reply", reply}};
}

Json store_reply(const std::string& query, const std::string& response) {
    return ordered("memory_perception",
                   Json{{"need_store", true}, {"query", query}, {"response", response}}
                       .dump());
}

Json skip_reply() { return ordered("memory_perception", "{\"need_store\": false}"); }

Scenario park_scenario() {
    Scenario s;
    s.id = "u0-e1";
    s.profile.id = "u0";
    s.profile.narrative = "A cautious morning runner.";
    s.env.time.epoch_sec = 1'351'400'000;
    s.env.poi = "City Park";
    s.theme = "Exercise & Fitness";
    s.event_text = "Rolled an ankle on the gravel loop.";
    s.intention_text = "The user wants to treat a twisted ankle.";
    s.explicit_intents = {"The user wants first-aid steps."};
    s.implicit_intents = {"The user wants reassurance it will heal."};
    return s;
}

StageContext park_context() { return make_stage_context(park_scenario()); }

// User-side fixture for one full exchange that keeps the conversation going.
std::vector<Json> user_exchange(const std::string& text) {
    return {
        ordered("emotion", "{\"emotion\": \"curiosity\"}"),
        ordered("action", "{\"action\": \"Continue Conversation\"}"),
        ordered("user_reply", text),
    };
}

std::shared_ptr<ScriptedChatBackend> assistant_backend() {
    return ScriptedChatBackend::from_records({
        ordered("intent_prediction", "{\"intent\": \"The user wants ankle advice.\"}"),
        ordered("assistant_reply", "Rest, ice, compress, and elevate the ankle."),
    });
}

template <typename Fn>
std::string thrown_message(Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "<no exception>";
}

}  // namespace

TEST_CASE("the emotion taxonomy is the fixed 28-label set") {
    CHECK(kEmotions.size() == 28);
    CHECK(is_known_emotion("neutral"));
    CHECK(is_known_emotion("curiosity"));
    CHECK(is_known_emotion("optimism"));
    CHECK(is_known_emotion("joy"));
    CHECK_FALSE(is_known_emotion("joyful"));
    CHECK_FALSE(is_known_emotion(""));
    const std::string options = emotion_options_text();
    CHECK(options.find("admiration, amusement") == 0);
    CHECK(options.rfind(", neutral") == options.size() - 9);
}

TEST_CASE("perception summaries render verbatim") {
    MemoryPerception p;
    CHECK(render_perception(p) == "neutral: no repeated advice detected");

    p.stored = MemoryEntry{"q", "v", {}, 0};
    p.max_similarity = 0.1234;
    CHECK(render_perception(p) ==
          "neutral: the reply added new useful advice to memory (max similarity 0.12)");

    p.negative = true;
    p.max_similarity = 0.925;
    CHECK(render_perception(p) ==
          "negative: the assistant's latest reply repeats advice the user already received "
          "(similarity 0.93 exceeds the threshold); the user notices the repetition");
}

TEST_CASE("dialogue rendering labels speakers") {
    CHECK(render_dialogue({}) == "none");
    std::vector<Turn> turns{{"user", "hi", {}}, {"assistant", "hello", {}}};
    CHECK(render_dialogue(turns) == "User: hi\nAssistant: hello");
}

TEST_CASE("memory perception stores novel advice and flags repeats") {
    MapEmbed embed;
    embed.vectors["Wrap the ankle."] = {1.0f, 0.0f};
    embed.vectors["Try swimming instead."] = {0.0f, 1.0f};
    PromptCatalog prompts;
    StageContext ctx = park_context();
    MemoryStore store;

    auto chat = ScriptedChatBackend::from_records(
        {store_reply("ankle care", "Wrap the ankle."), skip_reply(), skip_reply()});

    MemoryPerception first = perceive_memory("Wrap the ankle.", store, embed, 0.7, *chat,
                                             prompts, ctx, "none", 1);
    CHECK_FALSE(first.negative);
    CHECK(first.max_similarity == 0.0);
    REQUIRE(first.stored.has_value());
    CHECK(first.stored->query == "ankle care");
    CHECK(first.stored->value == "Wrap the ankle.");
    CHECK(first.stored->source_turn == 1);
    REQUIRE(store.entries.size() == 1);

    MemoryPerception repeat = perceive_memory("Wrap the ankle.", store, embed, 0.7, *chat,
                                              prompts, ctx, "some text", 3);
    CHECK(repeat.negative);
    CHECK(repeat.max_similarity == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_FALSE(repeat.stored.has_value());
    CHECK(store.entries.size() == 1);

    MemoryPerception fresh = perceive_memory("Try swimming instead.", store, embed, 0.7,
                                             *chat, prompts, ctx, "some text", 5);
    CHECK_FALSE(fresh.negative);
    CHECK(fresh.max_similarity == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(store.entries.size() == 1);
}

TEST_CASE("the repetition verdict follows the threshold") {
    // cos([1,0], [0.8,0.6]) = 0.8 exactly.
    MapEmbed embed;
    embed.vectors["Ice it nightly."] = {1.0f, 0.0f};
    embed.vectors["Ice it each night."] = {0.8f, 0.6f};
    PromptCatalog prompts;
    StageContext ctx = park_context();

    auto run = [&](double theta) {
        MemoryStore store;
        auto chat = ScriptedChatBackend::from_records(
            {store_reply("icing", "Ice it nightly."), skip_reply()});
        perceive_memory("Ice it nightly.", store, embed, theta, *chat, prompts, ctx,
                        "none", 1);
        return perceive_memory("Ice it each night.", store, embed, theta, *chat, prompts,
                               ctx, "text", 3);
    };

    MemoryPerception strict = run(0.75);
    CHECK(strict.max_similarity == doctest::Approx(0.8).epsilon(1e-6));
    CHECK(strict.negative);
    CHECK_FALSE(run(0.85).negative);
}

TEST_CASE("memory perception validates its inputs and replies") {
    MapEmbed embed;
    embed.vectors["x"] = {1.0f, 0.0f};
    PromptCatalog prompts;
    StageContext ctx = park_context();
    MemoryStore store;
    auto chat = ScriptedChatBackend::from_records({skip_reply()});

    for (double theta : {0.0, 1.0, -0.2, 1.3})
        CHECK(thrown_message([&] {
                  perceive_memory("x", store, embed, theta, *chat, prompts, ctx, "none", 1);
              }).find("memory threshold must lie in (0,1)") != std::string::npos);
    CHECK(thrown_message([&] {
              perceive_memory("", store, embed, 0.7, *chat, prompts, ctx, "none", 1);
          }).find("non-empty reply") != std::string::npos);

    auto no_flag = ScriptedChatBackend::from_records({ordered("memory_perception", "{}")});
    CHECK(thrown_message([&] {
              perceive_memory("x", store, embed, 0.7, *no_flag, prompts, ctx, "none", 1, 0);
          }).find("memory reply missing need_store") != std::string::npos);

    auto no_query = ScriptedChatBackend::from_records(
        {ordered("memory_perception", "{\"need_store\": true, \"query\": \"-1\"}")});
    CHECK(thrown_message([&] {
              perceive_memory("x", store, embed, 0.7, *no_query, prompts, ctx, "none", 1,
                              0);
          }).find("memory reply missing query") != std::string::npos);

    auto no_response = ScriptedChatBackend::from_records({ordered(
        "memory_perception", "{\"need_store\": true, \"query\": \"q\", \"response\": \"\"}")});
    CHECK(thrown_message([&] {
              perceive_memory("x", store, embed, 0.7, *no_response, prompts, ctx, "none", 1,
                              0);
          }).find("memory reply missing response") != std::string::npos);
}

TEST_CASE("emotion inference accepts only taxonomy labels") {
    PromptCatalog prompts;
    StageContext ctx = park_context();
    MemoryPerception perception;

    auto fine = ScriptedChatBackend::from_records({ordered("emotion",
                                                           "{\"emotion\": \"optimism\"}")});
    CHECK(infer_emotion(ctx, "none", perception, *fine, prompts) == "optimism");

    auto offlist = ScriptedChatBackend::from_records({ordered("emotion",
                                                              "{\"emotion\": \"joyful\"}")});
    CHECK(thrown_message([&] { infer_emotion(ctx, "none", perception, *offlist, prompts); })
              .find("emotion outside taxonomy: 'joyful'") != std::string::npos);

    auto shapeless = ScriptedChatBackend::from_records({ordered("emotion", "{\"mood\": 3}")});
    CHECK(thrown_message([&] {
              infer_emotion(ctx, "none", perception, *shapeless, prompts, 0);
          }).find("emotion reply needs a label") != std::string::npos);
}

TEST_CASE("action selection maps the two options and rejects everything else") {
    PromptCatalog prompts;
    StageContext ctx = park_context();
    MemoryPerception perception;

    auto go_on = ScriptedChatBackend::from_records(
        {ordered("action", "{\"action\": \"Continue Conversation\"}")});
    CHECK(select_action(ctx, "none", "neutral", perception, *go_on, prompts) == "continue");

    auto stop = ScriptedChatBackend::from_records(
        {ordered("action", "{\"action\": \"End Conversation\"}")});
    CHECK(select_action(ctx, "none", "neutral", perception, *stop, prompts) == "end");

    auto odd = ScriptedChatBackend::from_records(
        {ordered("action", "{\"action\": \"Pause\"}")});
    CHECK(thrown_message([&] {
              select_action(ctx, "none", "neutral", perception, *odd, prompts);
          }).find("action outside options: 'Pause'") != std::string::npos);
}

TEST_CASE("the user turn prompt carries stage outputs and flips roles") {
    Scenario scenario = park_scenario();
    PromptCatalog prompts;
    MemoryPerception perception;
    perception.negative = true;
    perception.max_similarity = 0.91;

    RecordingBackend chat(ScriptedChatBackend::from_records(
        {ordered("user_reply", "That's the same tip as before...")}));
    std::vector<Turn> turns{{"user", "My ankle hurts.", {}},
                            {"assistant", "Ice it tonight.", {}}};
    const std::string text =
        generate_user_turn(scenario, turns, "annoyance", "end", perception, chat, prompts);
    CHECK(text == "That's the same tip as before...");

    REQUIRE(chat.requests.size() == 1);
    const ChatRequest& req = chat.requests[0];
    CHECK(req.tag == "user_reply");
    REQUIRE(req.messages.size() == 4);
    CHECK(req.messages[0].role == "system");
    CHECK(req.messages[0].content.find("The user wants first-aid steps.") !=
          std::string::npos);
    CHECK(req.messages[0].content.find("The user wants reassurance it will heal.") !=
          std::string::npos);
    CHECK(req.messages[1].role == "assistant");
    CHECK(req.messages[1].content == "My ankle hurts.");
    CHECK(req.messages[2].role == "user");
    CHECK(req.messages[2].content == "Ice it tonight.");
    const std::string& directive = req.messages[3].content;
    CHECK(directive.find("the user notices the repetition") != std::string::npos);
    CHECK(directive.find("Emotion to convey: annoyance") != std::string::npos);
    CHECK(directive.find("Chosen action: End Conversation") != std::string::npos);
    CHECK(directive.find("This is your final message") != std::string::npos);
    CHECK(directive.find("Write the user's next message.") != std::string::npos);

    RecordingBackend opener(ScriptedChatBackend::from_records(
        {ordered("user_reply", "Hi, I just twisted my ankle.")}));
    generate_user_turn(scenario, {}, "nervousness", "continue", MemoryPerception{}, opener,
                       prompts);
    CHECK(opener.requests[0].messages.back().content.find(
              "Start the conversation with your opening message.") != std::string::npos);

    auto hollow = ScriptedChatBackend::from_records({ordered("user_reply", "")});
    CHECK(thrown_message([&] {
              generate_user_turn(scenario, {}, "neutral", "continue", MemoryPerception{},
                                 *hollow, prompts);
          }).find("user reply is empty") != std::string::npos);
}

TEST_CASE("a dialogue ends when the user chooses to end it") {
    Scenario scenario = park_scenario();
    PromptCatalog prompts;
    MapEmbed embed;
    embed.vectors["Rest, ice, compress, and elevate the ankle."] = {1.0f, 0.0f};

    auto user = ScriptedChatBackend::from_records({
        ordered("emotion", "{\"emotion\": \"nervousness\"}"),
        ordered("action", "{\"action\": \"End Conversation\"}"),
        ordered("user_reply", "Quick question, then I have to run."),
    });
    auto assistant = assistant_backend();

    DialogueOptions opts;
    CallLog log;
    Conversation conv = run_dialogue(scenario, *user, *assistant, embed, prompts, opts,
                                     &log);

    CHECK(conv.ended_by == "user_action");
    CHECK(conv.error.empty());
    REQUIRE(conv.turns.size() == 2);
    CHECK(conv.turns[0].speaker == "user");
    CHECK(conv.turns[0].text == "Quick question, then I have to run.");
    CHECK(conv.turns[0].meta.emotion == "nervousness");
    CHECK(conv.turns[0].meta.action == "end");
    REQUIRE(conv.turns[0].meta.memory.has_value());
    CHECK_FALSE(conv.turns[0].meta.memory->negative);
    CHECK(conv.turns[0].meta.memory->max_similarity == 0.0);
    CHECK(conv.turns[1].speaker == "assistant");
    CHECK(conv.turns[1].meta.predicted_intent == "The user wants ankle advice.");
    CHECK(conv.scenario_ref == "u0-e1");

    // The opening exchange never consults memory.
    std::vector<std::string> tags;
    for (const CallLogEntry& e : log.entries()) tags.push_back(e.tag);
    CHECK(tags == std::vector<std::string>{"emotion", "action", "user_reply",
                                           "intent_prediction", "assistant_reply"});
}

TEST_CASE("a dialogue that never ends hits the turn cap") {
    Scenario scenario = park_scenario();
    PromptCatalog prompts;
    MapEmbed embed;
    embed.vectors["Rest, ice, compress, and elevate the ankle."] = {1.0f, 0.0f};

    std::vector<Json> records;
    for (const Json& r : user_exchange("Tell me more.")) records.push_back(r);
    records.push_back(skip_reply());
    auto user_script = ScriptedChatBackend::from_records(records);

    DialogueOptions opts;
    opts.max_turns = 3;
    opts.theta = 0.999;  // repeated fixture replies should not trip the memory check
    CallLog log;
    auto user = user_script;
    auto assistant = assistant_backend();
    Conversation conv = run_dialogue(scenario, *user, *assistant, embed, prompts, opts,
                                     &log);

    CHECK(conv.ended_by == "turn_cap");
    REQUIRE(conv.turns.size() == 6);
    for (std::size_t i = 0; i < conv.turns.size(); ++i)
        CHECK(conv.turns[i].speaker == (i % 2 == 0 ? "user" : "assistant"));

    std::vector<std::string> tags;
    for (const CallLogEntry& e : log.entries()) tags.push_back(e.tag);
    REQUIRE(tags.size() == 17);
    CHECK(tags[0] == "emotion");
    CHECK(tags[5] == "memory_perception");
    CHECK(tags[11] == "memory_perception");
    CHECK(tags[16] == "assistant_reply");
}

TEST_CASE("stored memories advance with the conversation") {
    Scenario scenario = park_scenario();
    PromptCatalog prompts;
    MapEmbed embed;
    embed.vectors["Rest, ice, compress, and elevate the ankle."] = {1.0f, 0.0f};

    std::vector<Json> records;
    for (const Json& r : user_exchange("Go on.")) records.push_back(r);
    records.push_back(store_reply("ankle advice", "RICE protocol"));
    auto user = ScriptedChatBackend::from_records(records);
    auto assistant = assistant_backend();

    DialogueOptions opts;
    opts.max_turns = 3;
    opts.theta = 0.999;
    Conversation conv = run_dialogue(scenario, *user, *assistant, embed, prompts, opts);

    REQUIRE(conv.turns.size() == 6);
    REQUIRE(conv.turns[2].meta.memory.has_value());
    REQUIRE(conv.turns[2].meta.memory->stored.has_value());
    CHECK(conv.turns[2].meta.memory->stored->source_turn == 1);
    REQUIRE(conv.turns[4].meta.memory.has_value());
    REQUIRE(conv.turns[4].meta.memory->stored.has_value());
    CHECK(conv.turns[4].meta.memory->stored->source_turn == 3);
}

TEST_CASE("dialogues replay byte-identically under a fixed seed") {
    Scenario scenario = park_scenario();
    PromptCatalog prompts;
    MapEmbed embed;
    embed.vectors["Rest, ice, compress, and elevate the ankle."] = {1.0f, 0.0f};

    auto render = [&] {
        std::vector<Json> records;
        for (const Json& r : user_exchange("Tell me more.")) records.push_back(r);
        records.push_back(skip_reply());
        auto user = ScriptedChatBackend::from_records(records);
        auto assistant = assistant_backend();
        DialogueOptions opts;
        opts.max_turns = 2;
        opts.theta = 0.999;
        opts.seed = 99;
        Conversation conv = run_dialogue(scenario, *user, *assistant, embed, prompts, opts);
        std::string out;
        for (const Json& j : conversation_to_jsonl(conv)) out += j.dump() + "\n";
        return out;
    };
    CHECK(render() == render());
}

TEST_CASE("assistant context is injected into the assistant system prompt") {
    Scenario scenario = park_scenario();
    PromptCatalog prompts;
    MapEmbed embed;

    auto user = ScriptedChatBackend::from_records({
        ordered("emotion", "{\"emotion\": \"curiosity\"}"),
        ordered("action", "{\"action\": \"End Conversation\"}"),
        ordered("user_reply", "One quick thing."),
    });
    RecordingBackend assistant(assistant_backend());

    DialogueOptions opts;
    opts.assistant_profile = "Runner, protective of joints.";
    opts.assistant_context = "1. Event: prior sprain Intent: avoid re-injury";
    run_dialogue(scenario, *user, assistant, embed, prompts, opts);

    bool saw_context = false;
    for (const ChatRequest& req : assistant.requests)
        if (req.tag == "assistant_reply") {
            CHECK(req.messages[0].role == "system");
            CHECK(req.messages[0].content.find("### Context From Previous Interactions") !=
                  std::string::npos);
            CHECK(req.messages[0].content.find("prior sprain") != std::string::npos);
            CHECK(req.messages[0].content.find("Runner, protective of joints.") !=
                  std::string::npos);
            saw_context = true;
        }
    CHECK(saw_context);
}

TEST_CASE("a mid-dialogue failure yields a partial error conversation") {
    Scenario scenario = park_scenario();
    PromptCatalog prompts;
    MapEmbed embed;

    auto user = ScriptedChatBackend::from_records({
        ordered("emotion", "{\"emotion\": \"curiosity\"}"),
        ordered("action", "{\"action\": \"Continue Conversation\"}"),
        ordered("user_reply", "Hello?"),
    });
    auto assistant = ScriptedChatBackend::from_records(
        {ordered("intent_prediction", "{\"intent\": \"The user wants help.\"}")});

    Conversation conv = run_dialogue(scenario, *user, *assistant, embed, prompts,
                                     DialogueOptions{});
    CHECK(conv.ended_by == "error");
    CHECK(conv.error.find("no fixture for tag=assistant_reply") != std::string::npos);
    REQUIRE(conv.turns.size() == 1);
    CHECK(conv.turns[0].speaker == "user");

    auto user2 = ScriptedChatBackend::from_records({skip_reply()});
    DialogueOptions zero;
    zero.max_turns = 0;
    CHECK(thrown_message([&] {
              run_dialogue(scenario, *user2, *assistant, embed, prompts, zero);
          }).find("max_turns must be >= 1") != std::string::npos);
}

TEST_CASE("conversations survive a serialization round trip") {
    Conversation conv;
    conv.scenario_ref = "u3-long";
    conv.seed = 17;
    conv.user_backend = "scripted";
    conv.assistant_backend = "scripted";
    conv.ended_by = "user_action";

    Turn user{"user", "My ankle again.", {}};
    user.meta.emotion = "sadness";
    user.meta.action = "end";
    MemoryPerception perception;
    perception.negative = true;
    perception.max_similarity = 0.83;
    perception.stored = MemoryEntry{"ankle", "wrap it", {}, 1};
    user.meta.memory = perception;
    conv.turns.push_back(user);

    Turn assistant{"assistant", "Let's re-wrap it.", {}};
    assistant.meta.predicted_intent = "The user wants ankle care.";
    conv.turns.push_back(assistant);

    const std::vector<Json> records = conversation_to_jsonl(conv);
    REQUIRE(records.size() == 3);
    CHECK(records[0].at("record") == "header");
    CHECK(records[0].at("turn_count") == 2);
    CHECK_FALSE(records[0].contains("error"));

    Conversation back = conversation_from_jsonl(records);
    CHECK(back.scenario_ref == conv.scenario_ref);
    CHECK(back.seed == conv.seed);
    CHECK(back.ended_by == "user_action");
    REQUIRE(back.turns.size() == 2);
    CHECK(back.turns[0].meta.emotion == "sadness");
    REQUIRE(back.turns[0].meta.memory.has_value());
    CHECK(back.turns[0].meta.memory->negative);
    CHECK(back.turns[0].meta.memory->max_similarity == 0.83);
    REQUIRE(back.turns[0].meta.memory->stored.has_value());
    CHECK(back.turns[0].meta.memory->stored->query == "ankle");
    CHECK(back.turns[0].meta.memory->stored->source_turn == 1);
    CHECK(back.turns[1].meta.predicted_intent == "The user wants ankle care.");

    // Re-serializing must reproduce the records byte for byte.
    const std::vector<Json> again = conversation_to_jsonl(back);
    REQUIRE(again.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
        CHECK(again[i].dump() == records[i].dump());

    const auto path = std::filesystem::temp_directory_path() / "lifesim_conv_test.jsonl";
    save_conversation(path.string(), conv);
    Conversation loaded = load_conversation(path.string());
    CHECK(loaded.turns.size() == 2);
    std::filesystem::remove(path);
}

TEST_CASE("conversation parsing skips provenance and rejects malformed files") {
    Conversation conv;
    conv.scenario_ref = "s";
    conv.ended_by = "turn_cap";
    conv.turns.push_back({"user", "hi", {}});
    std::vector<Json> records = conversation_to_jsonl(conv);

    std::vector<Json> with_provenance = records;
    with_provenance.insert(with_provenance.begin(), provenance_record("deadbeef", 1));
    CHECK(conversation_from_jsonl(with_provenance).turns.size() == 1);

    CHECK(thrown_message([&] { conversation_from_jsonl({records[1]}); })
              .find("conversation file missing header record") != std::string::npos);
    CHECK(thrown_message([] { conversation_from_jsonl({}); })
              .find("conversation file missing header record") != std::string::npos);

    std::vector<Json> doubled{records[0], records[0]};
    CHECK(thrown_message([&] { conversation_from_jsonl(doubled); })
              .find("conversation record 2 is not a turn") != std::string::npos);

    std::vector<Json> short_count = records;
    short_count[0]["turn_count"] = 3;
    CHECK(thrown_message([&] { conversation_from_jsonl(short_count); })
              .find("conversation turn count mismatch") != std::string::npos);
}
