#include "lifesim/behavior_engine.hpp"

#include <algorithm>
#include <cstdio>

#include "lifesim/desire_pool.hpp"
#include "lifesim/errors.hpp"

namespace lifesim {

namespace {

std::string join_list(const std::vector<std::string>& items) {
    if (items.empty()) return "none";
    std::string out;
    for (const auto& s : items) {
        out += "- ";
        out += s;
        out += '\n';
    }
    out.pop_back();
    return out;
}

std::string two_decimals(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", x);
    return buf;
}

}  // namespace

bool is_known_emotion(const std::string& label) {
    return std::any_of(kEmotions.begin(), kEmotions.end(),
                       [&](const char* e) { return label == e; });
}

std::string emotion_options_text() {
    std::string out;
    for (const char* e : kEmotions) {
        if (!out.empty()) out += ", ";
        out += e;
    }
    return out;
}

std::string render_perception(const MemoryPerception& p) {
    if (p.negative)
        return "negative: the assistant's latest reply repeats advice the user already "
               "received (similarity " +
               two_decimals(p.max_similarity) +
               " exceeds the threshold); the user notices the repetition";
    if (p.stored)
        return "neutral: the reply added new useful advice to memory (max similarity " +
               two_decimals(p.max_similarity) + ")";
    return "neutral: no repeated advice detected";
}

std::string render_dialogue(const std::vector<Turn>& turns) {
    if (turns.empty()) return "none";
    std::string out;
    for (const Turn& t : turns) {
        out += t.speaker == "user" ? "User: " : "Assistant: ";
        out += t.text;
        out += '\n';
    }
    out.pop_back();
    return out;
}

StageContext make_stage_context(const Scenario& scenario) {
    StageContext ctx;
    ctx.profile = scenario.profile.narrative.empty() ? render_narrative(scenario.profile)
                                                     : scenario.profile.narrative;
    ctx.event = scenario.event_text;
    ctx.intent = scenario.intention_text;
    ctx.dialogue_scene = render_environment(scenario.env);
    return ctx;
}

MemoryPerception perceive_memory(const std::string& assistant_reply, MemoryStore& store,
                                 EmbedBackend& embedder, double theta, ChatBackend& chat,
                                 const PromptCatalog& prompts, const StageContext& ctx,
                                 const std::string& conversation_text,
                                 std::size_t source_turn, int parse_retries, CallLog* log) {
    if (theta <= 0.0 || theta >= 1.0)
        throw ValidationError("memory threshold must lie in (0,1)");
    if (assistant_reply.empty())
        throw ValidationError("memory perception needs a non-empty reply");

    MemoryPerception p;
    std::vector<float> emb = embedder.embed(assistant_reply);
    normalize_in_place(emb);
    for (const MemoryEntry& entry : store.entries)
        p.max_similarity = std::max(p.max_similarity, cosine(emb, entry.embedding));
    p.negative = p.max_similarity > theta;

    ChatRequest req;
    req.tag = "memory_perception";
    req.messages = {
        {"user", prompts.render("memory_perception",
                                {{"profile", ctx.profile},
                                 {"event", ctx.event},
                                 {"intent", ctx.intent},
                                 {"dialogue_scene", ctx.dialogue_scene},
                                 {"conversation_context", conversation_text},
                                 {"content", assistant_reply}})}};
    Json j = chat_structured(
        chat, req, parse_retries,
        [](const Json& v) {
            if (!v.is_object() || !v.contains("need_store"))
                throw ValidationError("memory reply missing need_store");
            if (json_flag(v, "need_store")) {
                if (!v.contains("query") || !v.at("query").is_string() ||
                    v.at("query").get<std::string>().empty() ||
                    v.at("query").get<std::string>() == "-1")
                    throw ValidationError("memory reply missing query");
                if (!v.contains("response") || !v.at("response").is_string() ||
                    v.at("response").get<std::string>().empty() ||
                    v.at("response").get<std::string>() == "-1")
                    throw ValidationError("memory reply missing response");
            }
        },
        log);
    if (json_flag(j, "need_store")) {
        MemoryEntry entry;
        entry.query = j.at("query").get<std::string>();
        entry.value = j.at("response").get<std::string>();
        entry.embedding = std::move(emb);
        entry.source_turn = source_turn;
        store.entries.push_back(entry);
        p.stored = std::move(entry);
    }
    return p;
}

std::string infer_emotion(const StageContext& ctx, const std::string& conversation_text,
                          const MemoryPerception& perception, ChatBackend& chat,
                          const PromptCatalog& prompts, int parse_retries, CallLog* log) {
    ChatRequest req;
    req.tag = "emotion";
    req.messages = {
        {"user", prompts.render("emotion", {{"profile", ctx.profile},
                                            {"event", ctx.event},
                                            {"intent", ctx.intent},
                                            {"dialogue_scene", ctx.dialogue_scene},
                                            {"conversation_context", conversation_text},
                                            {"perception", render_perception(perception)},
                                            {"emotion_options", emotion_options_text()}})}};
    Json j = chat_structured(chat, req, parse_retries,
                             [](const Json& v) {
                                 if (!v.is_object() || !v.contains("emotion") ||
                                     !v.at("emotion").is_string())
                                     throw ValidationError("emotion reply needs a label");
                             },
                             log);
    std::string label = j.at("emotion").get<std::string>();
    if (!is_known_emotion(label))
        throw ValidationError("emotion outside taxonomy: '" + label + "'");
    return label;
}

std::string select_action(const StageContext& ctx, const std::string& conversation_text,
                          const std::string& emotion, const MemoryPerception& perception,
                          ChatBackend& chat, const PromptCatalog& prompts,
                          int parse_retries, CallLog* log) {
    ChatRequest req;
    req.tag = "action";
    req.messages = {
        {"user",
         prompts.render("action", {{"conversation_context", conversation_text},
                                   {"profile", ctx.profile},
                                   {"event", ctx.event},
                                   {"intent", ctx.intent},
                                   {"emotion", emotion},
                                   {"perception", render_perception(perception)},
                                   {"action_options", std::string(kActionContinue) + ", " +
                                                          kActionEnd}})}};
    Json j = chat_structured(chat, req, parse_retries,
                             [](const Json& v) {
                                 if (!v.is_object() || !v.contains("action") ||
                                     !v.at("action").is_string())
                                     throw ValidationError("action reply needs a choice");
                             },
                             log);
    std::string choice = j.at("action").get<std::string>();
    if (choice == kActionContinue) return "continue";
    if (choice == kActionEnd) return "end";
    throw ValidationError("action outside options: '" + choice + "'");
}

std::string generate_user_turn(const Scenario& scenario, const std::vector<Turn>& turns,
                               const std::string& emotion, const std::string& action,
                               const MemoryPerception& perception, ChatBackend& chat,
                               const PromptCatalog& prompts, CallLog* log) {
    StageContext ctx = make_stage_context(scenario);
    ChatRequest req;
    req.tag = "user_reply";
    req.messages.push_back(
        {"system",
         prompts.render("user_system",
                        {{"profile", ctx.profile},
                         {"dialogue_scene", ctx.dialogue_scene},
                         {"event", ctx.event},
                         {"intent", ctx.intent},
                         {"explicit_intent", join_list(scenario.explicit_intents)},
                         {"implicit_intent", join_list(scenario.implicit_intents)}})});
    // The simulated user is the speaker here, so roles flip relative to the
    // conversation under test.
    for (const Turn& t : turns)
        req.messages.push_back({t.speaker == "user" ? "assistant" : "user", t.text});

    std::string directive = "Memory perception: " + render_perception(perception) +
                            "\nEmotion to convey: " + emotion + "\nChosen action: " +
                            (action == "end" ? kActionEnd : kActionContinue);
    directive += turns.empty() ? "\nStart the conversation with your opening message."
                               : "\nWrite the user's next message.";
    if (action == "end")
        directive += "\nThis is your final message: wrap up and close the conversation.";
    req.messages.push_back({"user", directive});

    std::string text = chat_text(chat, req, log);
    if (text.empty()) throw ValidationError("user reply is empty");
    return text;
}

Conversation run_dialogue(const Scenario& scenario, ChatBackend& user_backend,
                          ChatBackend& assistant_backend, EmbedBackend& embedder,
                          const PromptCatalog& prompts, const DialogueOptions& opts,
                          CallLog* log) {
    if (opts.max_turns == 0) throw ValidationError("max_turns must be >= 1");

    Conversation conv;
    conv.scenario_ref = scenario.id;
    conv.seed = opts.seed;
    conv.user_backend = user_backend.name();
    conv.assistant_backend = assistant_backend.name();

    StageContext ctx = make_stage_context(scenario);
    MemoryStore store;

    std::string assistant_system = prompts.render(
        "assistant_system",
        {{"profile", opts.assistant_profile.empty() ? std::string("unknown")
                                                    : opts.assistant_profile},
         {"dialogue_scene", ctx.dialogue_scene}});
    if (!opts.assistant_context.empty())
        assistant_system += "\n### Context From Previous Interactions\n" +
                            opts.assistant_context;

    try {
        for (std::size_t exchange = 0; exchange < opts.max_turns; ++exchange) {
            std::string convo_text = render_dialogue(conv.turns);
            MemoryPerception perception;
            if (!conv.turns.empty())
                perception = perceive_memory(conv.turns.back().text, store, embedder,
                                             opts.theta, user_backend, prompts, ctx,
                                             convo_text, conv.turns.size() - 1,
                                             opts.parse_retries, log);
            std::string emotion = infer_emotion(ctx, convo_text, perception, user_backend,
                                                prompts, opts.parse_retries, log);
            std::string action =
                select_action(ctx, convo_text, emotion, perception, user_backend, prompts,
                              opts.parse_retries, log);
            std::string text = generate_user_turn(scenario, conv.turns, emotion, action,
                                                  perception, user_backend, prompts, log);
            Turn user_turn{"user", std::move(text), {}};
            user_turn.meta.emotion = emotion;
            user_turn.meta.action = action;
            user_turn.meta.memory = perception;
            conv.turns.push_back(std::move(user_turn));

            ChatRequest pred;
            pred.tag = "intent_prediction";
            pred.messages = {
                {"user", prompts.render("intent_prediction",
                                        {{"conversation", render_dialogue(conv.turns)}})}};
            Json pj = chat_structured(assistant_backend, pred, opts.parse_retries,
                                      [](const Json& v) {
                                          if (!v.is_object() || !v.contains("intent") ||
                                              !v.at("intent").is_string())
                                              throw ValidationError(
                                                  "intent prediction reply needs intent");
                                      },
                                      log);

            ChatRequest rep;
            rep.tag = "assistant_reply";
            rep.messages.push_back({"system", assistant_system});
            for (const Turn& t : conv.turns) rep.messages.push_back({t.speaker, t.text});
            std::string reply = chat_text(assistant_backend, rep, log);
            if (reply.empty()) throw ValidationError("assistant reply is empty");

            Turn assistant_turn{"assistant", std::move(reply), {}};
            assistant_turn.meta.predicted_intent = pj.at("intent").get<std::string>();
            conv.turns.push_back(std::move(assistant_turn));

            if (action == "end") {
                conv.ended_by = "user_action";
                return conv;
            }
        }
        conv.ended_by = "turn_cap";
    } catch (const Error& e) {
        conv.ended_by = "error";
        conv.error = e.what();
    }
    return conv;
}

namespace {

Json perception_to_json(const MemoryPerception& p) {
    Json j{{"negative", p.negative}, {"max_similarity", p.max_similarity}};
    if (p.stored)
        j["stored"] = Json{{"query", p.stored->query},
                           {"value", p.stored->value},
                           {"source_turn", p.stored->source_turn}};
    return j;
}

MemoryPerception perception_from_json(const Json& j) {
    MemoryPerception p;
    p.negative = j.at("negative").get<bool>();
    p.max_similarity = j.at("max_similarity").get<double>();
    if (j.contains("stored")) {
        MemoryEntry entry;
        entry.query = j.at("stored").at("query").get<std::string>();
        entry.value = j.at("stored").at("value").get<std::string>();
        entry.source_turn = j.at("stored").at("source_turn").get<std::size_t>();
        p.stored = std::move(entry);
    }
    return p;
}

}  // namespace

std::vector<Json> conversation_to_jsonl(const Conversation& conv) {
    std::vector<Json> out;
    Json head{{"record", "header"},
              {"scenario_ref", conv.scenario_ref},
              {"seed", conv.seed},
              {"user_backend", conv.user_backend},
              {"assistant_backend", conv.assistant_backend},
              {"ended_by", conv.ended_by},
              {"turn_count", conv.turns.size()}};
    if (!conv.error.empty()) head["error"] = conv.error;
    out.push_back(std::move(head));
    for (const Turn& t : conv.turns) {
        Json meta = Json::object();
        if (t.meta.emotion) meta["emotion"] = *t.meta.emotion;
        if (t.meta.action) meta["action"] = *t.meta.action;
        if (t.meta.predicted_intent) meta["predicted_intent"] = *t.meta.predicted_intent;
        if (t.meta.memory) meta["memory"] = perception_to_json(*t.meta.memory);
        out.push_back(Json{{"record", "turn"},
                           {"speaker", t.speaker},
                           {"text", t.text},
                           {"meta", std::move(meta)}});
    }
    return out;
}

Conversation conversation_from_jsonl(std::vector<Json> records) {
    while (!records.empty() && is_provenance_record(records.front()))
        records.erase(records.begin());
    if (records.empty() || records.front().value("record", "") != "header")
        throw ValidationError("conversation file missing header record");
    const Json& head = records.front();
    Conversation conv;
    conv.scenario_ref = head.at("scenario_ref").get<std::string>();
    conv.seed = head.at("seed").get<std::uint64_t>();
    conv.user_backend = head.at("user_backend").get<std::string>();
    conv.assistant_backend = head.at("assistant_backend").get<std::string>();
    conv.ended_by = head.at("ended_by").get<std::string>();
    conv.error = head.value("error", "");
    for (std::size_t i = 1; i < records.size(); ++i) {
        const Json& r = records[i];
        if (r.value("record", "") != "turn")
            throw ValidationError("conversation record " + std::to_string(i + 1) +
                                  " is not a turn");
        Turn t;
        t.speaker = r.at("speaker").get<std::string>();
        t.text = r.at("text").get<std::string>();
        const Json& meta = r.at("meta");
        if (meta.contains("emotion")) t.meta.emotion = meta.at("emotion").get<std::string>();
        if (meta.contains("action")) t.meta.action = meta.at("action").get<std::string>();
        if (meta.contains("predicted_intent"))
            t.meta.predicted_intent = meta.at("predicted_intent").get<std::string>();
        if (meta.contains("memory")) t.meta.memory = perception_from_json(meta.at("memory"));
        conv.turns.push_back(std::move(t));
    }
    if (conv.turns.size() != head.at("turn_count").get<std::size_t>())
        throw ValidationError("conversation turn count mismatch");
    return conv;
}

void save_conversation(const std::string& path, const Conversation& conv) {
    write_jsonl(path, conversation_to_jsonl(conv));
}

Conversation load_conversation(const std::string& path) {
    return conversation_from_jsonl(read_jsonl(path));
}

}  // namespace lifesim
