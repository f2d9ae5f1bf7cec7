#include "lifesim/eval_harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <set>
#include <thread>

#include "lifesim/errors.hpp"
#include "lifesim/hash.hpp"

namespace lifesim {

namespace {

std::string join_lines(const std::vector<std::string>& items) {
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

std::string render_preferences(const std::map<std::string, std::string>& prefs) {
    if (prefs.empty()) return "none";
    std::string out;
    for (const auto& [dim, level] : prefs) {
        out += "- ";
        out += dim;
        out += ": ";
        out += level;
        out += '\n';
    }
    out.pop_back();
    return out;
}

const std::string kSubIntentExamples =
    "[User intent] The user wants to plan an affordable weekend hiking trip despite a "
    "recent knee strain.\n[Output]\n```json\n[\"Find a nearby trail that is easy on "
    "the knees\", \"Keep the total cost of the trip low\", \"Feel confident the knee "
    "will hold up\", \"Get advice on protective gear or taping\"]\n```";

const std::string kClassifyExamples =
    "[User sub-intents]\n- Find a nearby trail that is easy on the knees\n- Keep the "
    "total cost of the trip low\n- Feel confident the knee will hold up\n- Get advice "
    "on protective gear or taping\n[Output]\nThe first two items are direct, stated "
    "requests; the last two express an underlying worry about reinjury that motivates "
    "the practical questions.\n```json\n[{\"description\": \"Find a nearby trail that "
    "is easy on the knees\", \"type\": \"explicit\"}, {\"description\": \"Keep the "
    "total cost of the trip low\", \"type\": \"explicit\"}, {\"description\": \"Feel "
    "confident the knee will hold up\", \"type\": \"implicit\"}, {\"description\": "
    "\"Get advice on protective gear or taping\", \"type\": \"implicit\"}]\n```";

std::string scenario_profile_text(const Scenario& sc) {
    return sc.profile.narrative.empty() ? render_narrative(sc.profile)
                                        : sc.profile.narrative;
}

// "Checklist item N" reply keys, one binary per checklist entry.
ChecklistScores parse_checklist_scores(const IntentChecklist& checklist, const Json& reply) {
    if (!reply.is_object()) throw ValidationError("checklist judge reply must be an object");
    ChecklistScores scores;
    std::size_t explicit_n = 0, implicit_n = 0;
    double explicit_sum = 0.0, implicit_sum = 0.0, total = 0.0;
    for (std::size_t i = 0; i < checklist.items.size(); ++i) {
        std::string key = "Checklist item " + std::to_string(i + 1);
        if (!reply.contains(key))
            throw ValidationError("judge reply missing '" + key + "'");
        const Json& v = reply.at(key);
        int bit;
        if (v.is_boolean())
            bit = v.get<bool>() ? 1 : 0;
        else if (v.is_number_integer() &&
                 (v.get<int>() == 0 || v.get<int>() == 1))
            bit = v.get<int>();
        else
            throw ValidationError("checklist score must be 0 or 1 for '" + key + "'");
        scores.per_item.push_back(bit);
        total += bit;
        if (checklist.items[i].kind == "explicit") {
            explicit_n += 1;
            explicit_sum += bit;
        } else {
            implicit_n += 1;
            implicit_sum += bit;
        }
    }
    scores.overall = total / double(checklist.items.size());
    scores.explicit_part = explicit_n ? explicit_sum / double(explicit_n) : 0.0;
    scores.implicit_part = implicit_n ? implicit_sum / double(implicit_n) : 0.0;
    return scores;
}

double parse_rating(const Json& reply, const char* field) {
    if (!reply.is_object() || !reply.contains(field))
        throw ValidationError(std::string("judge reply missing '") + field + "'");
    const Json& v = reply.at(field);
    if (!v.is_number())
        throw ValidationError(std::string("judge '") + field + "' must be a number");
    return v.get<double>();
}

std::uint64_t scenario_seed(std::uint64_t base, const std::string& id) {
    return fnv1a64_mix(fnv1a64(id), base);
}

}  // namespace

void validate_checklist(const IntentChecklist& checklist) {
    const std::size_t n = checklist.items.size();
    if (n < 2) throw ValidationError("checklist: minimum 2 items, got " + std::to_string(n));
    if (n > 6) throw ValidationError("checklist: maximum 6 items, got " + std::to_string(n));
    std::size_t explicit_n = 0, implicit_n = 0;
    for (const ChecklistItem& item : checklist.items) {
        if (item.kind == "explicit")
            explicit_n += 1;
        else if (item.kind == "implicit")
            implicit_n += 1;
        else
            throw ValidationError("checklist kind must be explicit or implicit: '" +
                                  item.kind + "'");
        if (item.text.empty()) throw ValidationError("checklist item text is empty");
    }
    std::size_t need = n >= 4 ? 2 : 1;
    if (explicit_n < need || implicit_n < need)
        throw ValidationError(
            n >= 4 ? "checklist needs at least two items of each intent type"
                   : "checklist needs at least one item of each intent type");
}

std::string render_checklist(const IntentChecklist& checklist) {
    std::string out;
    for (std::size_t i = 0; i < checklist.items.size(); ++i) {
        out += "Checklist item " + std::to_string(i + 1) + " (" +
               checklist.items[i].kind + "): " + checklist.items[i].text;
        out += '\n';
    }
    if (!out.empty()) out.pop_back();
    return out;
}

IntentChecklist checklist_of(const Scenario& scenario) {
    IntentChecklist checklist;
    checklist.scenario_ref = scenario.id;
    for (const std::string& text : scenario.explicit_intents)
        checklist.items.push_back({text, "explicit"});
    for (const std::string& text : scenario.implicit_intents)
        checklist.items.push_back({text, "implicit"});
    validate_checklist(checklist);
    return checklist;
}

std::vector<std::string> decompose_intent(const Scenario& scenario, ChatBackend& backend,
                                          const PromptCatalog& prompts,
                                          int parse_retries, CallLog* log) {
    ChatRequest req;
    req.tag = "sub_intents";
    req.messages = {
        {"user", prompts.render("sub_intents",
                                {{"examples", kSubIntentExamples},
                                 {"user_profile", scenario_profile_text(scenario)},
                                 {"dialogue_scene", render_environment(scenario.env)},
                                 {"event", scenario.event_text},
                                 {"user_intent", scenario.intention_text}})}};
    Json j = chat_structured(backend, req, parse_retries,
                             [](const Json& v) {
                                 if (!v.is_array())
                                     throw ValidationError("sub-intents must be an array");
                                 for (const Json& item : v)
                                     if (!item.is_string() ||
                                         item.get<std::string>().empty())
                                         throw ValidationError(
                                             "sub-intents must be non-empty strings");
                             },
                             log);
    if (j.size() > 6)
        throw ValidationError("sub-intents: maximum 6, got " + std::to_string(j.size()));
    if (j.size() < 2)
        throw ValidationError("sub-intents: minimum 2, got " + std::to_string(j.size()));
    std::vector<std::string> out;
    for (const Json& item : j) out.push_back(item.get<std::string>());
    return out;
}

IntentChecklist classify_intents(const std::vector<std::string>& sub_intents,
                                 const Scenario& scenario, ChatBackend& backend,
                                 const PromptCatalog& prompts, int parse_retries,
                                 CallLog* log) {
    ChatRequest req;
    req.tag = "intent_classify";
    req.messages = {
        {"user", prompts.render("intent_classify",
                                {{"examples", kClassifyExamples},
                                 {"user_profile", scenario_profile_text(scenario)},
                                 {"dialogue_scene", render_environment(scenario.env)},
                                 {"event", scenario.event_text},
                                 {"user_sub_intent", join_lines(sub_intents)}})}};
    Json j = chat_structured(
        backend, req, parse_retries,
        [](const Json& v) {
            if (!v.is_array()) throw ValidationError("classification must be an array");
            for (const Json& item : v) {
                if (!item.is_object() || !item.contains("description") ||
                    !item.contains("type"))
                    throw ValidationError(
                        "classification items need description and type");
                std::string type = item.at("type").get<std::string>();
                if (type != "explicit" && type != "implicit")
                    throw ValidationError("intent type must be explicit or implicit: '" +
                                          type + "'");
            }
        },
        log);
    if (j.size() != sub_intents.size())
        throw ValidationError("classification must cover every sub-intent");

    IntentChecklist checklist;
    checklist.scenario_ref = scenario.id;
    for (const Json& item : j)
        checklist.items.push_back({item.at("description").get<std::string>(),
                                   item.at("type").get<std::string>()});
    validate_checklist(checklist);
    return checklist;
}

IntentChecklist build_checklist(Scenario& scenario, ChatBackend& backend,
                                const PromptCatalog& prompts, int parse_retries,
                                CallLog* log) {
    std::vector<std::string> subs =
        decompose_intent(scenario, backend, prompts, parse_retries, log);
    IntentChecklist checklist =
        classify_intents(subs, scenario, backend, prompts, parse_retries, log);
    scenario.explicit_intents.clear();
    scenario.implicit_intents.clear();
    for (const ChecklistItem& item : checklist.items)
        (item.kind == "explicit" ? scenario.explicit_intents : scenario.implicit_intents)
            .push_back(item.text);
    return checklist;
}

ChecklistScores score_intent_recognition(const IntentChecklist& checklist,
                                         const std::vector<std::string>& predicted_intents,
                                         const std::string& conversation_text,
                                         ChatBackend& judge, const PromptCatalog& prompts,
                                         int parse_retries, CallLog* log) {
    validate_checklist(checklist);
    ChatRequest req;
    req.tag = "intent_recognition";
    req.temperature = 0.0;
    req.messages = {
        {"user", prompts.render("intent_recognition",
                                {{"checklist", render_checklist(checklist)},
                                 {"conversation", conversation_text},
                                 {"predicted_intent", join_lines(predicted_intents)}})}};
    Json j = chat_structured(judge, req, parse_retries, nullptr, log);
    return parse_checklist_scores(checklist, j);
}

ChecklistScores score_intent_completion(const IntentChecklist& checklist,
                                        const Scenario& scenario,
                                        const std::string& conversation_text,
                                        ChatBackend& judge, const PromptCatalog& prompts,
                                        int parse_retries, CallLog* log) {
    validate_checklist(checklist);
    ChatRequest req;
    req.tag = "intent_completion";
    req.temperature = 0.0;
    req.messages = {
        {"user", prompts.render("intent_completion",
                                {{"user_profile", scenario_profile_text(scenario)},
                                 {"dialogue_scene", render_environment(scenario.env)},
                                 {"checklist", render_checklist(checklist)},
                                 {"conversation", conversation_text}})}};
    Json j = chat_structured(judge, req, parse_retries, nullptr, log);
    return parse_checklist_scores(checklist, j);
}

double score_scalar(const std::string& metric, const Scenario& scenario,
                    const std::string& conversation_text, ChatBackend& judge,
                    const PromptCatalog& prompts, int parse_retries, CallLog* log) {
    if (metric != "naturalness" && metric != "coherence" &&
        metric != "environment_alignment")
        throw ValidationError("unknown scalar metric '" + metric + "'");
    ChatRequest req;
    req.tag = metric;
    req.temperature = 0.0;
    req.messages = {
        {"user", prompts.render(metric,
                                {{"user_profile", scenario_profile_text(scenario)},
                                 {"dialogue_scene", render_environment(scenario.env)},
                                 {"user_intent", scenario.intention_text},
                                 {"conversation", conversation_text}})}};
    Json j = chat_structured(judge, req, parse_retries, nullptr, log);
    return scale_rating(parse_rating(j, "rating"));
}

double score_event_sequence(const std::string& metric, const std::string& profile_text,
                            const std::string& events_text, ChatBackend& judge,
                            const PromptCatalog& prompts, int parse_retries,
                            CallLog* log) {
    std::map<std::string, std::string> bindings{{"event_sequences", events_text}};
    if (metric == "event_persona_alignment")
        bindings["user_profile"] = profile_text;
    else if (metric != "event_coherence" && metric != "event_naturalness")
        throw ValidationError("unknown event-sequence metric '" + metric + "'");
    ChatRequest req;
    req.tag = metric;
    req.temperature = 0.0;
    req.messages = {{"user", prompts.render(metric, bindings)}};
    Json j = chat_structured(judge, req, parse_retries, nullptr, log);
    return scale_rating(parse_rating(j, "score"));
}

double preference_recovery(const std::map<std::string, std::string>& predicted,
                           const std::map<std::string, std::string>& gold) {
    if (gold.empty()) throw ValidationError("preference recovery needs gold dimensions");
    double hits = 0.0;
    for (const auto& [dim, level] : gold) {
        auto it = predicted.find(dim);
        if (it != predicted.end() && it->second == level) hits += 1.0;
    }
    return hits / double(gold.size());
}

std::map<std::string, std::string> predict_preferences(
    const std::string& conversation_text, const std::vector<std::string>& dimensions,
    ChatBackend& assistant, const PromptCatalog& prompts, int parse_retries,
    CallLog* log) {
    if (dimensions.empty())
        throw ValidationError("preference prediction needs dimensions");
    ChatRequest req;
    req.tag = "preference_prediction";
    req.messages = {
        {"user", prompts.render("preference_prediction",
                                {{"dimensions", join_lines(dimensions)},
                                 {"conversation", conversation_text}})}};
    Json j = chat_structured(assistant, req, parse_retries,
                             [](const Json& v) {
                                 if (!v.is_object())
                                     throw ValidationError(
                                         "preference prediction must be an object");
                             },
                             log);
    std::map<std::string, std::string> out;
    for (const std::string& dim : dimensions) {
        if (!j.contains(dim)) continue;  // missing counts as a miss downstream
        std::string level = j.at(dim).get<std::string>();
        if (level != "low" && level != "high")
            throw ValidationError("preference level must be low or high: '" + level +
                                  "'");
        out[dim] = level;
    }
    return out;
}

double persona_alignment(const std::string& conversation_text,
                         const std::map<std::string, std::string>& preferences,
                         ChatBackend& judge, const PromptCatalog& prompts,
                         int parse_retries, CallLog* log) {
    if (preferences.empty())
        throw ValidationError("persona alignment needs preference dimensions");
    ChatRequest req;
    req.tag = "persona_alignment";
    req.temperature = 0.0;
    req.messages = {
        {"user", prompts.render("persona_alignment",
                                {{"example_1", "{\"need_for_structure\": 1, "
                                               "\"communication_brevity\": 0}"},
                                 {"user_preferences", render_preferences(preferences)},
                                 {"conversation", conversation_text}})}};
    Json j = chat_structured(judge, req, parse_retries, nullptr, log);
    double sum = 0.0;
    for (const auto& [dim, level] : preferences) {
        if (!j.contains(dim))
            throw ValidationError("persona reply missing dimension '" + dim + "'");
        const Json& v = j.at(dim);
        int bit;
        if (v.is_boolean())
            bit = v.get<bool>() ? 1 : 0;
        else if (v.is_number_integer() && (v.get<int>() == 0 || v.get<int>() == 1))
            bit = v.get<int>();
        else
            throw ValidationError("persona score must be 0 or 1 for '" + dim + "'");
        sum += bit;
    }
    return 100.0 * sum / double(preferences.size());
}

double judge_ensemble(const std::vector<double>& per_judge) {
    if (per_judge.empty()) throw ValidationError("judge ensemble is empty");
    return mean(per_judge);
}

std::string profile_memory_update(const std::string& history_text,
                                  const std::string& prior_summary, ChatBackend& backend,
                                  const PromptCatalog& prompts, int parse_retries,
                                  CallLog* log) {
    ChatRequest req;
    req.tag = "profile_memory";
    req.messages = {
        {"user",
         prompts.render("profile_memory",
                        {{"prior_summary",
                          prior_summary.empty() ? std::string("none") : prior_summary},
                         {"conversation",
                          history_text.empty() ? std::string("none") : history_text}})}};
    Json j = chat_structured(backend, req, parse_retries,
                             [](const Json& v) {
                                 if (!v.is_object() || !v.contains("summary") ||
                                     !v.at("summary").is_string())
                                     throw ValidationError(
                                         "memory summary reply needs summary");
                             },
                             log);
    return j.at("summary").get<std::string>();
}

std::optional<double> proactive_inquiry_ratio(const Conversation& conv) {
    std::size_t assistant_turns = 0, questions = 0;
    for (const Turn& t : conv.turns) {
        if (t.speaker != "assistant") continue;
        assistant_turns += 1;
        auto it = std::find_if(t.text.rbegin(), t.text.rend(), [](unsigned char c) {
            return !std::isspace(c);
        });
        if (it != t.text.rend() && *it == '?') questions += 1;
    }
    if (assistant_turns == 0) return std::nullopt;
    return double(questions) / double(assistant_turns);
}

RigidReasoningResult rigid_reasoning_ratio(const std::vector<Conversation>& conversations,
                                           ChatBackend& judge, const PromptCatalog& prompts,
                                           int parse_retries, CallLog* log) {
    RigidReasoningResult res;
    for (const Conversation& conv : conversations) {
        for (std::size_t i = 0; i < conv.turns.size(); ++i) {
            if (conv.turns[i].speaker != "assistant") continue;
            std::vector<Turn> before(conv.turns.begin(), conv.turns.begin() + long(i));
            ChatRequest req;
            req.tag = "rigid_reasoning";
            req.temperature = 0.0;
            req.messages = {
                {"user", prompts.render("rigid_reasoning",
                                        {{"conversation", render_dialogue(before)},
                                         {"response", conv.turns[i].text}})}};
            try {
                Json j = chat_structured(judge, req, parse_retries,
                                         [](const Json& v) {
                                             if (!v.is_object() || !v.contains("rigid"))
                                                 throw ValidationError(
                                                     "rigid audit reply needs rigid");
                                         },
                                         log);
                res.judged += 1;
                if (json_flag(j, "rigid")) res.rigid += 1;
            } catch (const ParseError&) {
                res.excluded += 1;
            }
        }
    }
    if (res.judged > 0) res.ratio = double(res.rigid) / double(res.judged);
    return res;
}

ReasonableResult reasonable_intention_ratio(const std::vector<Scenario>& scenarios,
                                            ChatBackend& judge,
                                            const PromptCatalog& prompts,
                                            int parse_retries, CallLog* log) {
    ReasonableResult res;
    for (const Scenario& sc : scenarios) {
        ChatRequest req;
        req.tag = "intention_quality";
        req.temperature = 0.0;
        req.messages = {
            {"user", prompts.render("intention_quality", {{"event", sc.event_text},
                                                          {"intent", sc.intention_text}})}};
        try {
            Json j = chat_structured(judge, req, parse_retries,
                                     [](const Json& v) {
                                         if (!v.is_object() || !v.contains("reasonable"))
                                             throw ValidationError(
                                                 "intention audit reply needs reasonable");
                                     },
                                     log);
            res.judged += 1;
            if (json_flag(j, "reasonable")) res.reasonable += 1;
        } catch (const ParseError&) {
            res.excluded += 1;
        }
    }
    if (res.judged > 0) res.ratio = double(res.reasonable) / double(res.judged);
    return res;
}

// ---------------------------------------------------------------------------
// Benchmark
// ---------------------------------------------------------------------------

Scenario make_scenario(std::string id, const UserProfile& profile, const LifeEvent& event,
                       const std::string& theme) {
    Scenario sc;
    sc.id = std::move(id);
    sc.profile = profile;
    sc.env = event.env;
    sc.theme = theme;
    sc.event_text = event.event_text;
    sc.intention_text = event.intention_text;
    sc.gold_preferences = profile.preferences;
    return sc;
}

Json scenario_to_json(const Scenario& s) {
    Json j;
    j["id"] = s.id;
    j["profile"] = profile_to_json(s.profile);
    j["env"] = environment_to_json(s.env);
    if (!s.theme.empty()) j["theme"] = s.theme;
    j["event"] = s.event_text;
    j["intention"] = s.intention_text;
    Json checklist = Json::array();
    for (const std::string& text : s.explicit_intents)
        checklist.push_back(Json{{"text", text}, {"kind", "explicit"}});
    for (const std::string& text : s.implicit_intents)
        checklist.push_back(Json{{"text", text}, {"kind", "implicit"}});
    j["checklist"] = std::move(checklist);
    j["gold_preferences"] = s.gold_preferences;
    if (!s.history_ref.empty()) j["history_ref"] = s.history_ref;
    return j;
}

Scenario scenario_from_json(const Json& j) {
    Scenario s;
    s.id = j.at("id").get<std::string>();
    s.profile = profile_from_json(j.at("profile"));
    s.env = environment_from_json(j.at("env"));
    s.theme = j.value("theme", "");
    s.event_text = j.at("event").get<std::string>();
    s.intention_text = j.at("intention").get<std::string>();
    for (const Json& item : j.at("checklist")) {
        std::string kind = item.at("kind").get<std::string>();
        std::string text = item.at("text").get<std::string>();
        if (kind == "explicit")
            s.explicit_intents.push_back(text);
        else if (kind == "implicit")
            s.implicit_intents.push_back(text);
        else
            throw ValidationError("checklist kind must be explicit or implicit: '" +
                                  kind + "'");
    }
    if (j.contains("gold_preferences"))
        s.gold_preferences =
            j.at("gold_preferences").get<std::map<std::string, std::string>>();
    s.history_ref = j.value("history_ref", "");
    return s;
}

void save_benchmark(const std::string& path, const Benchmark& bench) {
    std::vector<Json> records;
    records.reserve(bench.scenarios.size());
    for (const Scenario& sc : bench.scenarios) records.push_back(scenario_to_json(sc));
    write_jsonl(path, records);
}

Benchmark load_benchmark(const std::string& path) {
    Benchmark bench;
    std::size_t n = 0;
    for (const Json& r : read_jsonl(path)) {
        if (is_provenance_record(r)) continue;
        ++n;
        try {
            bench.scenarios.push_back(scenario_from_json(r));
        } catch (const std::exception& e) {
            throw ValidationError("scenario record " + std::to_string(n) + ": " + e.what());
        }
    }
    return bench;
}

std::vector<HistoryRecord> load_history(const std::string& path) {
    std::vector<HistoryRecord> out;
    std::size_t n = 0;
    for (const Json& r : read_jsonl(path)) {
        if (is_provenance_record(r)) continue;
        ++n;
        if (!r.contains("event") || !r.contains("intention"))
            throw ValidationError("history record " + std::to_string(n) +
                                  " missing event or intention");
        out.push_back({r.at("event").get<std::string>(),
                       r.at("intention").get<std::string>()});
    }
    return out;
}

std::string render_history_records(const std::vector<HistoryRecord>& records) {
    if (records.empty()) return "none";
    std::string out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        out += std::to_string(i + 1) + ". Event: " + records[i].event_text +
               " Intent: " + records[i].intention_text;
        out += '\n';
    }
    out.pop_back();
    return out;
}

std::vector<std::string> predicted_intents_of(const Conversation& conv) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const Turn& t : conv.turns) {
        if (t.speaker != "assistant" || !t.meta.predicted_intent) continue;
        if (seen.insert(*t.meta.predicted_intent).second)
            out.push_back(*t.meta.predicted_intent);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Protocol runners
// ---------------------------------------------------------------------------

DialogueArtifacts simulate_scenario(const Scenario& scenario,
                                    std::shared_ptr<ChatBackend> user_model,
                                    std::shared_ptr<ChatBackend> assistant,
                                    EmbedBackend& embedder, const PromptCatalog& prompts,
                                    const EvalOptions& opts, bool long_horizon,
                                    CallLog* log) {
    if (!user_model || !assistant) throw ValidationError("eval needs both backends");
    DialogueArtifacts art;
    auto user = per_unit_backend(user_model);
    auto asst = per_unit_backend(assistant);
    try {
        DialogueOptions dopts;
        dopts.max_turns = opts.max_turns;
        dopts.theta = opts.theta;
        dopts.parse_retries = opts.parse_retries;
        dopts.seed = scenario_seed(opts.seed, scenario.id);

        if (long_horizon) {
            std::vector<HistoryRecord> history;
            if (!scenario.history_ref.empty()) history = load_history(scenario.history_ref);
            art.history_length = history.size();
            if (opts.memory) {
                std::string summary;
                for (const HistoryRecord& rec : history) {
                    summary = profile_memory_update(render_history_records({rec}), summary,
                                                    *asst, prompts, opts.parse_retries,
                                                    log);
                    art.memory_summaries.push_back(summary);
                }
                if (!summary.empty())
                    dopts.assistant_context = "Known user preference summary:\n" + summary;
            } else if (!history.empty()) {
                dopts.assistant_context = "Earlier events in this user's life:\n" +
                                          render_history_records(history);
            }
        }
        art.conv = run_dialogue(scenario, *user, *asst, embedder, prompts, dopts, log);
    } catch (const Error& e) {
        art.conv.scenario_ref = scenario.id;
        art.conv.ended_by = "error";
        art.conv.error = e.what();
    }
    return art;
}

ScenarioEval score_scenario(const Scenario& scenario, const DialogueArtifacts& artifacts,
                            std::shared_ptr<ChatBackend> assistant,
                            const std::vector<std::shared_ptr<ChatBackend>>& judges,
                            const PromptCatalog& prompts, const EvalOptions& opts,
                            CallLog* log) {
    if (judges.empty()) throw ValidationError("judge ensemble is empty");
    ScenarioEval ev;
    ev.scenario_ref = scenario.id;
    ev.theme = scenario.theme;
    ev.history_length = artifacts.history_length;
    ev.memory_summaries = artifacts.memory_summaries;
    ev.conversation = artifacts.conv;

    const Conversation& conv = artifacts.conv;
    if (conv.ended_by == "error") {
        ev.excluded = true;
        ev.exclusion_reason = conv.error;
        return ev;
    }

    auto asst = per_unit_backend(assistant);
    std::vector<std::shared_ptr<ChatBackend>> local_judges;
    local_judges.reserve(judges.size());
    for (const auto& judge : judges) local_judges.push_back(per_unit_backend(judge));

    try {
        IntentChecklist checklist = checklist_of(scenario);
        std::string convo = render_dialogue(conv.turns);
        std::vector<std::string> predicted = predicted_intents_of(conv);

        std::map<std::string, std::vector<double>> metric_values;
        for (std::size_t jx = 0; jx < local_judges.size(); ++jx) {
            ChatBackend& judge = *local_judges[jx];
            std::string judge_key = "judge" + std::to_string(jx + 1);
            auto put = [&](const std::string& metric, double value) {
                ev.per_judge[metric][judge_key] = value;
                metric_values[metric].push_back(value);
            };
            ChecklistScores rec = score_intent_recognition(checklist, predicted, convo,
                                                           judge, prompts,
                                                           opts.parse_retries, log);
            put("recognition", 100.0 * rec.overall);
            put("recognition_explicit", 100.0 * rec.explicit_part);
            put("recognition_implicit", 100.0 * rec.implicit_part);
            ChecklistScores com = score_intent_completion(checklist, scenario, convo,
                                                          judge, prompts,
                                                          opts.parse_retries, log);
            put("completion", 100.0 * com.overall);
            put("completion_explicit", 100.0 * com.explicit_part);
            put("completion_implicit", 100.0 * com.implicit_part);
            for (const char* metric : {"naturalness", "coherence", "environment_alignment"})
                put(metric, score_scalar(metric, scenario, convo, judge, prompts,
                                         opts.parse_retries, log));
            if (!scenario.gold_preferences.empty())
                put("persona_alignment",
                    persona_alignment(convo, scenario.gold_preferences, judge, prompts,
                                      opts.parse_retries, log));
        }
        for (const auto& [metric, values] : metric_values)
            ev.metrics[metric] = judge_ensemble(values);

        if (!scenario.gold_preferences.empty()) {
            std::vector<std::string> dims;
            for (const auto& [dim, level] : scenario.gold_preferences) dims.push_back(dim);
            std::map<std::string, std::string> pred_prefs;
            try {
                pred_prefs = predict_preferences(convo, dims, *asst, prompts,
                                                 opts.parse_retries, log);
            } catch (const ParseError&) {
                // a model that cannot produce the map recovers nothing
            }
            ev.metrics["preference_recovery"] =
                100.0 * preference_recovery(pred_prefs, scenario.gold_preferences);
        }
        if (auto ratio = proactive_inquiry_ratio(conv))
            ev.metrics["proactive_inquiry"] = 100.0 * *ratio;
    } catch (const Error& e) {
        ev.excluded = true;
        ev.exclusion_reason = e.what();
    }
    return ev;
}

EvalReport assemble_report(std::vector<ScenarioEval> scenarios,
                           const std::vector<std::shared_ptr<ChatBackend>>& judges,
                           const PromptCatalog& prompts, const EvalOptions& opts,
                           bool long_horizon, CallLog* log) {
    if (judges.empty()) throw ValidationError("judge ensemble is empty");
    EvalReport report;
    report.setting = long_horizon ? "long" : "single";
    report.memory_enabled = long_horizon && opts.memory;
    for (const auto& judge : judges) report.judges.push_back(judge->name());
    report.scenarios = std::move(scenarios);

    std::map<std::string, std::vector<double>> agg;
    std::map<std::size_t, std::map<std::string, std::vector<double>>> buckets;
    std::vector<Conversation> included_convs;
    for (const ScenarioEval& ev : report.scenarios) {
        if (ev.excluded) {
            report.excluded += 1;
            continue;
        }
        for (const auto& [metric, value] : ev.metrics) agg[metric].push_back(value);
        included_convs.push_back(ev.conversation);
        if (long_horizon)
            for (const char* metric : {"completion", "completion_explicit",
                                       "completion_implicit", "preference_recovery"}) {
                auto it = ev.metrics.find(metric);
                if (it != ev.metrics.end())
                    buckets[ev.history_length][metric].push_back(it->second);
            }
    }
    for (const auto& [metric, values] : agg) report.aggregates[metric] = mean(values);
    for (const auto& [length, metrics] : buckets)
        for (const auto& [metric, values] : metrics)
            report.by_history_length[length][metric] = mean(values);

    if (!included_convs.empty()) {
        auto judge0 = per_unit_backend(judges.front());
        RigidReasoningResult rigid = rigid_reasoning_ratio(included_convs, *judge0,
                                                           prompts, opts.parse_retries,
                                                           log);
        if (rigid.ratio) report.aggregates["rigid_reasoning"] = 100.0 * *rigid.ratio;
        report.rigid_excluded = rigid.excluded;
    }
    return report;
}

namespace {

EvalReport run_eval(const Benchmark& bench, std::shared_ptr<ChatBackend> user_model,
                    std::shared_ptr<ChatBackend> assistant,
                    const std::vector<std::shared_ptr<ChatBackend>>& judges,
                    EmbedBackend& embedder, const PromptCatalog& prompts,
                    const EvalOptions& opts, bool long_horizon, CallLog* log) {
    if (bench.scenarios.empty()) throw ValidationError("benchmark is empty");
    if (judges.empty()) throw ValidationError("judge ensemble is empty");

    std::vector<ScenarioEval> results(bench.scenarios.size());
    std::size_t n_threads = opts.threads == 0
                                ? std::max<std::size_t>(1, std::thread::hardware_concurrency())
                                : opts.threads;
    n_threads = std::min(n_threads, bench.scenarios.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= bench.scenarios.size()) return;
            DialogueArtifacts art =
                simulate_scenario(bench.scenarios[i], user_model, assistant, embedder,
                                  prompts, opts, long_horizon, log);
            results[i] = score_scenario(bench.scenarios[i], art, assistant, judges,
                                        prompts, opts, log);
        }
    };
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
    worker();
    for (std::thread& t : threads) t.join();

    EvalReport report =
        assemble_report(std::move(results), judges, prompts, opts, long_horizon, log);
    report.model = assistant->name();
    return report;
}

}  // namespace

EvalReport run_single_scenario_eval(const Benchmark& bench,
                                    std::shared_ptr<ChatBackend> user_model,
                                    std::shared_ptr<ChatBackend> assistant,
                                    const std::vector<std::shared_ptr<ChatBackend>>& judges,
                                    EmbedBackend& embedder, const PromptCatalog& prompts,
                                    const EvalOptions& opts, CallLog* log) {
    return run_eval(bench, std::move(user_model), std::move(assistant), judges, embedder,
                    prompts, opts, false, log);
}

EvalReport run_long_horizon_eval(const Benchmark& bench,
                                 std::shared_ptr<ChatBackend> user_model,
                                 std::shared_ptr<ChatBackend> assistant,
                                 const std::vector<std::shared_ptr<ChatBackend>>& judges,
                                 EmbedBackend& embedder, const PromptCatalog& prompts,
                                 const EvalOptions& opts, CallLog* log) {
    return run_eval(bench, std::move(user_model), std::move(assistant), judges, embedder,
                    prompts, opts, true, log);
}

Json report_to_json(const EvalReport& report) {
    Json j;
    j["setting"] = report.setting;
    j["memory_enabled"] = report.memory_enabled;
    j["model"] = report.model;
    j["judges"] = report.judges;
    j["aggregates"] = report.aggregates;
    j["excluded"] = report.excluded;
    j["rigid_excluded"] = report.rigid_excluded;
    Json buckets = Json::object();
    for (const auto& [length, metrics] : report.by_history_length)
        buckets[std::to_string(length)] = metrics;
    j["by_history_length"] = std::move(buckets);
    Json scenarios = Json::array();
    for (const ScenarioEval& ev : report.scenarios) {
        Json s;
        s["scenario_ref"] = ev.scenario_ref;
        if (!ev.theme.empty()) s["theme"] = ev.theme;
        s["history_length"] = ev.history_length;
        s["excluded"] = ev.excluded;
        if (ev.excluded) s["exclusion_reason"] = ev.exclusion_reason;
        s["metrics"] = ev.metrics;
        s["per_judge"] = ev.per_judge;
        if (!ev.memory_summaries.empty()) s["memory_summaries"] = ev.memory_summaries;
        scenarios.push_back(std::move(s));
    }
    j["scenarios"] = std::move(scenarios);
    return j;
}

EvalReport report_from_json(const Json& j) {
    EvalReport report;
    report.setting = j.at("setting").get<std::string>();
    report.memory_enabled = j.at("memory_enabled").get<bool>();
    report.model = j.value("model", "");
    report.judges = j.at("judges").get<std::vector<std::string>>();
    report.aggregates = j.at("aggregates").get<std::map<std::string, double>>();
    report.excluded = j.at("excluded").get<std::size_t>();
    report.rigid_excluded = j.at("rigid_excluded").get<std::size_t>();
    for (const auto& [key, metrics] : j.at("by_history_length").items())
        report.by_history_length[std::stoull(key)] =
            metrics.get<std::map<std::string, double>>();
    for (const Json& s : j.at("scenarios")) {
        ScenarioEval ev;
        ev.scenario_ref = s.at("scenario_ref").get<std::string>();
        ev.theme = s.value("theme", "");
        ev.history_length = s.at("history_length").get<std::size_t>();
        ev.excluded = s.at("excluded").get<bool>();
        ev.exclusion_reason = s.value("exclusion_reason", "");
        ev.metrics = s.at("metrics").get<std::map<std::string, double>>();
        ev.per_judge =
            s.at("per_judge")
                .get<std::map<std::string, std::map<std::string, double>>>();
        if (s.contains("memory_summaries"))
            ev.memory_summaries = s.at("memory_summaries").get<std::vector<std::string>>();
        report.scenarios.push_back(std::move(ev));
    }
    return report;
}

}  // namespace lifesim
