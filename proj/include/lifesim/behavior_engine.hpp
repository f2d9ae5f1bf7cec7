#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lifesim/cognitive_engine.hpp"
#include "lifesim/gateway.hpp"
#include "lifesim/profile_pool.hpp"
#include "lifesim/prompts.hpp"
#include "lifesim/trajectory.hpp"

namespace lifesim {

/// GoEmotions taxonomy: 27 emotions plus neutral.
inline constexpr std::array<const char*, 28> kEmotions = {
    "admiration", "amusement",  "anger",      "annoyance",      "approval",
    "caring",     "confusion",  "curiosity",  "desire",         "disappointment",
    "disapproval", "disgust",   "embarrassment", "excitement",  "fear",
    "gratitude",  "grief",      "joy",        "love",           "nervousness",
    "optimism",   "pride",      "realization", "relief",        "remorse",
    "sadness",    "surprise",   "neutral"};

bool is_known_emotion(const std::string& label);
std::string emotion_options_text();

inline constexpr const char* kActionContinue = "Continue Conversation";
inline constexpr const char* kActionEnd = "End Conversation";

/// One remembered piece of assistant advice, keyed for later similarity checks.
struct MemoryEntry {
    std::string query;
    std::string value;
    std::vector<float> embedding;  // unit norm
    std::size_t source_turn = 0;
};

struct MemoryStore {
    std::vector<MemoryEntry> entries;
};

struct MemoryPerception {
    std::optional<MemoryEntry> stored;
    bool negative = false;
    double max_similarity = 0.0;
};

std::string render_perception(const MemoryPerception& p);

struct TurnMeta {
    std::optional<std::string> emotion;
    std::optional<std::string> action;  // "continue" | "end"
    std::optional<std::string> predicted_intent;
    std::optional<MemoryPerception> memory;
};

struct Turn {
    std::string speaker;  // "user" | "assistant"
    std::string text;
    TurnMeta meta;
};

std::string render_dialogue(const std::vector<Turn>& turns);

/// One benchmark scenario: who is talking, where, and what they are after.
struct Scenario {
    std::string id;
    UserProfile profile;
    Environment env;
    std::string theme;  // life domain the triggering desire came from
    std::string event_text;
    std::string intention_text;
    std::vector<std::string> explicit_intents;
    std::vector<std::string> implicit_intents;
    std::map<std::string, std::string> gold_preferences;  // dimension -> low|high
    std::string history_ref;  // optional pointer to a simulated-history artifact
};

struct Conversation {
    std::string scenario_ref;
    std::uint64_t seed = 0;
    std::string user_backend;
    std::string assistant_backend;
    std::vector<Turn> turns;
    std::string ended_by;  // user_action | turn_cap | error
    std::string error;     // populated when ended_by == error
};

/// Static strings every user-side stage prompt needs.
struct StageContext {
    std::string profile;
    std::string event;
    std::string intent;
    std::string dialogue_scene;
};

StageContext make_stage_context(const Scenario& scenario);

MemoryPerception perceive_memory(const std::string& assistant_reply, MemoryStore& store,
                                 EmbedBackend& embedder, double theta, ChatBackend& chat,
                                 const PromptCatalog& prompts, const StageContext& ctx,
                                 const std::string& conversation_text,
                                 std::size_t source_turn, int parse_retries = 2,
                                 CallLog* log = nullptr);

std::string infer_emotion(const StageContext& ctx, const std::string& conversation_text,
                          const MemoryPerception& perception, ChatBackend& chat,
                          const PromptCatalog& prompts, int parse_retries = 2,
                          CallLog* log = nullptr);

/// Returns "continue" or "end".
std::string select_action(const StageContext& ctx, const std::string& conversation_text,
                          const std::string& emotion, const MemoryPerception& perception,
                          ChatBackend& chat, const PromptCatalog& prompts,
                          int parse_retries = 2, CallLog* log = nullptr);

std::string generate_user_turn(const Scenario& scenario, const std::vector<Turn>& turns,
                               const std::string& emotion, const std::string& action,
                               const MemoryPerception& perception, ChatBackend& chat,
                               const PromptCatalog& prompts, CallLog* log = nullptr);

struct DialogueOptions {
    std::size_t max_turns = 20;  // user/assistant exchanges
    double theta = 0.7;
    int parse_retries = 2;
    std::uint64_t seed = 0;
    std::string assistant_profile;  // what the assistant believes about the user
    std::string assistant_context;  // prior history or memory summaries, long-horizon
};

Conversation run_dialogue(const Scenario& scenario, ChatBackend& user_backend,
                          ChatBackend& assistant_backend, EmbedBackend& embedder,
                          const PromptCatalog& prompts, const DialogueOptions& opts,
                          CallLog* log = nullptr);

std::vector<Json> conversation_to_jsonl(const Conversation& conv);
Conversation conversation_from_jsonl(std::vector<Json> records);
void save_conversation(const std::string& path, const Conversation& conv);
Conversation load_conversation(const std::string& path);

}  // namespace lifesim
