#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lifesim/behavior_engine.hpp"
#include "lifesim/cognitive_engine.hpp"
#include "lifesim/eval_metrics.hpp"

namespace lifesim {

struct ChecklistItem {
    std::string text;
    std::string kind;  // "explicit" | "implicit"
};

struct IntentChecklist {
    std::string scenario_ref;
    std::vector<ChecklistItem> items;
};

// 2..6 items; with four or more, at least two of each kind, otherwise at
// least one of each.
void validate_checklist(const IntentChecklist& checklist);
std::string render_checklist(const IntentChecklist& checklist);

// The checklist a scenario carries in its explicit/implicit intent lists.
IntentChecklist checklist_of(const Scenario& scenario);

std::vector<std::string> decompose_intent(const Scenario& scenario, ChatBackend& backend,
                                          const PromptCatalog& prompts,
                                          int parse_retries = 2, CallLog* log = nullptr);

IntentChecklist classify_intents(const std::vector<std::string>& sub_intents,
                                 const Scenario& scenario, ChatBackend& backend,
                                 const PromptCatalog& prompts, int parse_retries = 2,
                                 CallLog* log = nullptr);

// decompose + classify; fills the scenario's intent lists.
IntentChecklist build_checklist(Scenario& scenario, ChatBackend& backend,
                                const PromptCatalog& prompts, int parse_retries = 2,
                                CallLog* log = nullptr);

struct ChecklistScores {
    std::vector<int> per_item;  // aligned with the checklist, each 0/1
    double overall = 0.0;       // fractions in [0,1]
    double explicit_part = 0.0;
    double implicit_part = 0.0;
};

ChecklistScores score_intent_recognition(const IntentChecklist& checklist,
                                         const std::vector<std::string>& predicted_intents,
                                         const std::string& conversation_text,
                                         ChatBackend& judge, const PromptCatalog& prompts,
                                         int parse_retries = 2, CallLog* log = nullptr);

ChecklistScores score_intent_completion(const IntentChecklist& checklist,
                                        const Scenario& scenario,
                                        const std::string& conversation_text,
                                        ChatBackend& judge, const PromptCatalog& prompts,
                                        int parse_retries = 2, CallLog* log = nullptr);

// metric is one of naturalness, coherence, environment_alignment; 0..100.
double score_scalar(const std::string& metric, const Scenario& scenario,
                    const std::string& conversation_text, ChatBackend& judge,
                    const PromptCatalog& prompts, int parse_retries = 2,
                    CallLog* log = nullptr);

// metric is one of event_persona_alignment, event_coherence, event_naturalness.
double score_event_sequence(const std::string& metric, const std::string& profile_text,
                            const std::string& events_text, ChatBackend& judge,
                            const PromptCatalog& prompts, int parse_retries = 2,
                            CallLog* log = nullptr);

// Exact-match accuracy over the gold dimensions; missing predictions miss.
double preference_recovery(const std::map<std::string, std::string>& predicted,
                           const std::map<std::string, std::string>& gold);

std::map<std::string, std::string> predict_preferences(
    const std::string& conversation_text, const std::vector<std::string>& dimensions,
    ChatBackend& assistant, const PromptCatalog& prompts, int parse_retries = 2,
    CallLog* log = nullptr);

// Per-dimension alignment binaries averaged onto 0..100.
double persona_alignment(const std::string& conversation_text,
                         const std::map<std::string, std::string>& preferences,
                         ChatBackend& judge, const PromptCatalog& prompts,
                         int parse_retries = 2, CallLog* log = nullptr);

double judge_ensemble(const std::vector<double>& per_judge);

std::string profile_memory_update(const std::string& history_text,
                                  const std::string& prior_summary, ChatBackend& backend,
                                  const PromptCatalog& prompts, int parse_retries = 2,
                                  CallLog* log = nullptr);

// Share of assistant turns ending in '?'; absent without assistant turns.
std::optional<double> proactive_inquiry_ratio(const Conversation& conv);

struct RigidReasoningResult {
    std::optional<double> ratio;  // absent when nothing was judged
    std::size_t rigid = 0;
    std::size_t judged = 0;
    std::size_t excluded = 0;  // labels that failed to parse
};

RigidReasoningResult rigid_reasoning_ratio(const std::vector<Conversation>& conversations,
                                           ChatBackend& judge, const PromptCatalog& prompts,
                                           int parse_retries = 2, CallLog* log = nullptr);

struct ReasonableResult {
    std::optional<double> ratio;
    std::size_t reasonable = 0;
    std::size_t judged = 0;
    std::size_t excluded = 0;
};

// Audit of generated intentions: realistic and consistent with their event?
ReasonableResult reasonable_intention_ratio(const std::vector<Scenario>& scenarios,
                                            ChatBackend& judge,
                                            const PromptCatalog& prompts,
                                            int parse_retries = 2, CallLog* log = nullptr);

// ---------------------------------------------------------------------------
// Benchmark
// ---------------------------------------------------------------------------

struct Benchmark {
    std::vector<Scenario> scenarios;
};

Scenario make_scenario(std::string id, const UserProfile& profile, const LifeEvent& event,
                       const std::string& theme);

Json scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const Json& j);
void save_benchmark(const std::string& path, const Benchmark& bench);
Benchmark load_benchmark(const std::string& path);

struct HistoryRecord {
    std::string event_text;
    std::string intention_text;
};

std::vector<HistoryRecord> load_history(const std::string& path);
std::string render_history_records(const std::vector<HistoryRecord>& records);

// Assistant intent predictions across the episode, deduplicated, first kept.
std::vector<std::string> predicted_intents_of(const Conversation& conv);

// ---------------------------------------------------------------------------
// Protocol runners
// ---------------------------------------------------------------------------

struct EvalOptions {
    std::size_t max_turns = 20;  // 3 in the long-horizon setting
    double theta = 0.7;
    int parse_retries = 2;
    std::uint64_t seed = 0;
    bool memory = false;    // long-horizon: inject summaries instead of raw history
    std::size_t threads = 1;  // 0 = hardware concurrency
};

struct ScenarioEval {
    std::string scenario_ref;
    std::string theme;
    std::size_t history_length = 0;
    bool excluded = false;
    std::string exclusion_reason;
    std::map<std::string, double> metrics;  // 0..100, ensemble means
    std::map<std::string, std::map<std::string, double>> per_judge;
    std::vector<std::string> memory_summaries;
    Conversation conversation;
};

struct EvalReport {
    std::string setting;  // "single" | "long"
    bool memory_enabled = false;
    std::string model;  // assistant under test
    std::vector<std::string> judges;
    std::vector<ScenarioEval> scenarios;
    std::map<std::string, double> aggregates;  // mean over included scenarios
    std::map<std::size_t, std::map<std::string, double>> by_history_length;
    std::size_t excluded = 0;
    std::size_t rigid_excluded = 0;
};

// What the simulate step leaves behind for the scoring step.
struct DialogueArtifacts {
    Conversation conv;
    std::vector<std::string> memory_summaries;  // one per prior scenario, memory on
    std::size_t history_length = 0;
};

DialogueArtifacts simulate_scenario(const Scenario& scenario,
                                    std::shared_ptr<ChatBackend> user_model,
                                    std::shared_ptr<ChatBackend> assistant,
                                    EmbedBackend& embedder, const PromptCatalog& prompts,
                                    const EvalOptions& opts, bool long_horizon,
                                    CallLog* log = nullptr);

ScenarioEval score_scenario(const Scenario& scenario, const DialogueArtifacts& artifacts,
                            std::shared_ptr<ChatBackend> assistant,
                            const std::vector<std::shared_ptr<ChatBackend>>& judges,
                            const PromptCatalog& prompts, const EvalOptions& opts,
                            CallLog* log = nullptr);

// Aggregation over scored scenarios, plus the rigid-reasoning sweep.
EvalReport assemble_report(std::vector<ScenarioEval> scenarios,
                           const std::vector<std::shared_ptr<ChatBackend>>& judges,
                           const PromptCatalog& prompts, const EvalOptions& opts,
                           bool long_horizon, CallLog* log = nullptr);

EvalReport run_single_scenario_eval(const Benchmark& bench,
                                    std::shared_ptr<ChatBackend> user_model,
                                    std::shared_ptr<ChatBackend> assistant,
                                    const std::vector<std::shared_ptr<ChatBackend>>& judges,
                                    EmbedBackend& embedder, const PromptCatalog& prompts,
                                    const EvalOptions& opts, CallLog* log = nullptr);

EvalReport run_long_horizon_eval(const Benchmark& bench,
                                 std::shared_ptr<ChatBackend> user_model,
                                 std::shared_ptr<ChatBackend> assistant,
                                 const std::vector<std::shared_ptr<ChatBackend>>& judges,
                                 EmbedBackend& embedder, const PromptCatalog& prompts,
                                 const EvalOptions& opts, CallLog* log = nullptr);

Json report_to_json(const EvalReport& report);
EvalReport report_from_json(const Json& j);

}  // namespace lifesim
