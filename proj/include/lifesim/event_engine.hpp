#pragma once

#include "lifesim/cognitive_engine.hpp"

namespace lifesim {

struct TriggerConfig {
    double scale = 1.0;   // per dt unit, > 0
    double offset = 0.0;  // dt units
    std::string dt_unit = "days";  // "days" | "hours"
};

double dt_unit_seconds(const TriggerConfig& cfg);

// 1 / (1 + exp(-(scale * (delta_t - offset)))), strictly increasing in delta_t
double trigger_probability(double delta_t, const TriggerConfig& cfg);

bool should_trigger(double p, StreamRng& rng);

struct RefinedPair {
    std::string event_text;
    std::string intention_text;
};

// Rejects outputs still carrying generator placeholders (NAME_1, XXX, ...).
RefinedPair refine(const std::string& event_text, const std::string& intention_text,
                   const Environment& env, const BeliefState& belief, ChatBackend& backend,
                   const PromptCatalog& prompts, int parse_retries = 2,
                   CallLog* log = nullptr);

struct EventEngineOptions {
    TriggerConfig trigger;
    std::size_t max_points = 0;  // 0 = all env points
    std::size_t max_events = 10;
    int parse_retries = 2;
};

// Walks the env sequence: per point, a Bernoulli trigger on the elapsed time
// since the last emitted event decides whether the cognitive stack runs. A
// rerank verdict of has_possible_event=false skips the point without
// advancing the elapsed-time anchor.
std::vector<LifeEvent> generate_life_trajectory(const UserProfile& profile,
                                                const std::vector<Environment>& env_sequence,
                                                const EventEngineOptions& opts,
                                                const DesirePool& pool,
                                                ChatBackend& chat, EmbedBackend& embedder,
                                                const PromptCatalog& prompts,
                                                std::uint64_t seed, CallLog* log = nullptr);

}  // namespace lifesim
