#pragma once

#include <string>
#include <vector>

#include "lifesim/desire_pool.hpp"
#include "lifesim/profile_pool.hpp"
#include "lifesim/trajectory.hpp"

namespace lifesim {

struct LifeEvent {
    Environment env;
    std::string event_text;
    std::string intention_text;
    std::uint64_t source_desire_id = 0;
    double trigger_prob = 0.0;
};

Json life_event_to_json(const LifeEvent& e);
LifeEvent life_event_from_json(const Json& j);

inline constexpr std::array<std::string_view, 3> kHypothesisDimensions = {
    "physiological", "psychological", "environmental"};

struct EventHypothesis {
    std::string dimension;
    std::string text;
};

struct BeliefState {
    UserProfile long_term;
    std::vector<LifeEvent> history;
    std::vector<EventHypothesis> short_term;  // 0 or 3 entries
    std::string long_term_goal;
};

struct RankedCandidates {
    std::vector<DesireEntry> candidates;  // in rank order, rank i+1 at index i
    bool has_possible_event = false;
};

// One backend call per dimension, in the fixed dimension order.
std::vector<EventHypothesis> construct_hypotheses(const BeliefState& belief,
                                                  const Environment& env,
                                                  ChatBackend& backend,
                                                  const PromptCatalog& prompts,
                                                  int parse_retries = 2,
                                                  CallLog* log = nullptr);

// Top-3 per hypothesis, concatenated in dimension order, duplicates (by entry
// id) collapsed keeping the first occurrence. At most 9 results.
std::vector<DesireEntry> retrieve_desires(const std::vector<EventHypothesis>& hypotheses,
                                          const DesirePool& pool, EmbedBackend& embedder);

RankedCandidates rerank(const std::vector<DesireEntry>& candidates,
                        const BeliefState& belief, const Environment& env,
                        ChatBackend& backend, const PromptCatalog& prompts,
                        int parse_retries = 2, CallLog* log = nullptr);

// P(i) = exp(-rank_i) / sum_k exp(-rank_k) over arbitrary real ranks.
std::vector<double> softmin_probabilities(const std::vector<double>& ranks);

// Inverse-CDF draw over the candidates in rank order.
const DesireEntry& softmin_sample(const RankedCandidates& ranked, StreamRng& rng);

// Prompt-facing renderings shared with the event engine.
std::string render_history(const std::vector<LifeEvent>& history);
std::string render_candidates(const std::vector<DesireEntry>& candidates);

}  // namespace lifesim
