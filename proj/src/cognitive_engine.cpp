#include "lifesim/cognitive_engine.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "lifesim/errors.hpp"

namespace lifesim {

Json life_event_to_json(const LifeEvent& e) {
    Json j;
    j["epoch_sec"] = e.env.time.epoch_sec;
    j["tz_offset_min"] = e.env.tz_offset_min;
    j["poi"] = e.env.poi;
    if (e.env.weather)
        j["weather"] = {{"summary", e.env.weather->summary},
                        {"avg_c", e.env.weather->avg_c},
                        {"high_c", e.env.weather->high_c},
                        {"low_c", e.env.weather->low_c}};
    j["event"] = e.event_text;
    j["intention"] = e.intention_text;
    j["source_desire_id"] = e.source_desire_id;
    j["trigger_prob"] = e.trigger_prob;
    return j;
}

LifeEvent life_event_from_json(const Json& j) {
    LifeEvent e;
    e.env.time.epoch_sec = j.at("epoch_sec").get<std::int64_t>();
    e.env.tz_offset_min = j.at("tz_offset_min").get<int>();
    e.env.poi = j.at("poi").get<std::string>();
    if (j.contains("weather")) {
        const Json& w = j.at("weather");
        e.env.weather = Weather{w.at("summary").get<std::string>(),
                                w.at("avg_c").get<double>(), w.at("high_c").get<double>(),
                                w.at("low_c").get<double>()};
    }
    e.event_text = j.at("event").get<std::string>();
    e.intention_text = j.at("intention").get<std::string>();
    e.source_desire_id = j.at("source_desire_id").get<std::uint64_t>();
    e.trigger_prob = j.at("trigger_prob").get<double>();
    return e;
}

std::string render_history(const std::vector<LifeEvent>& history) {
    if (history.empty()) return "none";
    std::string out;
    for (std::size_t i = 0; i < history.size(); ++i) {
        out += std::to_string(i + 1) + ". [" +
               format_local_with_weekday(history[i].env.time, history[i].env.tz_offset_min) +
               "] " + history[i].event_text + "\n";
    }
    return out;
}

std::string render_candidates(const std::vector<DesireEntry>& candidates) {
    std::string out;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        out += std::to_string(i + 1) + ". Event: " +
               (candidates[i].event_contexts.empty() ? std::string("none")
                                                     : candidates[i].event_contexts.front()) +
               " Intent: " + candidates[i].intent_text + "\n";
    }
    return out;
}

namespace {

const std::map<std::string, std::string> kDimensionDescriptions = {
    {"physiological",
     "Physiological: Physiology-driven events refer to issues caused by internal "
     "physical conditions."},
    {"psychological",
     "Psychological: Cognition-feedback-driven events refer to issues based on "
     "personal cognition and psychological states."},
    {"environmental",
     "Environmental: Environment-driven events refer to issues or accidents caused "
     "by external environmental factors."}};

std::string goal_or_none(const BeliefState& belief) {
    return belief.long_term_goal.empty() ? std::string("none") : belief.long_term_goal;
}

}  // namespace

std::vector<EventHypothesis> construct_hypotheses(const BeliefState& belief,
                                                  const Environment& env,
                                                  ChatBackend& backend,
                                                  const PromptCatalog& prompts,
                                                  int parse_retries, CallLog* log) {
    if (env.poi.empty()) throw ValidationError("environment has no location");
    std::vector<EventHypothesis> out;
    for (auto dim : kHypothesisDimensions) {
        std::string dimension(dim);
        ChatRequest req;
        req.tag = "hypothesis";
        req.messages = {
            {"user", prompts.render("hypothesis",
                                    {{"description", kDimensionDescriptions.at(dimension)},
                                     {"user_profile", belief.long_term.narrative},
                                     {"goal", goal_or_none(belief)},
                                     {"event_sequences", render_history(belief.history)},
                                     {"location_desc", render_environment(env)}})}};
        Json j;
        try {
            j = chat_structured(backend, req, parse_retries,
                                [](const Json& v) {
                                    if (!v.is_object() || !v.contains("event") ||
                                        !v.at("event").is_string())
                                        throw ValidationError("reply lacks an event string");
                                },
                                log);
        } catch (const ParseError& e) {
            throw ParseError(dimension + ": " + e.what(), e.raw_reply());
        } catch (const ValidationError& e) {
            throw ValidationError(dimension + ": " + e.what());
        }
        out.push_back({dimension, j.at("event").get<std::string>()});
    }
    return out;
}

std::vector<DesireEntry> retrieve_desires(const std::vector<EventHypothesis>& hypotheses,
                                          const DesirePool& pool, EmbedBackend& embedder) {
    std::vector<DesireEntry> out;
    std::set<std::uint64_t> seen;
    for (const EventHypothesis& h : hypotheses) {
        auto scored = pool.retrieve(h.text, 3, embedder);
        for (const ScoredEntry& s : scored) {
            const DesireEntry& e = pool.entries()[s.index];
            if (seen.insert(e.id).second) out.push_back(e);
        }
    }
    return out;
}

RankedCandidates rerank(const std::vector<DesireEntry>& candidates,
                        const BeliefState& belief, const Environment& env,
                        ChatBackend& backend, const PromptCatalog& prompts,
                        int parse_retries, CallLog* log) {
    if (candidates.empty() || candidates.size() > 9)
        throw ValidationError("rerank expects 1..9 candidates, got " +
                              std::to_string(candidates.size()));
    ChatRequest req;
    req.tag = "rerank";
    req.messages = {
        {"user", prompts.render("rerank",
                                {{"user_profile", belief.long_term.narrative},
                                 {"goal", goal_or_none(belief)},
                                 {"event_sequences", render_history(belief.history)},
                                 {"location_desc", render_environment(env)},
                                 {"events_text", render_candidates(candidates)}})}};
    Json j = chat_structured(backend, req, parse_retries,
                             [](const Json& v) {
                                 if (!v.is_object() || !v.contains("ranked_events") ||
                                     !v.contains("has_possible_event"))
                                     throw ValidationError(
                                         "rerank reply needs ranked_events and "
                                         "has_possible_event");
                             },
                             log);

    RankedCandidates out;
    const Json& flag = j.at("has_possible_event");
    out.has_possible_event =
        flag.is_boolean() ? flag.get<bool>() : flag.get<std::string>() == "true";

    std::set<std::size_t> used;
    for (const Json& idx_j : j.at("ranked_events")) {
        long idx = idx_j.is_string() ? std::stol(idx_j.get<std::string>())
                                     : idx_j.get<long>();
        if (idx < 1 || std::size_t(idx) > candidates.size())
            throw ValidationError("rerank index " + std::to_string(idx) +
                                  " outside 1.." + std::to_string(candidates.size()));
        if (!used.insert(std::size_t(idx)).second)
            throw ValidationError("rerank repeats index " + std::to_string(idx));
        out.candidates.push_back(candidates[std::size_t(idx) - 1]);
    }
    if (out.has_possible_event && out.candidates.empty())
        throw ValidationError("has_possible_event=true with empty ranking");
    return out;
}

std::vector<double> softmin_probabilities(const std::vector<double>& ranks) {
    if (ranks.empty()) throw ValidationError("softmin over empty support");
    double min_rank = *std::min_element(ranks.begin(), ranks.end());
    std::vector<double> probs(ranks.size());
    double total = 0.0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        probs[i] = std::exp(-(ranks[i] - min_rank));
        total += probs[i];
    }
    for (double& p : probs) p /= total;
    return probs;
}

const DesireEntry& softmin_sample(const RankedCandidates& ranked, StreamRng& rng) {
    if (!ranked.has_possible_event || ranked.candidates.empty())
        throw ValidationError("softmin sample on empty support");
    std::vector<double> ranks(ranked.candidates.size());
    for (std::size_t i = 0; i < ranks.size(); ++i) ranks[i] = double(i + 1);
    std::vector<double> probs = softmin_probabilities(ranks);
    double u = rng.uniform01();
    double cum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        cum += probs[i];
        if (u < cum) return ranked.candidates[i];
    }
    return ranked.candidates.back();
}

}  // namespace lifesim
