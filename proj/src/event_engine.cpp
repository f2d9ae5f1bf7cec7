#include "lifesim/event_engine.hpp"

#include <cctype>
#include <cmath>

#include "lifesim/errors.hpp"

namespace lifesim {

double dt_unit_seconds(const TriggerConfig& cfg) {
    if (cfg.dt_unit == "days") return 86400.0;
    if (cfg.dt_unit == "hours") return 3600.0;
    throw ValidationError("dt_unit must be days or hours: '" + cfg.dt_unit + "'");
}

double trigger_probability(double delta_t, const TriggerConfig& cfg) {
    if (cfg.scale <= 0.0) throw ValidationError("trigger scale must be > 0");
    if (delta_t < 0.0) throw ValidationError("elapsed time must be >= 0");
    return 1.0 / (1.0 + std::exp(-(cfg.scale * (delta_t - cfg.offset))));
}

bool should_trigger(double p, StreamRng& rng) {
    if (p < 0.0 || p > 1.0)
        throw ValidationError("trigger probability outside [0,1]: " + std::to_string(p));
    return rng.bernoulli(p);
}

namespace {

// NAME_1-style tokens and bare XXX markers betray unrefined generator output.
bool has_placeholder(const std::string& text) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text.compare(i, 5, "NAME_") == 0 && i + 5 < text.size() &&
            std::isdigit(static_cast<unsigned char>(text[i + 5])))
            return true;
        if (text.compare(i, 3, "XXX") == 0) {
            bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(text[i - 1]));
            std::size_t after = i + 3;
            while (after < text.size() && text[after] == 'X') ++after;
            bool right_ok =
                after >= text.size() || !std::isalnum(static_cast<unsigned char>(text[after]));
            if (left_ok && right_ok) return true;
        }
    }
    return false;
}

const std::string kRefineExample1 =
    "Input event: \"NAME_1 hurt their ankle at XXX park.\" Input intent: \"The user "
    "wants advice on a twisted ankle.\" -> event: \"While jogging through City Park "
    "on a breezy afternoon, I rolled my right ankle on loose gravel.\" intent: \"I'd "
    "like to know how to treat a mildly twisted ankle and keep training.\"";
const std::string kRefineExample2 =
    "Input event: \"Slept badly before a big day.\" Input intent: \"The user wants "
    "sleep tips.\" -> event: \"Tossed and turned most of the night before this "
    "morning's presentation, maybe four hours of sleep.\" intent: \"What can I do "
    "today to stay sharp after a short night, and how do I sleep better tonight?\"";

std::string goal_or_none(const BeliefState& belief) {
    return belief.long_term_goal.empty() ? std::string("none") : belief.long_term_goal;
}

}  // namespace

RefinedPair refine(const std::string& event_text, const std::string& intention_text,
                   const Environment& env, const BeliefState& belief, ChatBackend& backend,
                   const PromptCatalog& prompts, int parse_retries, CallLog* log) {
    if (event_text.empty() || intention_text.empty())
        throw ValidationError("refine needs non-empty event and intention");
    ChatRequest req;
    req.tag = "refinement";
    req.messages = {
        {"user", prompts.render("refinement",
                                {{"example_1", kRefineExample1},
                                 {"example_2", kRefineExample2},
                                 {"user_profile", belief.long_term.narrative},
                                 {"goal", goal_or_none(belief)},
                                 {"event_sequences", render_history(belief.history)},
                                 {"location_desc", render_environment(env)},
                                 {"event_text", event_text},
                                 {"intent", intention_text}})}};
    Json j = chat_structured(backend, req, parse_retries,
                             [](const Json& v) {
                                 if (!v.is_object() || !v.contains("event") ||
                                     !v.contains("intent"))
                                     throw ValidationError(
                                         "refinement reply needs event and intent");
                             },
                             log);
    RefinedPair out{j.at("event").get<std::string>(), j.at("intent").get<std::string>()};
    if (out.event_text.empty() || out.intention_text.empty())
        throw ValidationError("refinement produced empty text");
    if (has_placeholder(out.event_text) || has_placeholder(out.intention_text))
        throw ValidationError("placeholder leak in refined output");
    return out;
}

std::vector<LifeEvent> generate_life_trajectory(const UserProfile& profile,
                                                const std::vector<Environment>& env_sequence,
                                                const EventEngineOptions& opts,
                                                const DesirePool& pool, ChatBackend& chat,
                                                EmbedBackend& embedder,
                                                const PromptCatalog& prompts,
                                                std::uint64_t seed, CallLog* log) {
    std::vector<LifeEvent> out;
    if (env_sequence.empty()) return out;
    if (pool.size() == 0) throw ValidationError("desire pool is empty");

    BeliefState belief;
    belief.long_term = profile;

    const double unit = dt_unit_seconds(opts.trigger);
    std::int64_t t_prev = env_sequence.front().time.epoch_sec;
    const std::size_t n_points = opts.max_points == 0
                                     ? env_sequence.size()
                                     : std::min(opts.max_points, env_sequence.size());

    for (std::size_t step = 0; step < n_points; ++step) {
        if (out.size() >= opts.max_events) break;
        const Environment& env = env_sequence[step];
        double delta_t = double(env.time.epoch_sec - t_prev) / unit;
        if (delta_t < 0.0)
            throw ValidationError("environment sequence not time-ordered at step " +
                                  std::to_string(step + 1));
        double p = trigger_probability(delta_t, opts.trigger);

        StreamRng trigger_rng = StreamRng::keyed(seed, "trigger", step);
        if (!should_trigger(p, trigger_rng)) continue;

        try {
            belief.short_term =
                construct_hypotheses(belief, env, chat, prompts, opts.parse_retries, log);
            std::vector<DesireEntry> candidates =
                retrieve_desires(belief.short_term, pool, embedder);
            RankedCandidates ranked =
                rerank(candidates, belief, env, chat, prompts, opts.parse_retries, log);
            if (!ranked.has_possible_event) {
                belief.short_term.clear();
                continue;  // pressure keeps building
            }

            StreamRng sample_rng = StreamRng::keyed(seed, "softmin", step);
            const DesireEntry& chosen = softmin_sample(ranked, sample_rng);

            std::string context = chosen.event_contexts.front();
            if (chosen.event_contexts.size() > 1) {
                StreamRng ctx_rng = StreamRng::keyed(seed, "context", step);
                context = chosen.event_contexts[std::size_t(
                    ctx_rng.next_u64() % chosen.event_contexts.size())];
            }

            RefinedPair refined = refine(context, chosen.intent_text, env, belief, chat,
                                         prompts, opts.parse_retries, log);

            LifeEvent ev;
            ev.env = env;
            ev.event_text = refined.event_text;
            ev.intention_text = refined.intention_text;
            ev.source_desire_id = chosen.id;
            ev.trigger_prob = p;
            out.push_back(ev);
            belief.history.push_back(std::move(ev));
            belief.short_term.clear();
            t_prev = env.time.epoch_sec;
        } catch (const ParseError& e) {
            throw ParseError("step " + std::to_string(step + 1) + ": " + e.what(),
                             e.raw_reply());
        } catch (const ValidationError& e) {
            throw ValidationError("step " + std::to_string(step + 1) + ": " + e.what());
        } catch (const BackendError& e) {
            throw BackendError("step " + std::to_string(step + 1) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace lifesim
