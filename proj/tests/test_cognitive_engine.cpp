#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "lifesim/cognitive_engine.hpp"
#include "lifesim/errors.hpp"
#include "lifesim/gateway.hpp"
#include "lifesim/rng.hpp"
#include "lifesim/timeutil.hpp"

using namespace lifesim;

namespace {

// Reference evaluation of the rank-weighted distribution, computed without the
// max-shift trick the production code uses for stability.
std::vector<double> softmin_reference(const std::vector<double>& ranks) {
    std::vector<double> p(ranks.size());
    double total = 0.0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        p[i] = std::exp(-ranks[i]);
        total += p[i];
    }
    for (double& v : p) v /= total;
    return p;
}

// Embedder with fully scripted vectors, for retrieval tests that need exact
// control over every similarity.
class MapEmbedBackend : public EmbedBackend {
public:
    explicit MapEmbedBackend(std::size_t dim) : dim_(dim) {}

    void set(const std::string& text, std::vector<float> v) { vectors_[text] = std::move(v); }

    std::vector<float> embed(std::string_view text) override {
        auto it = vectors_.find(std::string(text));
        if (it == vectors_.end()) throw ValidationError("unexpected embed query");
        return it->second;
    }
    std::size_t dim() const override { return dim_; }
    std::string name() const override { return "map"; }

private:
    std::size_t dim_;
    std::map<std::string, std::vector<float>> vectors_;
};

DesireEntry entry_with(std::uint64_t id, std::vector<float> embedding) {
    DesireEntry e;
    e.id = id;
    e.theme = "Exercise & Fitness";
    e.intent_text = "The user wants to do thing " + std::to_string(id) + ".";
    e.event_contexts = {"context " + std::to_string(id)};
    e.embedding = std::move(embedding);
    return e;
}

std::vector<float> one_hot(std::size_t dim, std::size_t at) {
    std::vector<float> v(dim, 0.0f);
    v[at] = 1.0f;
    return v;
}

BeliefState basic_belief() {
    BeliefState belief;
    belief.long_term.id = "u0";
    belief.long_term.narrative = "A runner who likes quiet mornings.";
    return belief;
}

Environment park_env() {
    Environment env;
    env.time = parse_iso8601("2012-10-28T09:00:00").ts;
    env.poi = "City Park";
    return env;
}

Json ordered(const std::string& tag, const std::string& reply) {
    return Json{{"tag", tag}, {"match", "ordered"}, {"reply", reply}};
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

TEST_CASE("softmin probabilities for ranks 1,2,3 match direct evaluation") {
    const std::vector<double> probs = softmin_probabilities({1.0, 2.0, 3.0});
    REQUIRE(probs.size() == 3);
    const std::vector<double> ref = softmin_reference({1.0, 2.0, 3.0});
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(probs[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    CHECK(probs[0] == doctest::Approx(0.66524).epsilon(1e-4));
    CHECK(probs[1] == doctest::Approx(0.24473).epsilon(1e-4));
    CHECK(probs[2] == doctest::Approx(0.09003).epsilon(1e-4));
    CHECK(probs[0] + probs[1] + probs[2] == doctest::Approx(1.0).epsilon(1e-12));
    // Successive ranks differ by a factor of e.
    CHECK(probs[0] / probs[1] == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
    CHECK(probs[1] / probs[2] == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
}

TEST_CASE("softmin probabilities normalize and respect shift invariance") {
    StreamRng rng = StreamRng::keyed(3, "softmin_property");
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.next_u64() % 9;
        std::vector<double> ranks(n);
        for (double& r : ranks) r = rng.uniform01() * 10.0;
        const std::vector<double> probs = softmin_probabilities(ranks);
        double sum = 0.0;
        const std::vector<double> ref = softmin_reference(ranks);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(probs[i] > 0.0);
            CHECK(probs[i] <= 1.0 + 1e-15);
            CHECK(probs[i] == doctest::Approx(ref[i]).epsilon(1e-12));
            sum += probs[i];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

        std::vector<double> shifted = ranks;
        for (double& r : shifted) r += 1000.0;
        const std::vector<double> probs_shifted = softmin_probabilities(shifted);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(probs_shifted[i] == doctest::Approx(probs[i]).epsilon(1e-12));
    }
    CHECK(thrown_message([] { softmin_probabilities({}); })
              .find("softmin over empty support") != std::string::npos);
}

TEST_CASE("softmin probabilities survive ranks that would overflow naively") {
    const std::vector<double> probs = softmin_probabilities({-800.0, -799.0});
    CHECK(probs[0] == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 1.0)).epsilon(1e-12));
    CHECK(probs[0] + probs[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("softmin sampling frequencies track the rank distribution") {
    RankedCandidates ranked;
    ranked.has_possible_event = true;
    for (std::uint64_t id : {1, 2, 3}) ranked.candidates.push_back(entry_with(id, {1.0f}));

    std::map<std::uint64_t, int> counts;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        StreamRng rng = StreamRng::keyed(2025, "softmin", std::uint64_t(i));
        counts[softmin_sample(ranked, rng).id]++;
    }
    const std::vector<double> expect = softmin_reference({1.0, 2.0, 3.0});
    CHECK(std::abs(double(counts[1]) / n - expect[0]) < 0.005);
    CHECK(std::abs(double(counts[2]) / n - expect[1]) < 0.005);
    CHECK(std::abs(double(counts[3]) / n - expect[2]) < 0.005);
}

TEST_CASE("softmin sampling with one candidate always returns it") {
    RankedCandidates ranked;
    ranked.has_possible_event = true;
    ranked.candidates.push_back(entry_with(9, {1.0f}));
    for (int i = 0; i < 50; ++i) {
        StreamRng rng = StreamRng::keyed(7, "softmin", std::uint64_t(i));
        CHECK(softmin_sample(ranked, rng).id == 9);
    }
}

TEST_CASE("softmin sampling never leaves the ranked support") {
    RankedCandidates ranked;
    ranked.has_possible_event = true;
    ranked.candidates.push_back(entry_with(4, {1.0f}));
    ranked.candidates.push_back(entry_with(8, {1.0f}));
    for (int i = 0; i < 1000; ++i) {
        StreamRng rng = StreamRng::keyed(11, "softmin", std::uint64_t(i));
        const std::uint64_t id = softmin_sample(ranked, rng).id;
        CHECK((id == 4 || id == 8));
    }

    RankedCandidates none;
    CHECK(thrown_message([&] {
              StreamRng rng(0);
              softmin_sample(none, rng);
          }).find("softmin sample on empty support") != std::string::npos);

    RankedCandidates contradictory;
    contradictory.has_possible_event = false;
    contradictory.candidates.push_back(entry_with(1, {1.0f}));
    StreamRng rng(0);
    CHECK_THROWS_AS(softmin_sample(contradictory, rng), ValidationError);
}

TEST_CASE("hypotheses are constructed once per dimension, in order") {
    auto backend = ScriptedChatBackend::from_records({
        ordered("hypothesis", "{\"event\": \"A sore knee acts up.\"}"),
        ordered("hypothesis", "{\"event\": \"Worry about a deadline returns.\"}"),
        ordered("hypothesis", "{\"event\": \"A sudden shower soaks the street.\"}"),
    });
    PromptCatalog prompts;
    CallLog log;
    const auto hypotheses =
        construct_hypotheses(basic_belief(), park_env(), *backend, prompts, 2, &log);
    REQUIRE(hypotheses.size() == 3);
    CHECK(hypotheses[0].dimension == "physiological");
    CHECK(hypotheses[1].dimension == "psychological");
    CHECK(hypotheses[2].dimension == "environmental");
    CHECK(hypotheses[0].text == "A sore knee acts up.");
    CHECK(hypotheses[1].text == "Worry about a deadline returns.");
    CHECK(hypotheses[2].text == "A sudden shower soaks the street.");
    CHECK(log.total_calls() == 3);
    for (const CallLogEntry& e : log.entries()) CHECK(e.tag == "hypothesis");
}

TEST_CASE("hypothesis failures carry the dimension that failed") {
    auto backend = ScriptedChatBackend::from_records({
        ordered("hypothesis", "{\"event\": \"A sore knee acts up.\"}"),
        ordered("hypothesis", "no json here"),
    });
    PromptCatalog prompts;
    const std::string msg = thrown_message(
        [&] { construct_hypotheses(basic_belief(), park_env(), *backend, prompts, 0); });
    CHECK(msg.find("psychological: ") == 0);

    Environment nowhere;
    nowhere.time = park_env().time;
    CHECK(thrown_message([&] {
              construct_hypotheses(basic_belief(), nowhere, *backend, prompts, 0);
          }).find("environment has no location") != std::string::npos);
}

TEST_CASE("retrieval takes the top three per hypothesis and collapses duplicates") {
    const std::size_t dim = 9;
    DesirePool pool;
    for (std::size_t i = 0; i < 9; ++i)
        pool.add(entry_with(i + 1, one_hot(dim, i)));

    MapEmbedBackend embedder(dim);
    for (std::size_t h = 0; h < 3; ++h) {
        std::vector<float> v(dim, 0.0f);
        v[3 * h] = 0.9f;
        v[3 * h + 1] = 0.6f;
        v[3 * h + 2] = 0.45f;
        embedder.set("h" + std::to_string(h), v);
    }
    const std::vector<EventHypothesis> hypotheses{
        {"physiological", "h0"}, {"psychological", "h1"}, {"environmental", "h2"}};

    const auto desires = retrieve_desires(hypotheses, pool, embedder);
    REQUIRE(desires.size() == 9);
    for (std::size_t i = 0; i < 9; ++i) CHECK(desires[i].id == i + 1);

    // Identical hypotheses collapse to one top-3 block.
    const std::vector<EventHypothesis> same{
        {"physiological", "h0"}, {"psychological", "h0"}, {"environmental", "h0"}};
    const auto collapsed = retrieve_desires(same, pool, embedder);
    REQUIRE(collapsed.size() == 3);
    CHECK(collapsed[0].id == 1);
    CHECK(collapsed[1].id == 2);
    CHECK(collapsed[2].id == 3);

    // Overlapping hypotheses keep first occurrences and stay under the cap.
    std::vector<float> overlap(dim, 0.0f);
    overlap[0] = 0.5f;
    overlap[3] = 0.9f;
    overlap[4] = 0.7f;
    embedder.set("h_overlap", overlap);
    const std::vector<EventHypothesis> mixed{
        {"physiological", "h0"}, {"psychological", "h_overlap"}, {"environmental", "h1"}};
    const auto merged = retrieve_desires(mixed, pool, embedder);
    CHECK(merged.size() <= 9);
    std::set<std::uint64_t> ids;
    for (const DesireEntry& e : merged) CHECK(ids.insert(e.id).second);
    CHECK(merged[0].id == 1);
}

TEST_CASE("retrieval from a small pool returns the whole pool at most once") {
    DesirePool pool;
    pool.add(entry_with(1, one_hot(4, 0)));
    pool.add(entry_with(2, one_hot(4, 1)));
    MapEmbedBackend embedder(4);
    embedder.set("h0", one_hot(4, 0));
    embedder.set("h1", one_hot(4, 1));
    embedder.set("h2", one_hot(4, 2));
    const std::vector<EventHypothesis> hypotheses{
        {"physiological", "h0"}, {"psychological", "h1"}, {"environmental", "h2"}};
    const auto desires = retrieve_desires(hypotheses, pool, embedder);
    CHECK(desires.size() == 2);
}

TEST_CASE("rerank reorders candidates and validates the reply") {
    std::vector<DesireEntry> candidates{
        entry_with(11, {1.0f}), entry_with(22, {1.0f}), entry_with(33, {1.0f})};
    PromptCatalog prompts;

    auto reorder = ScriptedChatBackend::from_records({ordered(
        "rerank", "{\"ranked_events\": [3, 1, 2], \"has_possible_event\": true}")});
    const RankedCandidates ranked =
        rerank(candidates, basic_belief(), park_env(), *reorder, prompts);
    CHECK(ranked.has_possible_event);
    REQUIRE(ranked.candidates.size() == 3);
    CHECK(ranked.candidates[0].id == 33);
    CHECK(ranked.candidates[1].id == 11);
    CHECK(ranked.candidates[2].id == 22);

    auto nothing = ScriptedChatBackend::from_records({ordered(
        "rerank", "{\"ranked_events\": [], \"has_possible_event\": false}")});
    const RankedCandidates empty =
        rerank(candidates, basic_belief(), park_env(), *nothing, prompts);
    CHECK_FALSE(empty.has_possible_event);
    CHECK(empty.candidates.empty());

    // Quoted booleans and indices, and partial rankings, are accepted.
    auto quoted = ScriptedChatBackend::from_records({ordered(
        "rerank", "{\"ranked_events\": [\"2\"], \"has_possible_event\": \"true\"}")});
    const RankedCandidates partial =
        rerank(candidates, basic_belief(), park_env(), *quoted, prompts);
    CHECK(partial.has_possible_event);
    REQUIRE(partial.candidates.size() == 1);
    CHECK(partial.candidates[0].id == 22);
}

TEST_CASE("rerank rejects malformed rankings") {
    std::vector<DesireEntry> candidates{
        entry_with(11, {1.0f}), entry_with(22, {1.0f}), entry_with(33, {1.0f})};
    PromptCatalog prompts;

    auto out_of_range = ScriptedChatBackend::from_records({ordered(
        "rerank", "{\"ranked_events\": [4], \"has_possible_event\": true}")});
    CHECK(thrown_message([&] {
              rerank(candidates, basic_belief(), park_env(), *out_of_range, prompts, 0);
          }).find("rerank index 4 outside 1..3") != std::string::npos);

    auto repeats = ScriptedChatBackend::from_records({ordered(
        "rerank", "{\"ranked_events\": [1, 1], \"has_possible_event\": true}")});
    CHECK(thrown_message([&] {
              rerank(candidates, basic_belief(), park_env(), *repeats, prompts, 0);
          }).find("rerank repeats index 1") != std::string::npos);

    auto contradictory = ScriptedChatBackend::from_records({ordered(
        "rerank", "{\"ranked_events\": [], \"has_possible_event\": true}")});
    CHECK(thrown_message([&] {
              rerank(candidates, basic_belief(), park_env(), *contradictory, prompts, 0);
          }).find("has_possible_event=true with empty ranking") != std::string::npos);

    auto any = ScriptedChatBackend::from_records({ordered(
        "rerank", "{\"ranked_events\": [], \"has_possible_event\": false}")});
    CHECK(thrown_message([&] {
              rerank({}, basic_belief(), park_env(), *any, prompts, 0);
          }).find("rerank expects 1..9 candidates, got 0") != std::string::npos);
    std::vector<DesireEntry> ten;
    for (std::uint64_t i = 1; i <= 10; ++i) ten.push_back(entry_with(i, {1.0f}));
    CHECK(thrown_message([&] {
              rerank(ten, basic_belief(), park_env(), *any, prompts, 0);
          }).find("got 10") != std::string::npos);
}

TEST_CASE("one perception step costs at most four chat calls") {
    auto backend = ScriptedChatBackend::from_records({
        ordered("hypothesis", "{\"event\": \"h0\"}"),
        ordered("hypothesis", "{\"event\": \"h1\"}"),
        ordered("hypothesis", "{\"event\": \"h2\"}"),
        ordered("rerank", "{\"ranked_events\": [1], \"has_possible_event\": true}"),
    });
    PromptCatalog prompts;
    CallLog log;
    const auto hypotheses =
        construct_hypotheses(basic_belief(), park_env(), *backend, prompts, 2, &log);

    DesirePool pool;
    pool.add(entry_with(1, one_hot(4, 0)));
    pool.add(entry_with(2, one_hot(4, 1)));
    MapEmbedBackend embedder(4);
    embedder.set("h0", one_hot(4, 0));
    embedder.set("h1", one_hot(4, 1));
    embedder.set("h2", one_hot(4, 2));
    const auto desires = retrieve_desires(hypotheses, pool, embedder);
    rerank(desires, basic_belief(), park_env(), *backend, prompts, 2, &log);
    CHECK(log.total_calls() == 4);
}

TEST_CASE("history and candidate renderings are stable prompt inputs") {
    CHECK(render_history({}) == "none");
    LifeEvent e;
    e.env = park_env();
    e.event_text = "Knee pain flared at the park.";
    CHECK(render_history({e}) ==
          "1. [2012-10-28 09:00:00, Sunday] Knee pain flared at the park.\n");

    DesireEntry d = entry_with(5, {1.0f});
    CHECK(render_candidates({d}) ==
          "1. Event: context 5 Intent: The user wants to do thing 5.\n");
}

TEST_CASE("life events round-trip through json") {
    LifeEvent e;
    e.env = park_env();
    e.env.weather = Weather{"clear", 14.0, 18.0, 9.0};
    e.event_text = "event";
    e.intention_text = "The user wants to rest.";
    e.source_desire_id = 12;
    e.trigger_prob = 0.625;
    const LifeEvent back = life_event_from_json(life_event_to_json(e));
    CHECK(back.env.time == e.env.time);
    CHECK(back.env.poi == e.env.poi);
    REQUIRE(back.env.weather.has_value());
    CHECK(back.env.weather->avg_c == 14.0);
    CHECK(back.event_text == e.event_text);
    CHECK(back.intention_text == e.intention_text);
    CHECK(back.source_desire_id == 12);
    CHECK(back.trigger_prob == 0.625);
    CHECK(life_event_to_json(back) == life_event_to_json(e));
}
