#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "lifesim/desire_pool.hpp"
#include "lifesim/errors.hpp"
#include "lifesim/gateway.hpp"
#include "lifesim/rng.hpp"

using namespace lifesim;
namespace fs = std::filesystem;

namespace {

// Reference retrieval: score every entry, stable-sort by (score desc, id asc),
// truncate. The production scan must agree index for index.
std::vector<ScoredEntry> retrieve_reference(const DesirePool& pool,
                                            const std::vector<float>& query,
                                            std::size_t k) {
    std::vector<ScoredEntry> scored;
    for (std::size_t i = 0; i < pool.entries().size(); ++i)
        scored.push_back({i, cosine(query, pool.entries()[i].embedding)});
    std::sort(scored.begin(), scored.end(), [&](const ScoredEntry& a, const ScoredEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return pool.entries()[a.index].id < pool.entries()[b.index].id;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

// Reference dedup: keep an entry iff no earlier survivor is at least as close
// as the threshold.
std::vector<DesireEntry> dedup_reference(const std::vector<DesireEntry>& entries,
                                         double threshold) {
    std::vector<DesireEntry> out;
    for (const DesireEntry& e : entries) {
        bool duplicate = false;
        for (const DesireEntry& kept : out)
            if (cosine(e.embedding, kept.embedding) >= threshold) {
                duplicate = true;
                break;
            }
        if (!duplicate) out.push_back(e);
    }
    return out;
}

DesireEntry make_entry(std::uint64_t id, const std::string& intent,
                       std::vector<float> embedding,
                       const std::string& theme = "Exercise & Fitness") {
    DesireEntry e;
    e.id = id;
    e.theme = theme;
    e.intent_text = intent;
    e.event_contexts = {"a triggering moment"};
    e.embedding = std::move(embedding);
    return e;
}

std::vector<float> random_unit(StreamRng& rng, std::size_t dim) {
    std::vector<float> v(dim);
    double norm = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        v[i] = float(rng.gaussian());
        norm += double(v[i]) * v[i];
    }
    const float inv = float(1.0 / std::sqrt(norm));
    for (float& x : v) x *= inv;
    return v;
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

TEST_CASE("themes are a fixed taxonomy") {
    CHECK(kThemes.size() == 8);
    CHECK(is_known_theme("Exercise & Fitness"));
    CHECK(is_known_theme("Leisure & Entertainment"));
    CHECK_FALSE(is_known_theme("Sports"));
}

TEST_CASE("adding entries normalizes embeddings and assigns fresh ids") {
    DesirePool pool;
    pool.add(make_entry(0, "The user wants to run farther.", {3.0f, 0.0f, 0.0f}));
    pool.add(make_entry(0, "The user wants to eat better.", {0.0f, 2.0f, 0.0f},
                        "Diet & Nutrition"));
    REQUIRE(pool.size() == 2);
    CHECK(pool.entries()[0].id == 1);
    CHECK(pool.entries()[1].id == 2);
    CHECK(pool.entries()[0].embedding[0] == doctest::Approx(1.0f));
    CHECK(pool.theme_counts().at("Exercise & Fitness") == 1);
    CHECK(pool.theme_counts().at("Diet & Nutrition") == 1);

    pool.add(make_entry(10, "The user wants to sleep more.", {0.0f, 0.0f, 1.0f}));
    pool.add(make_entry(0, "The user wants to stretch.", {1.0f, 1.0f, 0.0f}));
    CHECK(pool.entries()[2].id == 10);
    CHECK(pool.entries()[3].id == 11);

    std::size_t total = 0;
    for (const auto& [theme, count] : pool.theme_counts()) total += count;
    CHECK(total == pool.size());
}

TEST_CASE("adding entries validates theme, contexts, and dimensions") {
    DesirePool pool;
    CHECK(thrown_message([&] {
              pool.add(make_entry(0, "x", {1.0f, 0.0f, 0.0f}, "Sports"));
          }).find("unknown theme: 'Sports'") != std::string::npos);

    DesireEntry no_context = make_entry(0, "x", {1.0f, 0.0f, 0.0f});
    no_context.event_contexts.clear();
    CHECK(thrown_message([&] { pool.add(no_context); })
              .find("1..3 event contexts, got 0") != std::string::npos);

    DesireEntry many = make_entry(0, "x", {1.0f, 0.0f, 0.0f});
    many.event_contexts = {"a", "b", "c", "d"};
    CHECK(thrown_message([&] { pool.add(many); }).find("got 4") != std::string::npos);

    DesireEntry bare = make_entry(0, "x", {});
    CHECK(thrown_message([&] { pool.add(bare); }).find("needs an embedding") !=
          std::string::npos);

    pool.add(make_entry(0, "x", {1.0f, 0.0f, 0.0f}));
    CHECK(thrown_message([&] { pool.add(make_entry(0, "y", {1.0f, 0.0f})); })
              .find("dimension drift") != std::string::npos);
}

TEST_CASE("retrieval returns the query's own entry first with a perfect score") {
    HashEmbedBackend embedder(32, 9);
    DesirePool pool;
    const std::vector<std::string> intents{
        "The user wants to run a faster 10k.",
        "The user wants to plan healthy lunches.",
        "The user wants to learn conversational Japanese.",
    };
    for (const std::string& text : intents)
        pool.add(make_entry(0, text, embedder.embed(text)));

    const auto hits = pool.retrieve(intents[1], 2, embedder);
    REQUIRE(hits.size() == 2);
    CHECK(pool.entries()[hits[0].index].intent_text == intents[1]);
    CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(hits[1].score < hits[0].score);
}

TEST_CASE("retrieval truncates to the pool size and is pure") {
    HashEmbedBackend embedder(16, 9);
    DesirePool pool;
    pool.add(make_entry(0, "a", embedder.embed("a")));
    pool.add(make_entry(0, "b", embedder.embed("b")));
    const auto all = pool.retrieve("query", 10, embedder);
    CHECK(all.size() == 2);
    CHECK(all[0].score >= all[1].score);
    const auto again = pool.retrieve("query", 10, embedder);
    REQUIRE(again.size() == all.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        CHECK(again[i].index == all[i].index);
        CHECK(again[i].score == all[i].score);
    }
    CHECK_THROWS_AS(DesirePool().retrieve_embedding({1.0f}, 3), ValidationError);
}

TEST_CASE("retrieval ties break toward the lower entry id") {
    DesirePool pool;
    pool.add(make_entry(7, "late twin", {1.0f, 0.0f}));
    pool.add(make_entry(3, "early twin", {1.0f, 0.0f}));
    const auto hits = pool.retrieve_embedding({1.0f, 0.0f}, 2);
    REQUIRE(hits.size() == 2);
    CHECK(pool.entries()[hits[0].index].id == 3);
    CHECK(pool.entries()[hits[1].index].id == 7);
    CHECK(hits[0].score == doctest::Approx(hits[1].score));
}

TEST_CASE("retrieval agrees with the reference scan at scale") {
    StreamRng rng = StreamRng::keyed(17, "retrieval_oracle");
    DesirePool pool;
    for (int i = 0; i < 1000; ++i)
        pool.add(make_entry(0, "intent " + std::to_string(i), random_unit(rng, 24)));
    for (int q = 0; q < 20; ++q) {
        const std::vector<float> query = random_unit(rng, 24);
        const auto got = pool.retrieve_embedding(query, 3);
        const auto want = retrieve_reference(pool, query, 3);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].index == want[i].index);
            CHECK(got[i].score == doctest::Approx(want[i].score).epsilon(1e-12));
        }
    }
}

TEST_CASE("dedup keeps the earlier of any near-duplicate pair") {
    std::vector<DesireEntry> entries;
    entries.push_back(make_entry(1, "first", {1.0f, 0.0f}));
    entries.push_back(make_entry(2, "copy of first", {1.0f, 0.0f}));
    entries.push_back(make_entry(3, "orthogonal", {0.0f, 1.0f}));
    const auto kept = dedup(entries, 0.95);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].id == 1);
    CHECK(kept[1].id == 3);

    const auto idempotent = dedup(kept, 0.95);
    REQUIRE(idempotent.size() == kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) CHECK(idempotent[i].id == kept[i].id);
}

TEST_CASE("dedup matches the reference filter on random pools") {
    StreamRng rng = StreamRng::keyed(23, "dedup_oracle");
    std::vector<DesireEntry> entries;
    for (int i = 0; i < 100; ++i) {
        std::vector<float> v = random_unit(rng, 6);
        // Make collisions likely: a third of the entries reuse an earlier
        // direction with a small nudge.
        if (i % 3 == 0 && !entries.empty()) {
            v = entries[std::size_t(rng.next_u64() % entries.size())].embedding;
            v[0] += 0.01f;
            double norm = 0.0;
            for (float x : v) norm += double(x) * x;
            for (float& x : v) x = float(x / std::sqrt(norm));
        }
        entries.push_back(make_entry(std::uint64_t(i + 1), "e" + std::to_string(i), v));
    }
    const auto got = dedup(entries, 0.95);
    const auto want = dedup_reference(entries, 0.95);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].id == want[i].id);
    CHECK(got.size() < entries.size());
}

TEST_CASE("normalize_query accepts valid intents verbatim") {
    auto backend = ScriptedChatBackend::from_records({ordered(
        "intent_normalize",
        "{\"is_valid_intent\": \"true\", \"intent\": \"The user wants to swim weekly.\"}")});
    PromptCatalog prompts;
    const auto entry = normalize_query("i wanna swim more", "Exercise & Fitness", *backend,
                                       prompts);
    REQUIRE(entry.has_value());
    CHECK(entry->intent_text == "The user wants to swim weekly.");
    CHECK(entry->theme == "Exercise & Fitness");
}

TEST_CASE("normalize_query filters ambiguous queries") {
    auto backend = ScriptedChatBackend::from_records(
        {ordered("intent_normalize", "{\"is_valid_intent\": false}")});
    PromptCatalog prompts;
    CHECK_FALSE(normalize_query("???", "Exercise & Fitness", *backend, prompts).has_value());
}

TEST_CASE("normalize_query rejects prose and drifting prefixes") {
    auto prose = ScriptedChatBackend::from_records(
        {ordered("intent_normalize", "Sure! The user seems to want to swim.")});
    PromptCatalog prompts;
    CHECK_THROWS_AS(
        normalize_query("swim", "Exercise & Fitness", *prose, prompts, 1),
        ParseError);

    auto drift = ScriptedChatBackend::from_records({ordered(
        "intent_normalize", "{\"is_valid_intent\": true, \"intent\": \"Swimming is nice.\"}")});
    CHECK(thrown_message([&] {
              normalize_query("swim", "Exercise & Fitness", *drift, prompts, 0);
          }).find("must begin 'The user wants to'") != std::string::npos);
}

TEST_CASE("trigger event generation insists on three distinct events") {
    PromptCatalog prompts;
    DesireEntry entry = make_entry(1, "The user wants to swim weekly.", {1.0f});

    auto good = ScriptedChatBackend::from_records(
        {ordered("trigger_events", "[\"a cramped desk day\", \"a hot afternoon\", \"a pool flyer\"]")});
    const auto events = generate_trigger_events(entry, *good, prompts);
    CHECK(events == std::vector<std::string>{"a cramped desk day", "a hot afternoon",
                                             "a pool flyer"});

    auto two = ScriptedChatBackend::from_records(
        {ordered("trigger_events", "[\"one\", \"two\"]")});
    CHECK(thrown_message([&] { generate_trigger_events(entry, *two, prompts, 0); })
              .find("expected 3 triggering events, got 2") != std::string::npos);

    auto dup = ScriptedChatBackend::from_records(
        {ordered("trigger_events", "[\"same\", \"same\", \"other\"]")});
    CHECK(thrown_message([&] { generate_trigger_events(entry, *dup, prompts, 0); })
              .find("distinctness violated") != std::string::npos);

    auto shapeless = ScriptedChatBackend::from_records(
        {ordered("trigger_events", "{\"events\": 3}")});
    CHECK(thrown_message([&] { generate_trigger_events(entry, *shapeless, prompts, 0); })
              .find("not an array") != std::string::npos);

    DesireEntry hollow = entry;
    hollow.intent_text.clear();
    CHECK(thrown_message([&] { generate_trigger_events(hollow, *good, prompts, 0); })
              .find("no intent text") != std::string::npos);
}

TEST_CASE("tagging stores the reply fields as-is") {
    PromptCatalog prompts;
    DesireEntry entry = make_entry(1, "The user wants to swim weekly.", {1.0f});

    auto good = ScriptedChatBackend::from_records({ordered(
        "tagging",
        "{\"keywords\": [\"swim\", \"habit\"], \"location\": \"pool\", \"time\": \"weekend\"}")});
    const DesireTags tags = tag_entry(entry, *good, prompts);
    CHECK(tags.keywords == std::vector<std::string>{"swim", "habit"});
    CHECK(tags.location == "pool");
    CHECK(tags.time == "weekend");

    auto empty_kw = ScriptedChatBackend::from_records({ordered(
        "tagging", "{\"keywords\": [], \"location\": \"pool\", \"time\": \"weekend\"}")});
    CHECK(tag_entry(entry, *empty_kw, prompts).keywords.empty());

    auto missing = ScriptedChatBackend::from_records(
        {ordered("tagging", "{\"keywords\": [], \"location\": \"pool\"}")});
    CHECK(thrown_message([&] { tag_entry(entry, *missing, prompts, 0); })
              .find("missing field 'time'") != std::string::npos);
}

TEST_CASE("pools round-trip through save and load") {
    StreamRng rng = StreamRng::keyed(29, "pool_roundtrip");
    DesirePool pool;
    for (int i = 0; i < 12; ++i) {
        DesireEntry e = make_entry(0, "The user wants to do thing " + std::to_string(i) + ".",
                                   random_unit(rng, 10),
                                   std::string(kThemes[std::size_t(i) % kThemes.size()]));
        e.tags.keywords = {"k" + std::to_string(i)};
        e.tags.location = "home";
        e.tags.time = "morning";
        pool.add(std::move(e));
    }

    const fs::path dir = fs::temp_directory_path() / "lifesim_pool_roundtrip";
    fs::remove_all(dir);
    pool.save(dir, provenance_record("feedbeef", 5));

    const DesirePool loaded = DesirePool::load(dir);
    REQUIRE(loaded.size() == pool.size());
    CHECK(loaded.theme_counts() == pool.theme_counts());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const DesireEntry& a = pool.entries()[i];
        const DesireEntry& b = loaded.entries()[i];
        CHECK(a.id == b.id);
        CHECK(a.theme == b.theme);
        CHECK(a.intent_text == b.intent_text);
        CHECK(a.event_contexts == b.event_contexts);
        CHECK(a.tags.keywords == b.tags.keywords);
        REQUIRE(a.embedding.size() == b.embedding.size());
        for (std::size_t d = 0; d < a.embedding.size(); ++d)
            CHECK(b.embedding[d] == doctest::Approx(a.embedding[d]).epsilon(1e-7));
    }

    // The embedding sidecar must stay in lockstep with the entry list.
    const fs::path matrix = dir / "embeddings.f32";
    const auto full = fs::file_size(matrix);
    fs::resize_file(matrix, full - 4);
    CHECK(thrown_message([&] { DesirePool::load(dir); }).find("truncated") !=
          std::string::npos);
}

TEST_CASE("desire entries round-trip through json without the embedding") {
    DesireEntry e = make_entry(4, "The user wants to nap.", {0.6f, 0.8f});
    e.tags.keywords = {"rest"};
    e.tags.location = "home";
    e.tags.time = "afternoon";
    const Json j = desire_to_json(e);
    CHECK_FALSE(j.contains("embedding"));
    const DesireEntry back = desire_from_json(j);
    CHECK(back.id == 4);
    CHECK(back.intent_text == e.intent_text);
    CHECK(back.tags.location == "home");
    CHECK(back.embedding.empty());
}
