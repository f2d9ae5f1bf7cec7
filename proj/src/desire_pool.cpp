#include "lifesim/desire_pool.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "lifesim/errors.hpp"
#include "lifesim/hash.hpp"
#include "lifesim/rng.hpp"

namespace lifesim {

bool is_known_theme(std::string_view theme) {
    for (auto t : kThemes)
        if (t == theme) return true;
    return false;
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size())
        throw ValidationError("cosine: dimension mismatch " + std::to_string(a.size()) +
                              " vs " + std::to_string(b.size()));
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += double(a[i]) * double(b[i]);
    return dot;  // inputs are unit vectors
}

void normalize_in_place(std::vector<float>& v) {
    double norm_sq = 0.0;
    for (float x : v) norm_sq += double(x) * double(x);
    if (norm_sq <= 0.0) throw ValidationError("cannot normalize zero vector");
    double inv = 1.0 / std::sqrt(norm_sq);
    for (float& x : v) x = static_cast<float>(double(x) * inv);
}

// ---------------------------------------------------------------------------
// DesirePool
// ---------------------------------------------------------------------------

void DesirePool::add(DesireEntry entry) {
    if (!is_known_theme(entry.theme))
        throw ValidationError("unknown theme: '" + entry.theme + "'");
    if (entry.event_contexts.empty() || entry.event_contexts.size() > 3)
        throw ValidationError("entry needs 1..3 event contexts, got " +
                              std::to_string(entry.event_contexts.size()));
    if (entry.embedding.empty()) throw ValidationError("entry needs an embedding");
    if (!entries_.empty() && entry.embedding.size() != entries_.front().embedding.size())
        throw ValidationError("embedding dimension drift in pool");
    normalize_in_place(entry.embedding);
    if (entry.id == 0) {
        std::uint64_t max_id = 0;
        for (const auto& e : entries_) max_id = std::max(max_id, e.id);
        entry.id = max_id + 1;
    }
    theme_counts_[entry.theme] += 1;
    entries_.push_back(std::move(entry));
    hash_codes_.clear();
}

namespace {

constexpr std::size_t kApproxThreshold = 50'000;
constexpr std::size_t kHashBits = 64;

int hamming(std::uint64_t a, std::uint64_t b) {
    return std::popcount(a ^ b);
}

std::uint64_t signature(const std::vector<float>& v,
                        const std::vector<std::vector<float>>& planes) {
    std::uint64_t code = 0;
    for (std::size_t b = 0; b < planes.size(); ++b) {
        double dot = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) dot += double(v[i]) * planes[b][i];
        if (dot >= 0.0) code |= (std::uint64_t{1} << b);
    }
    return code;
}

}  // namespace

void DesirePool::rebuild_hash_index() const {
    const std::size_t dim = entries_.front().embedding.size();
    hyperplanes_.assign(kHashBits, std::vector<float>(dim));
    StreamRng rng = StreamRng::keyed(0x9a5e, "lsh_planes");
    for (auto& plane : hyperplanes_)
        for (float& x : plane) x = static_cast<float>(rng.gaussian());
    hash_codes_.resize(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i)
        hash_codes_[i] = signature(entries_[i].embedding, hyperplanes_);
}

std::vector<ScoredEntry> DesirePool::retrieve_embedding(const std::vector<float>& query,
                                                        std::size_t k) const {
    if (entries_.empty()) throw ValidationError("retrieve on empty pool");

    auto rank_exact = [&](const std::vector<std::size_t>& candidates) {
        std::vector<ScoredEntry> scored;
        scored.reserve(candidates.size());
        for (std::size_t idx : candidates)
            scored.push_back({idx, cosine(query, entries_[idx].embedding)});
        std::sort(scored.begin(), scored.end(), [&](const ScoredEntry& a, const ScoredEntry& b) {
            if (a.score != b.score) return a.score > b.score;
            return entries_[a.index].id < entries_[b.index].id;
        });
        if (scored.size() > k) scored.resize(k);
        return scored;
    };

    if (!approximate_ || entries_.size() <= kApproxThreshold) {
        std::vector<std::size_t> all(entries_.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        return rank_exact(all);
    }

    if (hash_codes_.size() != entries_.size()) rebuild_hash_index();
    std::uint64_t qcode = signature(query, hyperplanes_);
    std::vector<std::pair<int, std::size_t>> by_hamming(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i)
        by_hamming[i] = {hamming(qcode, hash_codes_[i]), i};
    std::size_t shortlist = std::min(entries_.size(), std::max<std::size_t>(4 * k, 256));
    std::partial_sort(by_hamming.begin(), by_hamming.begin() + std::ptrdiff_t(shortlist),
                      by_hamming.end());
    std::vector<std::size_t> candidates(shortlist);
    for (std::size_t i = 0; i < shortlist; ++i) candidates[i] = by_hamming[i].second;
    return rank_exact(candidates);
}

std::vector<ScoredEntry> DesirePool::retrieve(std::string_view query_text, std::size_t k,
                                              EmbedBackend& embedder) const {
    std::vector<float> q = embedder.embed(query_text);
    normalize_in_place(q);
    return retrieve_embedding(q, k);
}

Json desire_to_json(const DesireEntry& e) {
    Json j;
    j["id"] = e.id;
    j["theme"] = e.theme;
    j["intent"] = e.intent_text;
    j["event_contexts"] = e.event_contexts;
    j["tags"] = {{"keywords", e.tags.keywords},
                 {"location", e.tags.location},
                 {"time", e.tags.time}};
    return j;
}

DesireEntry desire_from_json(const Json& j) {
    DesireEntry e;
    e.id = j.at("id").get<std::uint64_t>();
    e.theme = j.at("theme").get<std::string>();
    e.intent_text = j.at("intent").get<std::string>();
    for (const auto& c : j.at("event_contexts")) e.event_contexts.push_back(c);
    if (j.contains("tags")) {
        const Json& t = j.at("tags");
        for (const auto& kw : t.value("keywords", Json::array()))
            e.tags.keywords.push_back(kw);
        e.tags.location = t.value("location", "");
        e.tags.time = t.value("time", "");
    }
    return e;
}

void DesirePool::save(const std::filesystem::path& dir, const Json& provenance) const {
    std::filesystem::create_directories(dir);
    std::vector<Json> records;
    records.reserve(entries_.size());
    for (const auto& e : entries_) records.push_back(desire_to_json(e));
    write_jsonl(dir / "entries.jsonl", records);

    const std::size_t dim = entries_.empty() ? 0 : entries_.front().embedding.size();
    std::ofstream mat(dir / "embeddings.f32", std::ios::binary | std::ios::trunc);
    if (!mat) throw Error("cannot write " + (dir / "embeddings.f32").string());
    for (const auto& e : entries_)
        mat.write(reinterpret_cast<const char*>(e.embedding.data()),
                  std::streamsize(e.embedding.size() * sizeof(float)));

    Json meta = provenance;
    meta["count"] = entries_.size();
    meta["dim"] = dim;
    meta["theme_counts"] = theme_counts_;
    write_text_file(dir / "meta.json", meta.dump(2) + "\n");
}

DesirePool DesirePool::load(const std::filesystem::path& dir, bool approximate) {
    Json meta = Json::parse(read_text_file(dir / "meta.json"));
    const std::size_t count = meta.at("count").get<std::size_t>();
    const std::size_t dim = meta.at("dim").get<std::size_t>();

    std::ifstream mat(dir / "embeddings.f32", std::ios::binary);
    if (!mat) throw ValidationError("cannot open " + (dir / "embeddings.f32").string());

    DesirePool pool(approximate);
    std::size_t row = 0;
    for_each_jsonl(dir / "entries.jsonl", [&](std::size_t, const Json& j) {
        DesireEntry e = desire_from_json(j);
        e.embedding.resize(dim);
        mat.read(reinterpret_cast<char*>(e.embedding.data()),
                 std::streamsize(dim * sizeof(float)));
        if (!mat) throw ValidationError("embedding matrix truncated at row " +
                                        std::to_string(row));
        pool.add(std::move(e));
        ++row;
    });
    if (row != count)
        throw ValidationError("entry count " + std::to_string(row) +
                              " does not match meta count " + std::to_string(count));
    return pool;
}

// ---------------------------------------------------------------------------
// Build steps
// ---------------------------------------------------------------------------

namespace {

const std::string kNormalizeExamples =
    "### Example\n"
    "Question: \"my knees hurt every time I go for a run, what should I change\"\n"
    "-> is_valid_intent: true, intent: \"The user wants to relieve knee pain that "
    "appears during running.\"\n"
    "Question: \"write a python script that sorts a list\"\n"
    "-> is_valid_intent: false";

std::string as_bool_string(const Json& v) {
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_string()) return v.get<std::string>();
    throw ValidationError("expected boolean-like value, got " + v.dump());
}

}  // namespace

std::optional<DesireEntry> normalize_query(const std::string& raw_text,
                                           const std::string& theme, ChatBackend& backend,
                                           const PromptCatalog& prompts, int parse_retries,
                                           CallLog* log) {
    if (!is_known_theme(theme)) throw ValidationError("unknown theme: '" + theme + "'");
    ChatRequest req;
    req.tag = "intent_normalize";
    req.messages = {{"user", prompts.render("intent_normalize",
                                            {{"theme", theme},
                                             {"examples", kNormalizeExamples},
                                             {"content", raw_text}})}};
    Json j = chat_structured(backend, req, parse_retries,
                             [](const Json& v) {
                                 if (!v.is_object() || !v.contains("is_valid_intent"))
                                     throw ValidationError(
                                         "normalization reply missing is_valid_intent");
                             },
                             log);
    if (as_bool_string(j.at("is_valid_intent")) != "true") return std::nullopt;
    std::string intent = j.value("intent", "");
    if (intent.rfind("The user wants to", 0) != 0)
        throw ValidationError("normalized intent must begin 'The user wants to': '" +
                              intent + "'");
    DesireEntry e;
    e.theme = theme;
    e.intent_text = intent;
    return e;
}

std::vector<std::string> generate_trigger_events(const DesireEntry& entry,
                                                 ChatBackend& backend,
                                                 const PromptCatalog& prompts,
                                                 int parse_retries, CallLog* log) {
    if (entry.intent_text.empty()) throw ValidationError("entry has no intent text");
    ChatRequest req;
    req.tag = "trigger_events";
    req.messages = {{"user", prompts.render("trigger_events", {{"theme", entry.theme},
                                                               {"content", entry.intent_text}})}};
    Json j = chat_structured(backend, req, parse_retries, nullptr, log);
    if (!j.is_array()) throw ValidationError("trigger events reply is not an array");
    std::vector<std::string> events;
    for (const auto& item : j) events.push_back(item.get<std::string>());
    if (events.size() != 3)
        throw ValidationError("expected 3 triggering events, got " +
                              std::to_string(events.size()));
    std::set<std::string> uniq(events.begin(), events.end());
    if (uniq.size() != 3) throw ValidationError("triggering events: distinctness violated");
    return events;
}

DesireTags tag_entry(const DesireEntry& entry, ChatBackend& backend,
                     const PromptCatalog& prompts, int parse_retries, CallLog* log) {
    ChatRequest req;
    req.tag = "tagging";
    req.messages = {{"user", prompts.render("tagging",
                                            {{"event", entry.event_contexts.empty()
                                                           ? std::string("none")
                                                           : entry.event_contexts.front()},
                                             {"desire", entry.intent_text}})}};
    Json j = chat_structured(backend, req, parse_retries, nullptr, log);
    for (const char* field : {"keywords", "location", "time"})
        if (!j.contains(field))
            throw ValidationError(std::string("tag reply missing field '") + field + "'");
    DesireTags tags;
    for (const auto& kw : j.at("keywords")) tags.keywords.push_back(kw);
    tags.location = j.at("location").get<std::string>();
    tags.time = j.at("time").get<std::string>();
    return tags;
}

std::vector<DesireEntry> dedup(const std::vector<DesireEntry>& entries, double threshold) {
    std::vector<DesireEntry> survivors;
    for (const auto& e : entries) {
        bool dup = false;
        for (const auto& s : survivors)
            if (cosine(e.embedding, s.embedding) >= threshold) {
                dup = true;
                break;
            }
        if (!dup) survivors.push_back(e);
    }
    return survivors;
}

}  // namespace lifesim
