#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lifesim/gateway.hpp"
#include "lifesim/prompts.hpp"

namespace lifesim {

inline constexpr std::array<std::string_view, 8> kThemes = {
    "Exercise & Fitness",   "Diet & Nutrition",        "Mental Health Counseling",
    "Parenting & Childcare", "Elderly Care",            "Learning & Education",
    "Travel & Tourism",      "Leisure & Entertainment"};

bool is_known_theme(std::string_view theme);

struct DesireTags {
    std::vector<std::string> keywords;
    std::string location;
    std::string time;
};

struct DesireEntry {
    std::uint64_t id = 0;
    std::string theme;
    std::string intent_text;                 // "The user wants to ..."
    std::vector<std::string> event_contexts; // 1..3 triggering events
    DesireTags tags;
    std::vector<float> embedding;            // unit norm
};

struct ScoredEntry {
    std::size_t index;
    double score;
};

double cosine(const std::vector<float>& a, const std::vector<float>& b);
void normalize_in_place(std::vector<float>& v);

class DesirePool {
public:
    // approximate=true switches retrieval to a hyperplane-hash index once the
    // pool exceeds 50k entries; below that the exact scan is always used.
    explicit DesirePool(bool approximate = false) : approximate_(approximate) {}

    void add(DesireEntry entry);  // normalizes the embedding, assigns id if 0
    const std::vector<DesireEntry>& entries() const { return entries_; }
    const std::map<std::string, std::size_t>& theme_counts() const { return theme_counts_; }
    std::size_t size() const { return entries_.size(); }

    // Top-k by cosine, descending; ties broken by lower entry id.
    std::vector<ScoredEntry> retrieve_embedding(const std::vector<float>& query,
                                                std::size_t k) const;
    std::vector<ScoredEntry> retrieve(std::string_view query_text, std::size_t k,
                                      EmbedBackend& embedder) const;

    void save(const std::filesystem::path& dir, const Json& provenance) const;
    static DesirePool load(const std::filesystem::path& dir, bool approximate = false);

private:
    void rebuild_hash_index() const;

    std::vector<DesireEntry> entries_;
    std::map<std::string, std::size_t> theme_counts_;
    bool approximate_ = false;

    mutable std::vector<std::uint64_t> hash_codes_;  // lazily built hyperplane signs
    mutable std::vector<std::vector<float>> hyperplanes_;
};

Json desire_to_json(const DesireEntry& e);
DesireEntry desire_from_json(const Json& j);

// LLM-backed build steps. All parse replies through the structured contract.
std::optional<DesireEntry> normalize_query(const std::string& raw_text,
                                           const std::string& theme, ChatBackend& backend,
                                           const PromptCatalog& prompts,
                                           int parse_retries = 2, CallLog* log = nullptr);

std::vector<std::string> generate_trigger_events(const DesireEntry& entry,
                                                 ChatBackend& backend,
                                                 const PromptCatalog& prompts,
                                                 int parse_retries = 2,
                                                 CallLog* log = nullptr);

DesireTags tag_entry(const DesireEntry& entry, ChatBackend& backend,
                     const PromptCatalog& prompts, int parse_retries = 2,
                     CallLog* log = nullptr);

// Keeps the earlier entry of any pair with cosine >= threshold.
std::vector<DesireEntry> dedup(const std::vector<DesireEntry>& entries, double threshold);

}  // namespace lifesim
