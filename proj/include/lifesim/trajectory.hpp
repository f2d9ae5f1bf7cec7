#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lifesim/gateway.hpp"
#include "lifesim/profile_pool.hpp"
#include "lifesim/prompts.hpp"
#include "lifesim/timeutil.hpp"

namespace lifesim {

struct Weather {
    std::string summary;
    double avg_c = 0.0;
    double high_c = 0.0;
    double low_c = 0.0;
};

struct Environment {
    Timestamp time;
    int tz_offset_min = 0;
    std::string poi;
    std::optional<Weather> weather;
};

// "[Time] 2012-10-28 13:18:40, Sunday\n[Location] City Park\n[Weather] ..."
std::string render_environment(const Environment& env);

struct Trajectory {
    std::string id;
    std::vector<Environment> checkins;  // non-decreasing in time
    std::string pseudo_profile;
    std::vector<float> embedding;  // of the pseudo profile, unit norm
};

struct IngestResult {
    std::vector<Trajectory> trajectories;  // sorted by id
    std::set<std::string> poi_registry;
    std::vector<std::string> rejects;  // one message per rejected record
};

// Tab-separated lines: user_id, poi, iso-timestamp[, zone-offset-minutes].
// When `registry` is non-empty it is closed: unknown POIs are rejected.
IngestResult ingest_checkins(const std::filesystem::path& path,
                             const std::set<std::string>& registry = {});

class WeatherSource {
public:
    virtual ~WeatherSource() = default;
    virtual std::optional<Weather> lookup(const std::string& location,
                                          const std::string& date) = 0;
};

// Fixture records: {"location": ..., "date": "YYYY-MM-DD", "summary": ...,
//                   "avg_c": ..., "high_c": ..., "low_c": ...}
class FileWeatherSource : public WeatherSource {
public:
    explicit FileWeatherSource(const std::filesystem::path& path);
    std::optional<Weather> lookup(const std::string& location,
                                  const std::string& date) override;

private:
    std::map<std::pair<std::string, std::string>, Weather> records_;
};

// Fills weather on every checkin; misses get summary "unknown". Returns the
// miss count.
std::size_t enrich_weather(Trajectory& traj, WeatherSource& source);

std::string pseudo_profile(const Trajectory& traj, ChatBackend& backend,
                           const PromptCatalog& prompts, int parse_retries = 2,
                           CallLog* log = nullptr);

// argmax over cosine(profile embedding, trajectory pseudo-profile embedding);
// ties broken by lowest trajectory id. Every trajectory needs an embedding.
std::size_t match_profile(const UserProfile& profile,
                          const std::vector<Trajectory>& trajectories,
                          EmbedBackend& embedder);

Json environment_to_json(const Environment& env);
Environment environment_from_json(const Json& j);

Json trajectory_to_json(const Trajectory& t);
Trajectory trajectory_from_json(const Json& j);

}  // namespace lifesim
