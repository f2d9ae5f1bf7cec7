#include "lifesim/trajectory.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lifesim/desire_pool.hpp"
#include "lifesim/errors.hpp"

namespace lifesim {

namespace {

std::string format_temp(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

}  // namespace

std::string render_environment(const Environment& env) {
    std::string out = "[Time] " + format_local_with_weekday(env.time, env.tz_offset_min) +
                      "\n[Location] " + env.poi;
    if (env.weather) {
        out += "\n[Weather] " + env.weather->summary + ", avg " +
               format_temp(env.weather->avg_c) + "\xC2\xB0""C (high " +
               format_temp(env.weather->high_c) + "\xC2\xB0""C, low " +
               format_temp(env.weather->low_c) + "\xC2\xB0""C)";
    }
    return out;
}

IngestResult ingest_checkins(const std::filesystem::path& path,
                             const std::set<std::string>& registry) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path.string());

    IngestResult result;
    std::map<std::string, std::vector<Environment>> grouped;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, '\t')) cols.push_back(col);
        if (cols.size() < 3) {
            result.rejects.push_back(path.string() + ":" + std::to_string(line_no) +
                                     ": expected user<TAB>poi<TAB>timestamp");
            continue;
        }
        const std::string& user = cols[0];
        const std::string& poi = cols[1];
        if (!registry.empty() && !registry.count(poi)) {
            result.rejects.push_back(path.string() + ":" + std::to_string(line_no) +
                                     ": unknown POI '" + poi + "'");
            continue;
        }
        Environment env;
        try {
            ParsedTimestamp ts = parse_iso8601(cols[2]);
            env.time = ts.ts;
            env.tz_offset_min = ts.tz_offset_min;
        } catch (const Error& e) {
            result.rejects.push_back(path.string() + ":" + std::to_string(line_no) + ": " +
                                     e.what());
            continue;
        }
        if (cols.size() >= 4 && !cols[3].empty()) env.tz_offset_min = std::stoi(cols[3]);
        env.poi = poi;
        grouped[user].push_back(env);
        result.poi_registry.insert(poi);
    }

    for (auto& [user, checkins] : grouped) {
        std::stable_sort(checkins.begin(), checkins.end(),
                         [](const Environment& a, const Environment& b) {
                             return a.time < b.time;
                         });
        Trajectory t;
        t.id = user;
        t.checkins = std::move(checkins);
        result.trajectories.push_back(std::move(t));
    }
    return result;
}

FileWeatherSource::FileWeatherSource(const std::filesystem::path& path) {
    for_each_jsonl(path, [&](std::size_t line_no, const Json& j) {
        for (const char* field : {"location", "date", "summary", "avg_c", "high_c", "low_c"})
            if (!j.contains(field))
                throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                                      ": weather record missing '" + field + "'");
        Weather w;
        w.summary = j.at("summary").get<std::string>();
        w.avg_c = j.at("avg_c").get<double>();
        w.high_c = j.at("high_c").get<double>();
        w.low_c = j.at("low_c").get<double>();
        if (w.high_c < w.low_c)
            throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                                  ": high below low");
        records_[{j.at("location").get<std::string>(), j.at("date").get<std::string>()}] = w;
    });
}

std::optional<Weather> FileWeatherSource::lookup(const std::string& location,
                                                 const std::string& date) {
    auto it = records_.find({location, date});
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

std::size_t enrich_weather(Trajectory& traj, WeatherSource& source) {
    std::size_t misses = 0;
    for (Environment& env : traj.checkins) {
        auto w = source.lookup(env.poi, format_local_date(env.time, env.tz_offset_min));
        if (w) {
            env.weather = *w;
        } else {
            env.weather = Weather{"unknown", 0.0, 0.0, 0.0};
            ++misses;
        }
    }
    return misses;
}

std::string pseudo_profile(const Trajectory& traj, ChatBackend& backend,
                           const PromptCatalog& prompts, int parse_retries, CallLog* log) {
    if (traj.checkins.empty()) throw ValidationError("empty trajectory: " + traj.id);
    std::string rendered;
    for (const Environment& env : traj.checkins) {
        rendered += format_local_with_weekday(env.time, env.tz_offset_min) + " @ " + env.poi;
        rendered += '\n';
    }
    static const std::string kExample =
        "Example: [25-34], Asian, not religious, Cities, High Income, working. "
        "Personality traits include: organized, outgoing. Preferences expressed in "
        "daily life and communication include: enjoys morning workouts; prefers "
        "concise suggestions.";
    ChatRequest req;
    req.tag = "pseudo_profile";
    req.messages = {{"user", prompts.render("pseudo_profile", {{"trajectory", rendered},
                                                               {"examples", kExample}})}};
    Json j = chat_structured(backend, req, parse_retries,
                             [](const Json& v) {
                                 if (!v.is_object() || !v.contains("profile") ||
                                     !v.at("profile").is_string())
                                     throw ValidationError("reply lacks a profile string");
                             },
                             log);
    return j.at("profile").get<std::string>();
}

std::size_t match_profile(const UserProfile& profile,
                          const std::vector<Trajectory>& trajectories,
                          EmbedBackend& embedder) {
    if (trajectories.empty()) throw ValidationError("no trajectories to match against");
    for (const Trajectory& t : trajectories)
        if (t.embedding.empty())
            throw ValidationError("trajectory " + t.id + " has no pseudo-profile embedding");

    std::vector<float> v = embedder.embed(profile.narrative);
    normalize_in_place(v);

    std::size_t best = 0;
    double best_score = cosine(v, trajectories[0].embedding);
    for (std::size_t i = 1; i < trajectories.size(); ++i) {
        double s = cosine(v, trajectories[i].embedding);
        if (s > best_score ||
            (s == best_score && trajectories[i].id < trajectories[best].id)) {
            best = i;
            best_score = s;
        }
    }
    return best;
}

Json environment_to_json(const Environment& env) {
    Json c;
    c["epoch_sec"] = env.time.epoch_sec;
    c["tz_offset_min"] = env.tz_offset_min;
    c["poi"] = env.poi;
    if (env.weather)
        c["weather"] = {{"summary", env.weather->summary},
                        {"avg_c", env.weather->avg_c},
                        {"high_c", env.weather->high_c},
                        {"low_c", env.weather->low_c}};
    return c;
}

Environment environment_from_json(const Json& c) {
    Environment env;
    env.time.epoch_sec = c.at("epoch_sec").get<std::int64_t>();
    env.tz_offset_min = c.at("tz_offset_min").get<int>();
    env.poi = c.at("poi").get<std::string>();
    if (c.contains("weather")) {
        const Json& w = c.at("weather");
        env.weather = Weather{w.at("summary").get<std::string>(),
                              w.at("avg_c").get<double>(), w.at("high_c").get<double>(),
                              w.at("low_c").get<double>()};
    }
    return env;
}

Json trajectory_to_json(const Trajectory& t) {
    Json j;
    j["id"] = t.id;
    j["checkins"] = Json::array();
    for (const Environment& env : t.checkins) j["checkins"].push_back(environment_to_json(env));
    if (!t.pseudo_profile.empty()) j["pseudo_profile"] = t.pseudo_profile;
    return j;
}

Trajectory trajectory_from_json(const Json& j) {
    Trajectory t;
    t.id = j.at("id").get<std::string>();
    for (const Json& c : j.at("checkins")) t.checkins.push_back(environment_from_json(c));
    t.pseudo_profile = j.value("pseudo_profile", "");
    return t;
}

}  // namespace lifesim
