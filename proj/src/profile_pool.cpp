#include "lifesim/profile_pool.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "lifesim/errors.hpp"

namespace lifesim {

namespace {

const std::vector<std::string> kDemographics = {
    "age_band",       "gender",     "race",           "education",
    "residence_type", "income_level", "employment",   "marital_status",
    "religion",       "household_size", "has_children", "region",
    "chronic_condition", "exercise_freq", "tech_savviness"};

const std::vector<std::string> kPreferenceDims = {
    "need_for_structure",      "emotional_support_seeking", "communication_brevity",
    "novelty_seeking",         "autonomy_preference",       "social_engagement",
    "risk_tolerance",          "environmental_sensitivity", "planning_orientation",
    "frugality"};

const std::map<std::string, std::vector<std::string>> kCategories = {
    {"age_band", {"18-24", "25-34", "35-44", "45-54", "55-64", "65+"}},
    {"gender", {"female", "male", "nonbinary"}},
    {"race", {"Asian", "Black", "Hispanic", "White", "Mixed"}},
    {"education", {"high school", "bachelor", "master", "doctorate"}},
    {"residence_type", {"Cities", "Suburbs"}},
    {"income_level", {"High Income", "Low Income"}},
    {"employment", {"working", "not working", "student", "retired"}},
    {"marital_status", {"single", "married", "divorced", "widowed"}},
    {"religion", {"religious", "not religious"}},
    {"household_size", {"1", "2", "3", "4+"}},
    {"has_children", {"yes", "no"}},
    {"region", {"NYC", "Tokyo"}},
    {"chronic_condition", {"none", "mild", "managed"}},
    {"exercise_freq", {"rarely", "weekly", "daily"}},
    {"tech_savviness", {"low", "medium", "high"}}};

// One adjective pair per Big Five factor, low/high pole.
const std::vector<std::pair<std::string, std::string>> kTraitPoles = {
    {"conventional", "curious"},   {"spontaneous", "organized"},
    {"reserved", "outgoing"},      {"direct", "warm"},
    {"easygoing", "sensitive"}};

}  // namespace

const std::vector<std::string>& demographic_attributes() { return kDemographics; }
const std::vector<std::string>& preference_dimensions() { return kPreferenceDims; }

std::string render_narrative(const UserProfile& p) {
    auto get = [&](const std::string& key) -> std::string {
        auto it = p.demographics.find(key);
        return it == p.demographics.end() ? std::string("unspecified") : it->second;
    };
    std::string out = "[" + get("age_band") + "], " + get("race") + ", " + get("religion") +
                      ", " + get("residence_type") + ", " + get("income_level") + ", " +
                      get("employment") + ". Personality traits include: ";
    for (std::size_t i = 0; i < p.traits.size(); ++i) {
        if (i) out += ", ";
        out += p.traits[i];
    }
    out += ". Preferences expressed in daily life and communication include: ";
    bool first = true;
    for (const auto& [dim, level] : p.preferences) {
        if (!first) out += "; ";
        first = false;
        out += level + " " + dim;
    }
    out += ".";
    return out;
}

UserProfile profile_from_json(const Json& j) {
    UserProfile p;
    if (!j.contains("id") || !j.at("id").is_string())
        throw ValidationError("profile record missing id");
    p.id = j.at("id").get<std::string>();
    if (!j.contains("demographics") || !j.at("demographics").is_object() ||
        j.at("demographics").empty())
        throw ValidationError("profile " + p.id + ": demographics missing or empty");
    for (const auto& [k, v] : j.at("demographics").items())
        p.demographics[k] = v.get<std::string>();
    if (j.contains("traits"))
        for (const auto& t : j.at("traits")) p.traits.push_back(t.get<std::string>());
    if (j.contains("preferences"))
        for (const auto& [k, v] : j.at("preferences").items()) {
            std::string level = v.get<std::string>();
            if (level != "low" && level != "high")
                throw ValidationError("profile " + p.id + ": preference " + k +
                                      " must be low or high, got '" + level + "'");
            p.preferences[k] = level;
        }
    p.narrative = j.contains("narrative") ? j.at("narrative").get<std::string>()
                                          : render_narrative(p);
    return p;
}

Json profile_to_json(const UserProfile& p) {
    Json j;
    j["id"] = p.id;
    j["demographics"] = p.demographics;
    j["traits"] = p.traits;
    j["preferences"] = p.preferences;
    j["narrative"] = p.narrative;
    return j;
}

ProfilePool load_profiles(const std::filesystem::path& path) {
    ProfilePool pool;
    std::set<std::string> seen;
    for_each_jsonl(path, [&](std::size_t line_no, const Json& j) {
        UserProfile p;
        try {
            p = profile_from_json(j);
        } catch (const Error& e) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " +
                                  e.what());
        }
        if (!seen.insert(p.id).second)
            throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                                  ": duplicate profile id " + p.id);
        pool.profiles.push_back(std::move(p));
    });
    return pool;
}

IpfResult ipf_balance(const ProfilePool& pool, const MarginalTargets& targets,
                      int max_iters, double tol) {
    const std::size_t n = pool.profiles.size();
    if (n == 0) throw ValidationError("ipf: empty pool");

    for (const auto& [attr, dist] : targets) {
        double sum = 0.0;
        for (const auto& [cat, frac] : dist) {
            if (frac < 0.0)
                throw ValidationError("ipf: negative target for " + attr + "/" + cat);
            sum += frac;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw ValidationError("ipf: targets for " + attr + " sum to " +
                                  std::to_string(sum));
        for (const auto& p : pool.profiles)
            if (!p.demographics.count(attr))
                throw ValidationError("ipf: profile " + p.id + " lacks attribute " + attr);
        for (const auto& [cat, frac] : dist) {
            if (frac <= 0.0) continue;
            bool supported = false;
            for (const auto& p : pool.profiles)
                if (p.demographics.at(attr) == cat) {
                    supported = true;
                    break;
                }
            if (!supported)
                throw ValidationError("ipf: no pool support for target category " + attr +
                                      "/" + cat);
        }
    }

    IpfResult res;
    res.weights.assign(n, 1.0 / double(n));

    auto marginal = [&](const std::string& attr, const std::string& cat) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (pool.profiles[i].demographics.at(attr) == cat) m += res.weights[i];
        return m;
    };

    auto max_residual = [&]() {
        double r = 0.0;
        for (const auto& [attr, dist] : targets)
            for (const auto& [cat, frac] : dist)
                r = std::max(r, std::abs(marginal(attr, cat) - frac));
        return r;
    };

    for (int iter = 0; iter < max_iters; ++iter) {
        for (const auto& [attr, dist] : targets) {
            for (const auto& [cat, frac] : dist) {
                double cur = marginal(attr, cat);
                if (cur <= 0.0) continue;  // zero-support targets were rejected above
                double ratio = frac / cur;
                for (std::size_t i = 0; i < n; ++i)
                    if (pool.profiles[i].demographics.at(attr) == cat)
                        res.weights[i] *= ratio;
            }
        }
        double total = std::accumulate(res.weights.begin(), res.weights.end(), 0.0);
        for (double& w : res.weights) w /= total;
        res.iterations = iter + 1;
        res.residual = max_residual();
        res.residual_history.push_back(res.residual);
        if (res.residual <= tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

std::vector<UserProfile> sample_users(const ProfilePool& pool,
                                      const std::vector<double>& weights, std::size_t n,
                                      std::uint64_t seed, bool with_replacement) {
    if (weights.size() != pool.profiles.size())
        throw ValidationError("sample_users: weight count != pool size");
    if (!with_replacement && n > pool.profiles.size())
        throw ValidationError("sample_users: n exceeds pool size without replacement");

    StreamRng rng = StreamRng::keyed(seed, "sample_users");
    std::vector<UserProfile> out;
    out.reserve(n);
    if (with_replacement) {
        for (std::size_t i = 0; i < n; ++i)
            out.push_back(pool.profiles[rng.categorical(weights)]);
        return out;
    }
    std::vector<double> w = weights;
    std::vector<std::size_t> alive(pool.profiles.size());
    std::iota(alive.begin(), alive.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t pick = rng.categorical(w);
        out.push_back(pool.profiles[alive[pick]]);
        w.erase(w.begin() + std::ptrdiff_t(pick));
        alive.erase(alive.begin() + std::ptrdiff_t(pick));
    }
    return out;
}

ProfilePool synth_profiles(std::size_t n, std::uint64_t seed) {
    ProfilePool pool;
    pool.profiles.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        StreamRng rng = StreamRng::keyed(seed, "synth_profile", i);
        UserProfile p;
        p.id = "u" + std::to_string(i);
        for (const auto& attr : kDemographics) {
            const auto& cats = kCategories.at(attr);
            p.demographics[attr] =
                cats[std::size_t(rng.next_u64() % cats.size())];
        }
        for (const auto& [low, high] : kTraitPoles)
            p.traits.push_back(rng.bernoulli(0.5) ? high : low);
        for (const auto& dim : kPreferenceDims)
            p.preferences[dim] = rng.bernoulli(0.5) ? "high" : "low";
        p.narrative = render_narrative(p);
        pool.profiles.push_back(std::move(p));
    }
    return pool;
}

}  // namespace lifesim
