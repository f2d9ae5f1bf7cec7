#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lifesim/jsonl.hpp"
#include "lifesim/rng.hpp"

namespace lifesim {

struct UserProfile {
    std::string id;
    std::map<std::string, std::string> demographics;
    std::vector<std::string> traits;                    // Big Five descriptors
    std::map<std::string, std::string> preferences;     // dimension -> low|high
    std::string narrative;
};

// Paragraph form used in prompts; pure function of the fields.
std::string render_narrative(const UserProfile& p);

UserProfile profile_from_json(const Json& j);
Json profile_to_json(const UserProfile& p);

struct ProfilePool {
    std::vector<UserProfile> profiles;
};

ProfilePool load_profiles(const std::filesystem::path& path);

// attribute -> category -> target fraction (each attribute sums to 1)
using MarginalTargets = std::map<std::string, std::map<std::string, double>>;

struct IpfResult {
    std::vector<double> weights;          // normalized to sum 1
    double residual = 0.0;                // max abs marginal gap after the last sweep
    int iterations = 0;
    bool converged = false;
    std::vector<double> residual_history; // one value per completed sweep
};

IpfResult ipf_balance(const ProfilePool& pool, const MarginalTargets& targets,
                      int max_iters = 100, double tol = 1e-6);

std::vector<UserProfile> sample_users(const ProfilePool& pool,
                                      const std::vector<double>& weights, std::size_t n,
                                      std::uint64_t seed, bool with_replacement = false);

// Default fixture schema: 15 demographic attributes, 10 preference dimensions.
const std::vector<std::string>& demographic_attributes();
const std::vector<std::string>& preference_dimensions();

// Seeded synthetic pool over the fixture schema.
ProfilePool synth_profiles(std::size_t n, std::uint64_t seed);

}  // namespace lifesim
