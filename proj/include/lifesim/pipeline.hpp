#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lifesim/eval_harness.hpp"
#include "lifesim/event_engine.hpp"

namespace lifesim {

struct RunConfig {
    std::uint64_t seed = 0;
    std::filesystem::path out;

    std::filesystem::path queries_path;   // raw desire queries: {"theme", "content"}
    std::filesystem::path profiles_path;  // user profile pool (JSONL)
    std::filesystem::path checkins_path;  // check-in TSV
    std::filesystem::path weather_path;   // optional weather fixture
    std::filesystem::path targets_path;   // optional marginal targets for balancing

    BackendSpec user_model;  // simulator + dataset construction
    BackendSpec assistant;   // system under test
    std::vector<BackendSpec> judges;

    std::size_t embed_dim = 64;
    std::uint64_t embed_seed = 0x5eed;

    double theta = 0.7;
    std::size_t max_turns = 20;      // single-scenario cap
    std::size_t long_max_turns = 3;  // long-horizon cap
    TriggerConfig trigger;
    double dedup_threshold = 0.9;
    std::size_t users = 10;
    std::size_t max_events = 10;
    std::size_t max_points = 0;  // 0 = every environment point
    std::size_t threads = 1;
    int parse_retries = 2;

    std::filesystem::path config_path;
    std::string config_hash;  // hex hash of the raw config document
};

struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
};

// Loads and fully resolves the config document. Relative paths resolve
// against the config file's directory. Reports every violation at once.
RunConfig validate_config(const std::filesystem::path& path,
                          const ConfigOverrides& overrides = {});

// Stage order: pool, trajectories, events, benchmark, simulate, evaluate, report.
const std::vector<std::string>& pipeline_stages();

// Runs one stage, or every stage in order when stage == "all". A stage whose
// recorded inputs and outputs are unchanged by content hash is skipped.
// Returns the names of the stages that actually ran.
std::vector<std::string> run_pipeline(const RunConfig& cfg, const std::string& stage,
                                      CallLog* log = nullptr);

// Flat tables from saved reports: per-model aggregate metrics, the
// completion-vs-history-length grid, and per-category relative performance
// (category mean minus overall mean).
Json emit_report_tables(const std::vector<EvalReport>& reports);

}  // namespace lifesim
