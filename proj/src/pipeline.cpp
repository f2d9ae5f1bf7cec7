#include "lifesim/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "lifesim/desire_pool.hpp"
#include "lifesim/hash.hpp"
#include "lifesim/trajectory.hpp"

namespace lifesim {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

namespace {

fs::path resolve_path(const fs::path& base, const fs::path& p) {
    if (p.empty() || p.is_absolute()) return p;
    return base / p;
}

}  // namespace

RunConfig validate_config(const fs::path& path, const ConfigOverrides& overrides) {
    std::string raw;
    try {
        raw = read_text_file(path);
    } catch (const Error&) {
        throw ValidationError("config file not readable: " + path.string());
    }
    Json doc;
    try {
        doc = Json::parse(raw);
    } catch (const std::exception& e) {
        throw ValidationError("config is not valid JSON: " + std::string(e.what()));
    }

    std::vector<std::string> problems;
    RunConfig cfg;
    cfg.config_path = path;
    cfg.config_hash = hex64(fnv1a64(raw));
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");

    cfg.seed = doc.value("seed", std::uint64_t{0});
    cfg.out = resolve_path(base, doc.value("out", std::string("out")));

    const Json paths = doc.value("paths", Json::object());
    auto want_path = [&](const char* key, fs::path& dst, bool required) {
        std::string v = paths.value(key, std::string());
        if (v.empty()) {
            if (required) problems.push_back(std::string("missing path: paths.") + key);
            return;
        }
        dst = resolve_path(base, v);
        if (!fs::exists(dst))
            problems.push_back(std::string("paths.") + key +
                               " does not exist: " + dst.string());
    };
    want_path("queries", cfg.queries_path, true);
    want_path("profiles", cfg.profiles_path, true);
    want_path("checkins", cfg.checkins_path, true);
    want_path("weather", cfg.weather_path, false);
    want_path("targets", cfg.targets_path, false);

    const Json backends = doc.value("backends", Json::object());
    auto want_backend = [&](const std::string& label, const Json& spec_json,
                            BackendSpec& dst) {
        try {
            dst = parse_backend_spec(spec_json);
            if (dst.kind == "scripted") {
                dst.fixture_path = resolve_path(base, dst.fixture_path);
                if (!fs::exists(dst.fixture_path))
                    problems.push_back(label + " fixture does not exist: " +
                                       dst.fixture_path.string());
            }
        } catch (const Error& e) {
            problems.push_back(label + ": " + e.what());
        }
    };
    for (const char* key : {"user_model", "assistant"}) {
        if (!backends.contains(key)) {
            problems.push_back(std::string("missing backend spec: backends.") + key);
            continue;
        }
        want_backend(std::string("backends.") + key, backends.at(key),
                     key == std::string("user_model") ? cfg.user_model : cfg.assistant);
    }
    if (!backends.contains("judges") || !backends.at("judges").is_array() ||
        backends.at("judges").empty()) {
        problems.push_back("backends.judges must be a non-empty array");
    } else {
        const Json& judges = backends.at("judges");
        cfg.judges.resize(judges.size());
        for (std::size_t i = 0; i < judges.size(); ++i)
            want_backend("backends.judges[" + std::to_string(i) + "]", judges[i],
                         cfg.judges[i]);
    }

    const Json emb = doc.value("embedder", Json::object());
    cfg.embed_dim = emb.value("dim", std::size_t{64});
    cfg.embed_seed = emb.value("seed", std::uint64_t{0x5eed});
    if (cfg.embed_dim == 0) problems.push_back("embedder.dim must be >= 1");

    const Json proto = doc.value("protocol", Json::object());
    cfg.theta = proto.value("theta", 0.7);
    if (!(cfg.theta > 0.0 && cfg.theta < 1.0)) problems.push_back("θ out of range");
    cfg.max_turns = proto.value("max_turns", std::size_t{20});
    cfg.long_max_turns = proto.value("long_max_turns", std::size_t{3});
    if (cfg.max_turns == 0) problems.push_back("protocol.max_turns must be >= 1");
    if (cfg.long_max_turns == 0) problems.push_back("protocol.long_max_turns must be >= 1");

    const Json trig = proto.value("trigger", Json::object());
    cfg.trigger.scale = trig.value("scale", 1.0);
    cfg.trigger.offset = trig.value("offset", 0.0);
    cfg.trigger.dt_unit = trig.value("dt_unit", std::string("days"));
    if (cfg.trigger.scale <= 0.0) problems.push_back("trigger.scale must be > 0");
    try {
        dt_unit_seconds(cfg.trigger);
    } catch (const Error& e) {
        problems.push_back(e.what());
    }

    cfg.dedup_threshold = proto.value("dedup_threshold", 0.9);
    if (!(cfg.dedup_threshold > 0.0 && cfg.dedup_threshold <= 1.0))
        problems.push_back("dedup_threshold must lie in (0,1]");
    cfg.users = proto.value("users", std::size_t{10});
    if (cfg.users == 0) problems.push_back("protocol.users must be >= 1");
    cfg.max_events = proto.value("max_events", std::size_t{10});
    cfg.max_points = proto.value("max_points", std::size_t{0});
    cfg.threads = proto.value("threads", std::size_t{1});
    cfg.parse_retries = proto.value("parse_retries", 2);
    if (cfg.parse_retries < 0) problems.push_back("parse_retries must be >= 0");

    if (overrides.seed) cfg.seed = *overrides.seed;
    if (overrides.out) cfg.out = *overrides.out;

    if (!problems.empty()) {
        std::string msg = "config invalid:";
        for (const std::string& p : problems) msg += "\n  - " + p;
        throw ValidationError(msg);
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Stage plumbing
// ---------------------------------------------------------------------------

namespace {

// Loader failures surface with the offending file in the message.
template <typename F>
auto named(const fs::path& file, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        std::string msg = e.what();
        if (msg.find(file.string()) == std::string::npos)
            throw Error(file.string() + ": " + msg, e.kind());
        throw;
    }
}

std::string params_key(const RunConfig& cfg) {
    return cfg.config_hash + ":" + std::to_string(cfg.seed);
}

fs::path stamp_path(const RunConfig& cfg, const std::string& stage) {
    return cfg.out / ".stamps" / (stage + ".json");
}

bool stamp_matches(const RunConfig& cfg, const std::string& stage) {
    const fs::path sp = stamp_path(cfg, stage);
    if (!fs::exists(sp)) return false;
    Json j;
    try {
        j = Json::parse(read_text_file(sp));
    } catch (...) {
        return false;
    }
    if (j.value("params", "") != params_key(cfg)) return false;
    if (!j.contains("files") || !j.at("files").is_object()) return false;
    for (const auto& [file, digest] : j.at("files").items()) {
        if (!digest.is_string()) return false;
        try {
            if (hex64(hash_file(file)) != digest.get<std::string>()) return false;
        } catch (...) {
            return false;
        }
    }
    return true;
}

void write_stamp(const RunConfig& cfg, const std::string& stage,
                 const std::vector<fs::path>& inputs,
                 const std::vector<fs::path>& outputs) {
    Json files = Json::object();
    for (const fs::path& p : inputs)
        if (!p.empty()) files[p.string()] = hex64(hash_file(p));
    for (const fs::path& p : outputs) files[p.string()] = hex64(hash_file(p));
    Json j{{"stage", stage}, {"params", params_key(cfg)}, {"files", files}};
    write_text_file(stamp_path(cfg, stage), j.dump(2) + "\n");
}

void add_backend_inputs(const RunConfig& cfg, std::vector<fs::path>& inputs,
                        bool with_assistant, bool with_judges) {
    if (cfg.user_model.kind == "scripted") inputs.push_back(cfg.user_model.fixture_path);
    if (with_assistant && cfg.assistant.kind == "scripted")
        inputs.push_back(cfg.assistant.fixture_path);
    if (with_judges)
        for (const BackendSpec& spec : cfg.judges)
            if (spec.kind == "scripted") inputs.push_back(spec.fixture_path);
}

std::vector<fs::path> dir_files(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::exists(dir)) return out;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file()) out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t resolved_threads(const RunConfig& cfg, std::size_t n_units) {
    std::size_t n = cfg.threads == 0
                        ? std::max<std::size_t>(1, std::thread::hardware_concurrency())
                        : cfg.threads;
    return std::max<std::size_t>(1, std::min(n, n_units));
}

// Runs fn(i) for i in [0, n) across the configured worker count. The first
// exception wins and is rethrown on the caller's thread.
void parallel_for(const RunConfig& cfg, std::size_t n,
                  const std::function<void(std::size_t)>& fn) {
    const std::size_t n_threads = resolved_threads(cfg, n);
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
    worker();
    for (std::thread& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::uint64_t unit_seed(const RunConfig& cfg, const std::string& unit_id) {
    return fnv1a64_mix(fnv1a64(unit_id), cfg.seed);
}

// ---------------------------------------------------------------------------
// Stage bodies. Each returns the artifact files it wrote.
// ---------------------------------------------------------------------------

std::vector<fs::path> stage_pool(const RunConfig& cfg, CallLog* log) {
    auto backend = make_chat_backend(cfg.user_model);
    HashEmbedBackend embedder(cfg.embed_dim, cfg.embed_seed);
    PromptCatalog prompts;

    std::vector<DesireEntry> entries;
    named(cfg.queries_path, [&] {
        for_each_jsonl(cfg.queries_path, [&](std::size_t line, const Json& r) {
            if (is_provenance_record(r)) return;
            if (!r.contains("theme") || !r.contains("content"))
                throw ValidationError("line " + std::to_string(line) +
                                      ": query record needs theme and content");
            const std::string theme = r.at("theme").get<std::string>();
            if (!is_known_theme(theme))
                throw ValidationError("line " + std::to_string(line) +
                                      ": unknown theme '" + theme + "'");
            auto entry = normalize_query(r.at("content").get<std::string>(), theme,
                                         *backend, prompts, cfg.parse_retries, log);
            if (!entry) return;  // filtered as ambiguous
            entry->event_contexts = generate_trigger_events(*entry, *backend, prompts,
                                                            cfg.parse_retries, log);
            entry->tags = tag_entry(*entry, *backend, prompts, cfg.parse_retries, log);
            entry->embedding = embedder.embed(entry->intent_text);
            entries.push_back(std::move(*entry));
        });
        return 0;
    });

    DesirePool pool;
    for (DesireEntry& e : dedup(entries, cfg.dedup_threshold)) pool.add(std::move(e));
    if (pool.size() == 0) throw ValidationError("pool stage produced no desire entries");
    pool.save(cfg.out / "pool", provenance_record(cfg.config_hash, cfg.seed));
    return {cfg.out / "pool" / "entries.jsonl", cfg.out / "pool" / "embeddings.f32",
            cfg.out / "pool" / "meta.json"};
}

std::vector<fs::path> stage_trajectories(const RunConfig& cfg, CallLog* log) {
    IngestResult ingest =
        named(cfg.checkins_path, [&] { return ingest_checkins(cfg.checkins_path); });
    if (ingest.trajectories.empty())
        throw ValidationError(cfg.checkins_path.string() + ": no usable check-ins");

    auto backend = make_chat_backend(cfg.user_model);
    HashEmbedBackend embedder(cfg.embed_dim, cfg.embed_seed);
    PromptCatalog prompts;
    std::optional<FileWeatherSource> weather;
    if (!cfg.weather_path.empty())
        weather.emplace(named(cfg.weather_path, [&] { return FileWeatherSource(cfg.weather_path); }));

    std::vector<Json> records{provenance_record(cfg.config_hash, cfg.seed)};
    for (Trajectory& traj : ingest.trajectories) {
        if (weather) enrich_weather(traj, *weather);
        traj.pseudo_profile =
            pseudo_profile(traj, *backend, prompts, cfg.parse_retries, log);
        records.push_back(trajectory_to_json(traj));
    }
    write_jsonl(cfg.out / "trajectories.jsonl", records);

    std::string rejects;
    for (const std::string& r : ingest.rejects) rejects += r + "\n";
    write_text_file(cfg.out / "trajectory_rejects.txt", rejects);
    return {cfg.out / "trajectories.jsonl", cfg.out / "trajectory_rejects.txt"};
}

std::vector<Trajectory> load_trajectories(const RunConfig& cfg, EmbedBackend& embedder) {
    const fs::path path = cfg.out / "trajectories.jsonl";
    std::vector<Trajectory> out;
    named(path, [&] {
        for (const Json& r : read_jsonl(path)) {
            if (is_provenance_record(r)) continue;
            Trajectory t = trajectory_from_json(r);
            if (t.pseudo_profile.empty())
                throw ValidationError("trajectory " + t.id + " has no pseudo profile");
            t.embedding = embedder.embed(t.pseudo_profile);
            out.push_back(std::move(t));
        }
        return 0;
    });
    if (out.empty()) throw ValidationError(path.string() + ": no trajectories");
    return out;
}

std::vector<UserProfile> load_sampled_users(const RunConfig& cfg) {
    const fs::path path = cfg.out / "users.jsonl";
    std::vector<UserProfile> users;
    named(path, [&] {
        for (const Json& r : read_jsonl(path)) {
            if (is_provenance_record(r)) continue;
            users.push_back(profile_from_json(r));
        }
        return 0;
    });
    if (users.empty()) throw ValidationError(path.string() + ": no sampled users");
    return users;
}

std::vector<fs::path> stage_events(const RunConfig& cfg, CallLog* log) {
    ProfilePool profiles =
        named(cfg.profiles_path, [&] { return load_profiles(cfg.profiles_path); });
    if (profiles.profiles.empty())
        throw ValidationError(cfg.profiles_path.string() + ": profile pool is empty");

    std::vector<double> weights;
    if (!cfg.targets_path.empty()) {
        MarginalTargets targets = named(cfg.targets_path, [&] {
            return Json::parse(read_text_file(cfg.targets_path)).get<MarginalTargets>();
        });
        weights = ipf_balance(profiles, targets).weights;
    } else {
        weights.assign(profiles.profiles.size(), 1.0 / double(profiles.profiles.size()));
    }
    std::vector<UserProfile> sampled =
        sample_users(profiles, weights, cfg.users, cfg.seed);

    std::vector<Json> user_records{provenance_record(cfg.config_hash, cfg.seed)};
    for (const UserProfile& u : sampled) user_records.push_back(profile_to_json(u));
    write_jsonl(cfg.out / "users.jsonl", user_records);

    HashEmbedBackend embedder(cfg.embed_dim, cfg.embed_seed);
    std::vector<Trajectory> trajectories = load_trajectories(cfg, embedder);
    DesirePool pool = named(cfg.out / "pool" / "entries.jsonl",
                            [&] { return DesirePool::load(cfg.out / "pool"); });
    auto base_backend = make_chat_backend(cfg.user_model);
    PromptCatalog prompts;

    EventEngineOptions eopts;
    eopts.trigger = cfg.trigger;
    eopts.max_points = cfg.max_points;
    eopts.max_events = cfg.max_events;
    eopts.parse_retries = cfg.parse_retries;

    std::vector<fs::path> outputs{cfg.out / "users.jsonl"};
    for (const UserProfile& u : sampled)
        outputs.push_back(cfg.out / "events" / (u.id + ".jsonl"));

    parallel_for(cfg, sampled.size(), [&](std::size_t i) {
        const UserProfile& user = sampled[i];
        auto chat = per_unit_backend(base_backend);
        const std::size_t traj_index = match_profile(user, trajectories, embedder);
        std::vector<LifeEvent> events = generate_life_trajectory(
            user, trajectories[traj_index].checkins, eopts, pool, *chat, embedder,
            prompts, unit_seed(cfg, user.id), log);
        std::vector<Json> records{provenance_record(cfg.config_hash, cfg.seed)};
        for (const LifeEvent& e : events) records.push_back(life_event_to_json(e));
        write_jsonl(cfg.out / "events" / (user.id + ".jsonl"), records);
    });
    return outputs;
}

std::vector<fs::path> stage_benchmark(const RunConfig& cfg, CallLog* log) {
    std::vector<UserProfile> users = load_sampled_users(cfg);
    DesirePool pool = named(cfg.out / "pool" / "entries.jsonl",
                            [&] { return DesirePool::load(cfg.out / "pool"); });
    std::map<std::uint64_t, std::string> themes;
    for (const DesireEntry& e : pool.entries()) themes[e.id] = e.theme;
    auto theme_of = [&](const LifeEvent& e) {
        auto it = themes.find(e.source_desire_id);
        return it == themes.end() ? std::string("unknown") : it->second;
    };

    auto base_backend = make_chat_backend(cfg.user_model);
    PromptCatalog prompts;

    struct UserScenarios {
        std::vector<Json> single;
        Json final_long;
        std::vector<Json> history;
        bool has_long = false;
    };
    std::vector<UserScenarios> per_user(users.size());

    parallel_for(cfg, users.size(), [&](std::size_t i) {
        const UserProfile& user = users[i];
        const fs::path events_path = cfg.out / "events" / (user.id + ".jsonl");
        std::vector<LifeEvent> events;
        named(events_path, [&] {
            for (const Json& r : read_jsonl(events_path)) {
                if (is_provenance_record(r)) continue;
                events.push_back(life_event_from_json(r));
            }
            return 0;
        });
        if (events.empty()) return;

        auto chat = per_unit_backend(base_backend);
        UserScenarios& slot = per_user[i];
        for (std::size_t k = 0; k < events.size(); ++k) {
            Scenario sc = make_scenario(user.id + "-e" + std::to_string(k + 1), user,
                                        events[k], theme_of(events[k]));
            build_checklist(sc, *chat, prompts, cfg.parse_retries, log);
            slot.single.push_back(scenario_to_json(sc));
        }

        slot.history.push_back(provenance_record(cfg.config_hash, cfg.seed));
        for (std::size_t k = 0; k + 1 < events.size(); ++k)
            slot.history.push_back(Json{{"event", events[k].event_text},
                                        {"intention", events[k].intention_text}});
        Scenario last = make_scenario(user.id + "-long", user, events.back(),
                                      theme_of(events.back()));
        build_checklist(last, *chat, prompts, cfg.parse_retries, log);
        last.history_ref = "histories/" + user.id + ".jsonl";
        slot.final_long = scenario_to_json(last);
        slot.has_long = true;
    });

    std::vector<Json> single{provenance_record(cfg.config_hash, cfg.seed)};
    std::vector<Json> long_bench{provenance_record(cfg.config_hash, cfg.seed)};
    std::vector<fs::path> outputs;
    for (std::size_t i = 0; i < users.size(); ++i) {
        UserScenarios& slot = per_user[i];
        for (Json& s : slot.single) single.push_back(std::move(s));
        if (!slot.has_long) continue;
        const fs::path hist_path = cfg.out / "histories" / (users[i].id + ".jsonl");
        write_jsonl(hist_path, slot.history);
        outputs.push_back(hist_path);
        long_bench.push_back(std::move(slot.final_long));
    }
    if (single.size() <= 1)
        throw ValidationError("benchmark stage produced no scenarios");
    write_jsonl(cfg.out / "benchmark.jsonl", single);
    write_jsonl(cfg.out / "benchmark_long.jsonl", long_bench);
    outputs.push_back(cfg.out / "benchmark.jsonl");
    outputs.push_back(cfg.out / "benchmark_long.jsonl");
    return outputs;
}

struct EvalSetting {
    std::string name;  // single | long_off | long_on
    bool long_horizon;
    bool memory;
};

const std::vector<EvalSetting>& eval_settings() {
    static const std::vector<EvalSetting> settings{{"single", false, false},
                                                   {"long_off", true, false},
                                                   {"long_on", true, true}};
    return settings;
}

Benchmark load_setting_benchmark(const RunConfig& cfg, const EvalSetting& setting) {
    const fs::path path =
        cfg.out / (setting.long_horizon ? "benchmark_long.jsonl" : "benchmark.jsonl");
    Benchmark bench = named(path, [&] { return load_benchmark(path.string()); });
    for (Scenario& sc : bench.scenarios)
        if (!sc.history_ref.empty() && fs::path(sc.history_ref).is_relative())
            sc.history_ref = (cfg.out / sc.history_ref).string();
    return bench;
}

EvalOptions eval_options(const RunConfig& cfg, const EvalSetting& setting) {
    EvalOptions opts;
    opts.max_turns = setting.long_horizon ? cfg.long_max_turns : cfg.max_turns;
    opts.theta = cfg.theta;
    opts.parse_retries = cfg.parse_retries;
    opts.seed = cfg.seed;
    opts.memory = setting.memory;
    opts.threads = cfg.threads;
    return opts;
}

std::vector<fs::path> stage_simulate(const RunConfig& cfg, CallLog* log) {
    auto user_model = make_chat_backend(cfg.user_model);
    auto assistant = make_chat_backend(cfg.assistant);
    HashEmbedBackend embedder(cfg.embed_dim, cfg.embed_seed);
    PromptCatalog prompts;

    std::vector<fs::path> outputs;
    for (const EvalSetting& setting : eval_settings()) {
        Benchmark bench = load_setting_benchmark(cfg, setting);
        const EvalOptions opts = eval_options(cfg, setting);
        const fs::path dir = cfg.out / "conversations" / setting.name;
        for (const Scenario& sc : bench.scenarios) {
            outputs.push_back(dir / (sc.id + ".jsonl"));
            outputs.push_back(dir / (sc.id + ".meta.json"));
        }
        parallel_for(cfg, bench.scenarios.size(), [&](std::size_t i) {
            const Scenario& sc = bench.scenarios[i];
            DialogueArtifacts art = simulate_scenario(sc, user_model, assistant, embedder,
                                                      prompts, opts, setting.long_horizon,
                                                      log);
            std::vector<Json> records{provenance_record(cfg.config_hash, cfg.seed)};
            for (Json& r : conversation_to_jsonl(art.conv)) records.push_back(std::move(r));
            write_jsonl(dir / (sc.id + ".jsonl"), records);
            Json meta{{"config_hash", cfg.config_hash},
                      {"seed", cfg.seed},
                      {"history_length", art.history_length},
                      {"memory_summaries", art.memory_summaries}};
            write_text_file(dir / (sc.id + ".meta.json"), meta.dump(2) + "\n");
        });
    }
    return outputs;
}

std::vector<fs::path> stage_evaluate(const RunConfig& cfg, CallLog* log) {
    auto assistant = make_chat_backend(cfg.assistant);
    std::vector<std::shared_ptr<ChatBackend>> judges;
    for (const BackendSpec& spec : cfg.judges) judges.push_back(make_chat_backend(spec));
    PromptCatalog prompts;

    std::vector<fs::path> outputs;
    for (const EvalSetting& setting : eval_settings()) {
        Benchmark bench = load_setting_benchmark(cfg, setting);
        const EvalOptions opts = eval_options(cfg, setting);
        const fs::path dir = cfg.out / "conversations" / setting.name;

        std::vector<ScenarioEval> results(bench.scenarios.size());
        parallel_for(cfg, bench.scenarios.size(), [&](std::size_t i) {
            const Scenario& sc = bench.scenarios[i];
            const fs::path conv_path = dir / (sc.id + ".jsonl");
            DialogueArtifacts art;
            art.conv = named(conv_path, [&] {
                return conversation_from_jsonl(read_jsonl(conv_path));
            });
            const fs::path meta_path = dir / (sc.id + ".meta.json");
            Json meta = named(meta_path,
                              [&] { return Json::parse(read_text_file(meta_path)); });
            art.history_length = meta.value("history_length", std::size_t{0});
            if (meta.contains("memory_summaries"))
                art.memory_summaries =
                    meta.at("memory_summaries").get<std::vector<std::string>>();
            results[i] = score_scenario(sc, art, assistant, judges, prompts, opts, log);
        });

        EvalReport report = assemble_report(std::move(results), judges, prompts, opts,
                                            setting.long_horizon, log);
        report.model = assistant->name();
        Json j = report_to_json(report);
        j["config_hash"] = cfg.config_hash;
        j["seed"] = cfg.seed;
        const fs::path out_path = cfg.out / ("eval_" + setting.name + ".json");
        write_text_file(out_path, j.dump(2) + "\n");
        outputs.push_back(out_path);
    }
    return outputs;
}

std::vector<fs::path> stage_report(const RunConfig& cfg, CallLog*) {
    std::vector<EvalReport> reports;
    for (const EvalSetting& setting : eval_settings()) {
        const fs::path path = cfg.out / ("eval_" + setting.name + ".json");
        reports.push_back(named(path, [&] {
            return report_from_json(Json::parse(read_text_file(path)));
        }));
    }
    Json tables = emit_report_tables(reports);
    tables["config_hash"] = cfg.config_hash;
    tables["seed"] = cfg.seed;
    const fs::path out_path = cfg.out / "report" / "tables.json";
    write_text_file(out_path, tables.dump(2) + "\n");
    return {out_path};
}

std::vector<fs::path> stage_inputs(const RunConfig& cfg, const std::string& stage) {
    std::vector<fs::path> in;
    if (stage == "pool") {
        in.push_back(cfg.queries_path);
        add_backend_inputs(cfg, in, false, false);
    } else if (stage == "trajectories") {
        in.push_back(cfg.checkins_path);
        if (!cfg.weather_path.empty()) in.push_back(cfg.weather_path);
        add_backend_inputs(cfg, in, false, false);
    } else if (stage == "events") {
        in.push_back(cfg.profiles_path);
        if (!cfg.targets_path.empty()) in.push_back(cfg.targets_path);
        in.push_back(cfg.out / "trajectories.jsonl");
        for (const char* f : {"entries.jsonl", "embeddings.f32", "meta.json"})
            in.push_back(cfg.out / "pool" / f);
        add_backend_inputs(cfg, in, false, false);
    } else if (stage == "benchmark") {
        in.push_back(cfg.out / "users.jsonl");
        for (const fs::path& p : dir_files(cfg.out / "events")) in.push_back(p);
        for (const char* f : {"entries.jsonl", "embeddings.f32", "meta.json"})
            in.push_back(cfg.out / "pool" / f);
        add_backend_inputs(cfg, in, false, false);
    } else if (stage == "simulate") {
        in.push_back(cfg.out / "benchmark.jsonl");
        in.push_back(cfg.out / "benchmark_long.jsonl");
        for (const fs::path& p : dir_files(cfg.out / "histories")) in.push_back(p);
        add_backend_inputs(cfg, in, true, false);
    } else if (stage == "evaluate") {
        in.push_back(cfg.out / "benchmark.jsonl");
        in.push_back(cfg.out / "benchmark_long.jsonl");
        for (const fs::path& p : dir_files(cfg.out / "conversations")) in.push_back(p);
        add_backend_inputs(cfg, in, true, true);
    } else if (stage == "report") {
        for (const EvalSetting& s : eval_settings())
            in.push_back(cfg.out / ("eval_" + s.name + ".json"));
    }
    return in;
}

std::vector<fs::path> run_stage(const RunConfig& cfg, const std::string& stage,
                                CallLog* log) {
    if (stage == "pool") return stage_pool(cfg, log);
    if (stage == "trajectories") return stage_trajectories(cfg, log);
    if (stage == "events") return stage_events(cfg, log);
    if (stage == "benchmark") return stage_benchmark(cfg, log);
    if (stage == "simulate") return stage_simulate(cfg, log);
    if (stage == "evaluate") return stage_evaluate(cfg, log);
    return stage_report(cfg, log);
}

}  // namespace

const std::vector<std::string>& pipeline_stages() {
    static const std::vector<std::string> stages{
        "pool", "trajectories", "events", "benchmark", "simulate", "evaluate", "report"};
    return stages;
}

std::vector<std::string> run_pipeline(const RunConfig& cfg, const std::string& stage,
                                      CallLog* log) {
    std::vector<std::string> requested;
    if (stage == "all") {
        requested = pipeline_stages();
    } else if (std::find(pipeline_stages().begin(), pipeline_stages().end(), stage) !=
               pipeline_stages().end()) {
        requested.push_back(stage);
    } else {
        throw ValidationError("unknown stage '" + stage + "'");
    }

    std::vector<std::string> ran;
    for (const std::string& name : requested) {
        if (stamp_matches(cfg, name)) continue;
        std::vector<fs::path> outputs = run_stage(cfg, name, log);
        write_stamp(cfg, name, stage_inputs(cfg, name), outputs);
        ran.push_back(name);
    }
    return ran;
}

// ---------------------------------------------------------------------------
// Report tables
// ---------------------------------------------------------------------------

Json emit_report_tables(const std::vector<EvalReport>& reports) {
    Json tables;

    Json aggregate = Json::array();
    for (const EvalReport& r : reports) {
        Json row{{"model", r.model},
                 {"setting", r.setting},
                 {"memory", r.memory_enabled},
                 {"scenarios", r.scenarios.size()},
                 {"excluded", r.excluded}};
        Json metrics = Json::object();
        for (const auto& [metric, value] : r.aggregates) metrics[metric] = value;
        row["metrics"] = std::move(metrics);
        aggregate.push_back(std::move(row));
    }
    tables["aggregate_metrics"] = std::move(aggregate);

    Json grid = Json::array();
    for (const EvalReport& r : reports)
        for (const auto& [length, metrics] : r.by_history_length) {
            Json row{{"model", r.model},
                     {"setting", r.setting},
                     {"memory", r.memory_enabled},
                     {"history_length", length}};
            for (const auto& [metric, value] : metrics) row[metric] = value;
            grid.push_back(std::move(row));
        }
    tables["completion_by_history_length"] = std::move(grid);

    Json relative = Json::array();
    for (const EvalReport& r : reports) {
        auto overall_it = r.aggregates.find("completion");
        if (overall_it == r.aggregates.end()) continue;
        const double overall = overall_it->second;
        auto push_row = [&](const std::string& kind, const std::string& category,
                            double category_mean) {
            relative.push_back(Json{{"model", r.model},
                                    {"setting", r.setting},
                                    {"memory", r.memory_enabled},
                                    {"category_kind", kind},
                                    {"category", category},
                                    {"metric", "completion"},
                                    {"mean", category_mean},
                                    {"relative", category_mean - overall}});
        };

        std::map<std::string, std::vector<double>> by_theme;
        for (const ScenarioEval& ev : r.scenarios) {
            if (ev.excluded || ev.theme.empty()) continue;
            auto it = ev.metrics.find("completion");
            if (it != ev.metrics.end()) by_theme[ev.theme].push_back(it->second);
        }
        for (const auto& [theme, values] : by_theme) push_row("theme", theme, mean(values));

        for (const char* kind : {"explicit", "implicit"}) {
            auto it = r.aggregates.find(std::string("completion_") + kind);
            if (it != r.aggregates.end()) push_row("intent_type", kind, it->second);
        }
    }
    tables["relative_performance"] = std::move(relative);
    return tables;
}

}  // namespace lifesim
