#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lifesim/pipeline.hpp"

namespace {

int exit_code_for(const lifesim::Error& e) {
    switch (e.kind()) {
        case lifesim::ErrorKind::validation: return 1;
        case lifesim::ErrorKind::runtime: return 2;
        case lifesim::ErrorKind::backend_exhaustion: return 3;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"life-scale user simulation and assistant benchmark"};
    app.require_subcommand(1);

    std::string config_path;
    std::string stage = "all";
    std::uint64_t seed = 0;
    std::string out_dir;

    CLI::App* validate = app.add_subcommand("validate", "check a run config and exit");
    validate->add_option("--config", config_path, "config document")->required();

    CLI::App* run = app.add_subcommand("run", "run pipeline stages");
    run->add_option("--config", config_path, "config document")->required();
    run->add_option("--stage", stage, "stage name or 'all'")
        ->default_val(std::string("all"));
    run->add_option("--seed", seed, "override the config seed");
    run->add_option("--out", out_dir, "override the output directory");

    std::string base_url;
    std::string model;
    std::string endpoint_path = "/v1/chat/completions";
    CLI::App* ping = app.add_subcommand("ping", "send one probe request to a remote backend");
    ping->add_option("--base-url", base_url, "endpoint base url")->required();
    ping->add_option("--model", model, "model name")->required();
    ping->add_option("--path", endpoint_path, "chat completions path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            lifesim::validate_config(config_path);
            std::printf("config ok\n");
            return 0;
        }
        if (run->parsed()) {
            lifesim::ConfigOverrides overrides;
            if (run->count("--seed") > 0) overrides.seed = seed;
            if (run->count("--out") > 0) overrides.out = out_dir;
            lifesim::RunConfig cfg = lifesim::validate_config(config_path, overrides);
            std::vector<std::string> ran = lifesim::run_pipeline(cfg, stage);
            for (const std::string& name : lifesim::pipeline_stages()) {
                if (stage != "all" && name != stage) continue;
                const bool did = std::find(ran.begin(), ran.end(), name) != ran.end();
                std::printf("%-12s %s\n", name.c_str(), did ? "ran" : "skipped");
            }
            return 0;
        }
        if (ping->parsed()) {
            lifesim::RemoteBackendConfig rc;
            rc.base_url = base_url;
            rc.model = model;
            rc.path = endpoint_path;
            lifesim::RemoteChatBackend backend(rc);
            lifesim::ChatRequest req;
            req.messages = {{"user", "Reply with the single word: pong"}};
            req.tag = "ping";
            std::printf("%s\n", backend.chat(req).text.c_str());
            return 0;
        }
    } catch (const lifesim::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
