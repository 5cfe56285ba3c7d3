#include "itlab/errors.hpp"
#include "itlab/experiments.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

namespace {

void configure_logging()
{
    spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    spdlog::set_level(spdlog::level::info);
    const char* env = std::getenv("LAB_LOG");
    if (!env || !*env)
        return;
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept "off" when asked for
    if (level == spdlog::level::off && std::string(env) != "off")
        spdlog::warn("ignoring unknown LAB_LOG level '{}'", env);
    else
        spdlog::set_level(level);
}

} // namespace

int main(int argc, char** argv)
{
    configure_logging();

    CLI::App app{"Iterated learning experiments"};
    std::string kind;
    std::string config_path;
    std::string out_dir;
    std::string seeds;
    std::size_t jobs = 1;
    app.add_option("kind", kind, "mappings_census | bayes_il | krr | learning_speed | sem_il_sweep")->required();
    app.add_option("--config", config_path, "JSON config file")->required();
    app.add_option("--out", out_dir, "output directory")->required();
    app.add_option("--seeds", seeds, "seed range 0..14, list 0,3,7 or a single seed");
    app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    itlab::ExperimentConfig config;
    try {
        const itlab::ExperimentKind requested = itlab::experiment_kind_from_string(kind);
        nlohmann::json raw;
        try {
            raw = nlohmann::json::parse(itlab::read_text_file(config_path));
        } catch (const nlohmann::json::exception& e) {
            itlab::fail(itlab::ErrorCode::config_invalid, "config is not valid JSON: " + std::string(e.what()));
        }
        if (raw.is_object() && !raw.contains("kind"))
            raw["kind"] = kind;
        config = itlab::parse_experiment_config(raw);
        if (config.kind != requested)
            itlab::fail(itlab::ErrorCode::config_invalid,
                        "config kind " + std::string(itlab::to_string(config.kind)) + " does not match " + kind);
        if (!seeds.empty())
            config.seeds = itlab::parse_seed_list(seeds);
        config.output_dir = out_dir;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }

    try {
        spdlog::info("{}: {} seed(s), {} job(s) -> {}", kind, config.seeds.size(), jobs, out_dir);
        const itlab::RunManifest manifest = itlab::run_experiment(config, jobs);
        if (manifest.all_ok()) {
            spdlog::info("finished in {:.1f}s", manifest.duration_seconds);
            return 0;
        }
        std::size_t failed = 0;
        for (const auto& run : manifest.runs)
            failed += run.ok ? 0 : 1;
        spdlog::warn("{} of {} run(s) failed", failed, manifest.runs.size());
        return 2;
    } catch (const itlab::LabError& e) {
        spdlog::error("{}", e.what());
        return e.code() == itlab::ErrorCode::config_invalid ? 1 : 2;
    }
}
