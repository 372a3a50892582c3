#include <CLI11.hpp>
#include <cstdio>
#include <string>

#include "ate/errors.hpp"
#include "ate/parallel.hpp"
#include "ate/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Treatment-effect estimation for observational studies"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::uint64_t seed_override = 0;
    bool have_seed = false;
    int threads = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--out", out_override, "output directory (overrides config)");
        sub->add_option("--seed", seed_override, "seed (overrides config)")
            ->each([&](const std::string&) { have_seed = true; });
        sub->add_option("--threads", threads,
                        "worker threads (default: ATE_THREADS or all cores)");
    };

    CLI::App* estimate = app.add_subcommand("estimate", "run the selected estimators");
    CLI::App* gof = app.add_subcommand("gof", "goodness-of-fit tests with bootstrap");
    CLI::App* simulate = app.add_subcommand("simulate", "recovery simulation study");
    CLI::App* power = app.add_subcommand("power", "goodness-of-fit power study");
    for (CLI::App* sub : {estimate, gof, simulate, power}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    std::string command;
    for (CLI::App* sub : {estimate, gof, simulate, power}) {
        if (sub->parsed()) command = sub->get_name();
    }

    try {
        ate::RunConfig config = ate::load_config(config_path);
        if (!out_override.empty()) config.out_dir = out_override;
        if (have_seed) config.seed = seed_override;
        if (threads > 0) {
            config.threads = threads;
        } else if (config.threads <= 0) {
            config.threads = ate::default_threads();
        }
        return ate::run(config, command);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
