#include <CLI11.hpp>

#include "cli_app.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Delayed jump-diffusion simulation, pricing and convergence studies"};
    app.require_subcommand(1);

    sdde::cli::RunOptions opt;
    std::string config;
    std::string out = ".";
    std::uint64_t seed = 0;
    unsigned threads = 1;

    for (const char* name : {"simulate", "price", "table", "converge"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config, "JSON run configuration")->required();
        sub->add_option("--out", out, "output directory");
        sub->add_option("--seed", seed, "overrides the config seed");
        sub->add_option("--threads", threads, "worker threads; never changes results")->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return sdde::cli::kConfig;
    }

    const auto* sub = app.get_subcommands().front();
    opt.config_path = config;
    opt.out_dir = out;
    opt.threads = threads;
    if (sub->count("--seed") > 0) opt.seed = seed;
    return sdde::cli::dispatch(sub->get_name(), opt);
}
