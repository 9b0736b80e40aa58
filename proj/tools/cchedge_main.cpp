// cchedge --config run.json --command simulate --out out/ --seed 7 [--segment calm]

#include "cchedge/cli.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Option pricing, calibration, scenario simulation and hedging pipeline"};
    cchedge::CliOptions opts;
    std::string config, out;
    std::uint64_t seed = 0;
    std::string segment, model, strategy;
    app.add_option("--config", config, "JSON experiment config")->required();
    app.add_option("--command", opts.command, "fit-surface | calibrate | simulate | hedge | backtest | report")
        ->required();
    app.add_option("--out", out, "output directory")->required();
    auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides the config)");
    auto* seg_opt = app.add_option("--segment", segment, "only this segment");
    auto* model_opt = app.add_option("--model", model, "only this model family (BS, SV, SVCJ, ...)");
    auto* strat_opt = app.add_option("--strategy", strategy, "only this strategy");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }
    opts.config = config;
    opts.out = out;
    if (*seed_opt) opts.seed = seed;
    if (*seg_opt) opts.segment = segment;
    if (*model_opt) opts.model = model;
    if (*strat_opt) opts.strategy = strategy;
    return cchedge::run_command(opts, std::cout, std::cerr);
}
