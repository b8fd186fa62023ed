#include <iostream>

#include <CLI11.hpp>

#include "stopside/cli.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Threshold solver for one-sided optimal stopping of one-dimensional diffusions"};
    app.require_subcommand(1);

    stopside::CliOptions opts;
    std::string method;
    std::string side;
    std::uint64_t seed = 0;
    double tol = 0.0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "Problem file (JSON)")->required();
        sub->add_option("--out", opts.out_path, "Write the JSON report here instead of stdout");
        sub->add_option("--csv", opts.csv_path, "Write plot-ready CSV samples here");
        sub->add_option("--method", method, "threshold or sufficient")
            ->check(CLI::IsMember({"threshold", "sufficient"}));
        sub->add_option("--side", side, "right or left")->check(CLI::IsMember({"right", "left"}));
        sub->add_option("--seed", seed, "Monte Carlo seed");
        sub->add_option("--tol", tol, "Smooth-fit matching tolerance (relative)");
    };

    auto* solve = app.add_subcommand("solve", "Solve a problem and print the report");
    add_common(solve);
    auto* oracle = app.add_subcommand("oracle", "Compare the solver with the ratio, chain and Monte Carlo oracles");
    add_common(oracle);
    auto* sweep = app.add_subcommand("sweep", "Solve across a parameter range and locate regime changes");
    add_common(sweep);
    stopside::SweepOptions sw;
    sweep->add_option("--param", sw.parameter, "alpha or a catalog parameter");
    sweep->add_option("--lo", sw.lo, "Range start")->required();
    sweep->add_option("--hi", sw.hi, "Range end")->required();
    sweep->add_option("--n", sw.n, "Number of rows");
    sweep->add_option("--target-x", sw.target_x, "Threshold value whose attainment is monitored");
    sweep->add_option("--bisect-tol", sw.bisect_tol, "Parameter resolution of located transitions");
    auto* catalog = app.add_subcommand("catalog", "List the built-in diffusions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 3;
    }

    if (*catalog)
        return stopside::cmd_catalog(std::cout);

    auto* used = app.get_subcommands().front();
    if (used->count("--method"))
        opts.method = method;
    if (used->count("--side"))
        opts.side = side;
    if (used->count("--seed"))
        opts.seed = seed;
    if (used->count("--tol"))
        opts.tol = tol;

    if (*solve)
        return stopside::cmd_solve(opts, std::cout, std::cerr);
    if (*oracle)
        return stopside::cmd_oracle(opts, std::cout, std::cerr);
    return stopside::cmd_sweep(opts, sw, std::cout, std::cerr);
}
