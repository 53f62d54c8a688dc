// qcontract: command-line front end

#include "qcontract/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    qcontract::RunConfig cfg;
    CLI::App app{"Quantum f-divergences and SDPI contraction coefficients of channels", "qcontract"};
    app.require_subcommand(1);

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--channel", cfg.channel, "channel-spec JSON file");
        sub->add_option("--rho", cfg.rho, "state JSON file");
        sub->add_option("--sigma", cfg.sigma, "reference state JSON file");
        sub->add_option("--f", cfg.fs, "f generator names (kl, chi2, hellinger)");
        sub->add_option("--g", cfg.gs, "g function names (max, kmb, wy, gns)");
        sub->add_option("--family", cfg.families, "divergence families (HT, Petz, Matsumoto)");
        sub->add_option("--n-max", cfg.n_max, "largest channel power")->check(CLI::Range(1, 32));
        sub->add_option("--seed", cfg.seed, "master seed for the variational search");
        sub->add_option("--restarts", cfg.restarts, "variational restarts")->check(CLI::PositiveNumber);
        sub->add_option("--slack", cfg.slack, "slack for asymptotic verdicts");
        sub->add_option("--format", cfg.format, "output format")
            ->check(CLI::IsMember({"json", "csv", "text"}));
        sub->add_option("--out", cfg.out, "output path (default stdout)");
    };
    for (const char* name : {"divergence", "sdpi", "db-check", "experiment", "catalog"}) {
        CLI::App* sub = app.add_subcommand(name);
        add_common(sub);
        sub->callback([&cfg, name] { cfg.command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // help requests exit 0; every other parse failure is an input error
        return app.exit(e) == 0 ? 0 : 2;
    }
    return qcontract::run(cfg, std::cout, std::cerr);
}
