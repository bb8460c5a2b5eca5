#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "stochecon/cli/experiments.hpp"

namespace {

struct Subcommand {
    const char* name;
    const char* help;
    std::optional<stochecon::cli::ExperimentKind> kind;
};

}  // namespace

int main(int argc, char** argv)
{
    using stochecon::cli::ExperimentKind;
    const Subcommand subcommands[] = {
        {"equilibrium", "Expected and realized equilibrium prices", ExperimentKind::Equilibrium},
        {"entropy", "Economic entropy over a price grid", ExperimentKind::EntropySweep},
        {"tld", "Large-deviation rate check with naive and importance sampling", ExperimentKind::TldVerify},
        {"gcp", "Conditional law of characteristics against the canonical law", ExperimentKind::GcpVerify},
        {"survival", "Conditional non-survival proportion and composite entropy", ExperimentKind::Survival},
        {"clt", "Fluctuation variance against the entropy curvature", ExperimentKind::CltCompare},
        {"gas", "Ideal-gas closed forms against the generic engine", ExperimentKind::GasFixtures},
        {"validate", "Check a configuration without running it", std::nullopt},
    };

    CLI::App app{"Random equilibria, economic entropy and canonical laws"};
    app.set_version_flag("--version", stochecon::cli::kVersion);
    app.require_subcommand(1);

    stochecon::cli::RunRequest request;
    std::string config;
    std::uint64_t seed = 0, replicas = 0;
    std::string out;
    int threads = 0;

    for (const auto& sc : subcommands) {
        auto* cmd = app.add_subcommand(sc.name, sc.help);
        cmd->add_option("--config", config, "Experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--seed", seed, "Master seed (overrides params.seed)");
        cmd->add_option("--replicas", replicas, "Monte Carlo replicas (overrides params.replicas)");
        cmd->add_option("--threads", threads, "Worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
        cmd->add_option("--out", out, "Output directory (overrides output.dir)");
        cmd->add_flag("--quiet", request.quiet, "Only report errors");
        cmd->callback([&request, &sc, cmd, &config, &seed, &replicas, &out, &threads] {
            request.config = config;
            request.experiment = sc.kind;
            request.validate_only = !sc.kind.has_value();
            if (cmd->count("--seed")) {
                request.overrides.seed = seed;
            }
            if (cmd->count("--replicas")) {
                request.overrides.replicas = replicas;
            }
            if (cmd->count("--threads")) {
                request.overrides.threads = threads;
            }
            if (cmd->count("--out")) {
                request.overrides.out = out;
            }
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : stochecon::cli::kExitValidation;
    }
    return stochecon::cli::run(request, std::cout, std::cerr);
}
