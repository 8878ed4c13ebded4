#include "lagmc/report.hpp"
#include "lagmc/solver.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

int execute(const std::string& command, const std::string& path, const std::optional<std::uint64_t>& seed,
            const std::optional<std::string>& out) {
    using namespace lagmc;
    try {
        std::ifstream in(path);
        if (!in) {
            std::cerr << "lagmc: cannot read config " << path << "\n";
            return kExitConfig;
        }
        std::stringstream ss;
        ss << in.rdbuf();
        RunConfig cfg = parse_config(ss.str());
        if (to_string(*cfg.command) != command) {
            std::cerr << "lagmc: config is for '" << to_string(*cfg.command) << "', not '" << command << "'\n";
            return kExitConfig;
        }
        if (seed) cfg.seed = *seed;
        if (out) cfg.out = *out;
        const ReportBundle b = run(cfg);
        std::cout << b.summary;
        std::cout << (b.passed() ? "status: pass" : "status: fail") << " (" << b.directory << ")\n";
        return b.passed() ? kExitPass : kExitAssertion;
    } catch (const ConfigError& e) {
        std::cerr << "lagmc: config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ConvergenceFailure& e) {
        std::cerr << "lagmc: solver did not converge: " << e.what() << "\n";
        return kExitSolver;
    } catch (const InvalidArgument& e) {
        std::cerr << "lagmc: rejected: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "lagmc: " << e.what() << "\n";
        return kExitAssertion;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite-difference suites for the Lagrangian mean curvature equation"};
    app.set_version_flag("--version", lagmc::version_string());
    app.require_subcommand(1);
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    for (const char* name : {"solve", "verify-forms", "jacobi", "identities", "approx", "refine"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config, "INI run configuration")->required();
        sub->add_option("--seed", seed, "overrides [run] seed");
        sub->add_option("--out", out, "overrides [run] out");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : lagmc::kExitConfig;
    }
    return execute(app.get_subcommands().front()->get_name(), config, seed, out);
}
