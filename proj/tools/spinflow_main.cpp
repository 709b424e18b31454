#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "spinflow/config.hpp"
#include "spinflow/diagrams.hpp"
#include "spinflow/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBudget = 3;
constexpr int kExitNumeric = 4;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spinflow: iterative quasi-local diagonalization of disordered spin chains"};
    app.require_subcommand(1);

    std::string config_path;
    std::string outdir_flag;
    std::vector<std::string> overrides;
    app.add_option("--config,-c", config_path, "config file ([section] key = value)");
    app.add_option("--out,-o", outdir_flag, "output directory (overrides experiment.outdir)");
    app.add_option("--set,-D", overrides, "override of the form section.key=value")
        ->take_all();

    const std::vector<std::string> names = {"flow",          "liom-profile",   "resonance-scan",
                                            "diagram-count", "transport-sweep", "lemma-checks"};
    for (const std::string& n : names) app.add_subcommand(n);

    CLI11_PARSE(app, argc, argv);
    std::string sub = app.get_subcommands().front()->get_name();

    try {
        spinflow::RunConfig cfg;
        if (!config_path.empty()) cfg.apply_file(config_path);
        for (const std::string& ov : overrides) cfg.apply_override(ov);
        std::string outdir = cfg.experiment_outdir + "/" + sub;
        if (const char* env = std::getenv("SPINFLOW_OUT")) outdir = env;
        if (!outdir_flag.empty()) outdir = outdir_flag;
        spinflow::run_experiment(cfg, sub, outdir);
        std::cout << sub << ": ok, outputs in " << outdir << "\n";
        return kExitOk;
    } catch (const spinflow::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const spinflow::BudgetExceeded& e) {
        std::cerr << "budget exceeded: " << e.what() << "\n";
        return kExitBudget;
    } catch (const spinflow::NumericFailure& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
}
