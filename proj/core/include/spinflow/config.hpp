#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace spinflow {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat structured config: `key = value` lines grouped under [sections], plus
// command-line overrides of the form section.key=value. Unknown keys are
// rejected so run manifests stay self-describing.
struct RunConfig {
    // [model]
    int model_L = 8;
    double model_gamma = 0.05;
    double model_C_kappa = 1.0;
    int model_I_max = 3;
    std::string model_ensemble = "random";
    std::uint64_t model_seed = 1;

    // [flow]
    std::string flow_beta = "311/312";
    double flow_delta = -1.0;    // < 0: gamma^{1/4}
    double flow_epsilon = -1.0;  // < 0: gamma^{1/4}
    int flow_k_max = 20;
    double flow_eta_den_margin = 1e-2;
    double flow_eta_series = 1e-14;
    double flow_eta_conv = 1e-10;
    std::string flow_mode = "aggregate";
    int flow_n_max = 40;

    // [transport]
    std::string transport_bath_family = "two-level";
    std::string transport_bath_state = "thermal";
    double transport_beta_l = 0.5;
    double transport_beta_r = 2.0;
    std::string transport_lengths = "4,6,8";
    double transport_T = 50.0;
    int transport_n_seeds = 30;

    // [experiment]
    std::string experiment_seeds = "0:8";
    std::string experiment_outdir = "runs";
    int experiment_threads = 0;  // 0 = hardware
    bool experiment_dump_debug = false;

    // [budgets]
    int budget_dense_cutoff_L = 12;
    std::int64_t budget_dense_dim_cap = 8192;
    std::uint64_t budget_census_nodes = 200000000ull;
    std::uint64_t budget_diagrams = 2000000ull;

    // [census]
    int census_k_max = 1;
    long long census_w_max = 10;

    // [scan]
    std::string scan_epsilons = "0.2,0.1,0.05,0.025";
    int scan_samples = 10000;

    // [lemma]
    int lemma_dims = 3;  // grid {5,10,20} truncated to this many entries
    int lemma_trials = 1000;
    int lemma_resolvent_trials = 10000;

    std::vector<std::uint64_t> seed_list() const;
    std::vector<int> length_list() const;
    std::vector<double> epsilon_list() const;

    void apply_file(const std::string& path);
    void apply_text(const std::string& text, const std::string& origin = "<config>");
    // "section.key=value"
    void apply_override(const std::string& assignment);
    void validate() const;

    std::string canonical_text() const;  // normalized dump, hashed in manifests
};

std::uint64_t fnv1a_hash(const std::string& s);

}  // namespace spinflow
