#include "spinflow/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <mutex>

#include "spinflow/csv.hpp"
#include "spinflow/diagrams.hpp"
#include "spinflow/flow.hpp"
#include "spinflow/liom.hpp"
#include "spinflow/model.hpp"
#include "spinflow/oracle.hpp"
#include "spinflow/parallel.hpp"
#include "spinflow/transport.hpp"

namespace spinflow {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ModelParams model_from_config(const RunConfig& cfg, int L_override = 0) {
    return ModelParams::with_random_kappa(L_override > 0 ? L_override : cfg.model_L,
                                          cfg.model_gamma, cfg.model_C_kappa, cfg.model_I_max,
                                          ensemble_from_string(cfg.model_ensemble),
                                          cfg.model_seed);
}

FlowParams flow_from_config(const RunConfig& cfg) {
    FlowParams fp;
    fp.beta = parse_rational(cfg.flow_beta);
    fp.delta = cfg.flow_delta;
    fp.epsilon = cfg.flow_epsilon;
    fp.k_max = cfg.flow_k_max;
    fp.eta_den_margin = cfg.flow_eta_den_margin;
    fp.eta_series = cfg.flow_eta_series;
    fp.eta_conv = cfg.flow_eta_conv;
    fp.n_max = cfg.flow_n_max;
    fp.dense_cutoff_L = cfg.budget_dense_cutoff_L;
    fp.mode = cfg.flow_mode == "triadic" ? FlowMode::triadic : FlowMode::aggregate;
    fp.diagram_budget = cfg.budget_diagrams;
    fp.resolve(cfg.model_gamma);
    return fp;
}

// The admissible-exponent window of the convergence proof; desk-scale
// defaults sit far outside it, and the manifest says so.
bool inside_proof_regime(const RunConfig& cfg, const FlowParams& fp) {
    double gamma = cfg.model_gamma;
    if (gamma <= 0.0) return false;
    double beta = to_double(fp.beta);
    double d = fp.delta, e = fp.epsilon;
    if (beta < 1.0 - 1.0 / 312.0) return false;
    if (!(gamma / std::pow(e, 10.0) < d)) return false;  // b = 9
    if (!(32.0 * std::pow(gamma / d, 1.0 - beta) / std::pow(e, 4.0) < 1.0)) return false;
    if (!(std::pow(gamma / d, 1.0 - beta) / std::pow(e, 7.0) < 1.0)) return false;
    return true;
}

void write_manifest(const RunConfig& cfg, const std::string& subcommand,
                    const std::string& outdir, const std::string& status) {
    FlowParams fp = flow_from_config(cfg);
    json m;
    m["subcommand"] = subcommand;
    m["version"] = kVersion;
    m["status"] = status;
    m["config_hash"] = fnv1a_hash(cfg.canonical_text());
    m["config"] = cfg.canonical_text();
    m["resolved"] = {{"delta", fp.delta},
                     {"epsilon", fp.epsilon},
                     {"beta", cfg.flow_beta},
                     {"inside_proof_regime", inside_proof_regime(cfg, fp)}};
    m["decisions"] = {
        {"order_threshold_proxy", "support length |I| < L_{k+1} stands in for |g| (aggregate mode)"},
        {"diagonal_absorption", "aggregate mode absorbs every diagonal monomial each step"},
        {"resonance_policy", "resonant entries deferred and re-exposed every scale"},
        {"time_average", "spectral formula, exact in T"},
    };
    std::ofstream out(fs::path(outdir) / "manifest.json");
    out << m.dump(2) << "\n";
}

// --- flow ------------------------------------------------------------------

struct SeedFlow {
    std::uint64_t seed = 0;
    FlowResult result;
};

std::vector<SeedFlow> run_flow_ensemble(const RunConfig& cfg) {
    ModelParams params = model_from_config(cfg);
    FlowParams fp = flow_from_config(cfg);
    std::vector<std::uint64_t> seeds = cfg.seed_list();
    std::vector<SeedFlow> results(seeds.size());
    parallel_for(seeds.size(), cfg.experiment_threads, [&](std::size_t i) {
        DisorderSample sample = sample_disorder(params, seeds[i]);
        results[i] = SeedFlow{seeds[i], run_flow(params, sample, fp)};
    });
    return results;
}

void cmd_flow(const RunConfig& cfg, const std::string& outdir) {
    ModelParams params = model_from_config(cfg);
    std::vector<SeedFlow> results = run_flow_ensemble(cfg);

    CsvWriter scales(fs::path(outdir) / "flow_scales.csv",
                     {"sample", "k", "norm_V", "norm_A", "n_terms", "nr1_events", "nr2_events",
                      "floor_events", "spectrum_drift"});
    for (const SeedFlow& sf : results)
        for (const ScaleReport& row : sf.result.reports) {
            scales.field(sf.seed)
                .field(row.k)
                .field(row.norm_V)
                .field(row.norm_A)
                .field(row.n_terms)
                .field(row.nr1_events)
                .field(row.nr2_events)
                .field(row.floor_events)
                .field(row.spectrum_drift);
            scales.endrow();
        }

    CsvWriter disorder(fs::path(outdir) / "disorder.csv", {"sample", "site", "theta"});
    for (const SeedFlow& sf : results) {
        DisorderSample sample = sample_disorder(params, sf.seed);
        for (int x = 1; x <= params.L; ++x) {
            disorder.field(sf.seed).field(x).field(sample.theta[x - 1]);
            disorder.endrow();
        }
    }

    json summary;
    int converged = 0, with_deferrals = 0;
    double max_drift = 0.0;
    for (const SeedFlow& sf : results) {
        converged += sf.result.converged ? 1 : 0;
        with_deferrals += sf.result.total_floor_events > 0 ? 1 : 0;
        max_drift = std::max(max_drift, sf.result.max_spectrum_drift);
    }
    summary["seeds"] = results.size();
    summary["converged"] = converged;
    summary["seeds_with_deferrals"] = with_deferrals;
    summary["max_spectrum_drift"] = max_drift;
    std::ofstream(fs::path(outdir) / "flow_summary.json") << summary.dump(2) << "\n";

    if (cfg.experiment_dump_debug && !results.empty()) {
        std::ofstream dump(fs::path(outdir) / "final_state.json");
        dump << "{\"V\":" << results[0].result.state.V.json()
             << ",\"E\":" << results[0].result.state.E().json() << "}\n";
    }
}

// --- liom-profile ------------------------------------------------------------

void cmd_liom_profile(const RunConfig& cfg, const std::string& outdir) {
    ModelParams params = model_from_config(cfg);
    std::vector<SeedFlow> results = run_flow_ensemble(cfg);

    CsvWriter residuals(fs::path(outdir) / "liom_residuals.csv", {"sample", "site", "residual"});
    CsvWriter tails(fs::path(outdir) / "locality_tails.csv",
                    {"sample", "operator", "n", "tail_norm"});
    CsvWriter decay(fs::path(outdir) / "coupling_decay.csv", {"sample", "diameter", "max_abs_D"});

    int skipped = 0;
    for (const SeedFlow& sf : results) {
        if (!sf.result.converged) {
            ++skipped;
            continue;
        }
        UnitaryProduct up = build_unitary(sf.result.state, cfg.budget_dense_cutoff_L);
        const std::uint64_t dim = 1ull << params.L;
        double unitarity =
            (up.dense.adjoint() * up.dense - DenseMatrix::Identity(dim, dim)).cwiseAbs().maxCoeff();
        if (unitarity > 1e-10)
            throw NumericFailure("liom-profile: unitarity audit failed for sample " +
                                 std::to_string(sf.seed));
        DisorderSample sample = sample_disorder(params, sf.seed);
        FlowState initial = initial_state(params, sample);
        DenseMatrix H0 = to_dense(initial.hamiltonian());
        LiomReport rep = liom_check(up.dense, H0);
        for (int x = 1; x <= params.L; ++x) {
            residuals.field(sf.seed).field(x).field(rep.h_residuals[x - 1]);
            residuals.endrow();
        }
        int mid = (params.L + 1) / 2;
        OperatorSum oz(params.L);
        oz.add_term(XMonomial::pauli_z(params.L, mid));
        LocalityProfile prof = locality_profile(up.dense, to_dense(oz), Interval::site(mid),
                                                params.L, ConjugationDirection::conjugate);
        for (std::size_t n = 0; n < prof.tails.size(); ++n) {
            tails.field(sf.seed)
                .field("Z" + std::to_string(mid))
                .field(static_cast<long long>(n))
                .field(prof.tails[n]);
            tails.endrow();
        }
        DiagonalExpansion de = extract_diagonal_couplings(sf.result.state.E());
        for (const auto& [d, v] : de.max_abs_by_diameter()) {
            decay.field(sf.seed).field(d).field(v);
            decay.endrow();
        }
    }
    json summary;
    summary["seeds"] = results.size();
    summary["skipped_not_converged"] = skipped;
    std::ofstream(fs::path(outdir) / "liom_summary.json") << summary.dump(2) << "\n";
}

// --- resonance-scan -----------------------------------------------------------

void cmd_resonance_scan(const RunConfig& cfg, const std::string& outdir) {
    ModelParams params = model_from_config(cfg);
    std::vector<ResonanceScanRow> rows =
        resonance_scan_k0(params, cfg.scan_samples, cfg.epsilon_list());
    CsvWriter csv(fs::path(outdir) / "resonance_scan.csv",
                  {"epsilon", "order", "samples", "violations", "frequency"});
    for (const ResonanceScanRow& r : rows) {
        csv.field(r.epsilon).field(r.order).field(r.samples).field(r.violations).field(r.frequency);
        csv.endrow();
    }
}

// --- diagram-count -------------------------------------------------------------

void cmd_diagram_count(const RunConfig& cfg, const std::string& outdir) {
    Census census = enumerate_diagrams(cfg.model_L, cfg.census_k_max, cfg.census_w_max,
                                       parse_rational(cfg.flow_beta), cfg.budget_census_nodes);
    CsvWriter csv(fs::path(outdir) / "census.csv", {"x", "k", "w", "N", "fitted_C"});
    for (const auto& [key, N] : census.counts) {
        csv.field(key.x)
            .field(key.k)
            .field(key.w)
            .field(to_double(N))
            .field(census.fitted_C);
        csv.endrow();
    }
}

// --- transport-sweep -----------------------------------------------------------

void cmd_transport_sweep(const RunConfig& cfg, const std::string& outdir) {
    ModelParams base = model_from_config(cfg);
    BathSpec bath = BathSpec::family(cfg.transport_bath_family, cfg.model_seed);
    if (cfg.transport_bath_state == "maximally-mixed")
        bath.recipe = BathState::maximally_mixed;
    else if (cfg.transport_bath_state == "pure-random")
        bath.recipe = BathState::pure_random;
    else
        bath.recipe = BathState::thermal;
    bath.beta_l = cfg.transport_beta_l;
    bath.beta_r = cfg.transport_beta_r;

    SweepSummary sweep =
        length_sweep(base, bath, cfg.transport_bath_family, cfg.length_list(), cfg.transport_T,
                     cfg.transport_n_seeds, cfg.budget_dense_dim_cap);
    CsvWriter csv(fs::path(outdir) / "transport.csv",
                  {"L", "seed", "bath_family", "T", "avg_current", "energy_residual"});
    for (const SweepRow& r : sweep.rows) {
        if (r.energy_residual > 1e-9)
            throw NumericFailure("transport-sweep: conservation identity breached");
        csv.field(r.L)
            .field(r.seed)
            .field(r.bath_family)
            .field(r.T)
            .field(r.avg_current)
            .field(r.energy_residual);
        csv.endrow();
    }
    json summary;
    summary["lengths"] = sweep.lengths;
    summary["median_abs_current"] = sweep.median_abs_current;
    summary["q1"] = sweep.q1;
    summary["q3"] = sweep.q3;
    summary["loglog_slope"] = sweep.loglog_slope;
    summary["note"] = "no quantitative exponent target: the decay constants are not pinned";
    std::ofstream(fs::path(outdir) / "sweep_summary.json") << summary.dump(2) << "\n";
}

// --- lemma-checks ----------------------------------------------------------------

void cmd_lemma_checks(const RunConfig& cfg, const std::string& outdir) {
    const int dims_all[3] = {5, 10, 20};
    const double eps_all[3] = {0.01, 0.05, 0.1};
    CsvWriter csv(fs::path(outdir) / "lemma_checks.csv",
                  {"check", "d", "epsilon", "trials", "max_ratio", "bound", "pass"});
    bool all_ok = true;
    for (int di = 0; di < std::min(3, cfg.lemma_dims); ++di)
        for (double eps : eps_all) {
            SpectralLemmaResult r =
                spectral_lemma_check(dims_all[di], eps, cfg.lemma_trials, cfg.model_seed);
            bool ok = r.max_ratio <= r.constant;
            all_ok = all_ok && ok;
            csv.field("spectral")
                .field(dims_all[di])
                .field(eps)
                .field(cfg.lemma_trials)
                .field(r.max_ratio)
                .field(r.constant)
                .field(ok ? "1" : "0");
            csv.endrow();
        }
    for (int R = 1; R <= 5; ++R) {
        double worst = resolvent_identity_check(R, cfg.lemma_resolvent_trials, cfg.model_seed);
        bool ok = worst < 1e-12;
        all_ok = all_ok && ok;
        csv.field("resolvent").field(R).field(0.0).field(cfg.lemma_resolvent_trials).field(worst)
            .field(1e-12).field(ok ? "1" : "0");
        csv.endrow();
    }
    if (!all_ok) throw NumericFailure("lemma-checks: a lemma bound was violated");
}

}  // namespace

void write_schema(const std::string& outdir) {
    std::ofstream out(fs::path(outdir) / "SCHEMA.md");
    out << R"(# Output schemas

Column order is frozen; floats are printed with 17 significant digits.

## flow_scales.csv
sample,k,norm_V,norm_A,n_terms,nr1_events,nr2_events,floor_events,spectrum_drift
One row per scale per sample. `norm_V` is the exact dense norm below the
dense cutoff, otherwise the term-sum bound. Event columns count occurrences
while stepping away from scale k.

## disorder.csv
sample,site,theta

## liom_residuals.csv
sample,site,residual
`residual` = ||[H, U Z_x U^dagger]||.

## locality_tails.csv
sample,operator,n,tail_norm

## coupling_decay.csv
sample,diameter,max_abs_D

## resonance_scan.csv
epsilon,order,samples,violations,frequency
`order` 0 aggregates over all diagram orders; otherwise rows are restricted
to diagrams of that order. `violations` counts samples with at least one
violating diagram.

## census.csv
x,k,w,N,fitted_C
N(x,k,w) as a double; `fitted_C` is the single smallest C with N <= C^w
across the whole census (repeated on every row).

## transport.csv
L,seed,bath_family,T,avg_current,energy_residual

## lemma_checks.csv
check,d,epsilon,trials,max_ratio,bound,pass
)";
}

void run_experiment(const RunConfig& cfg, const std::string& subcommand,
                    const std::string& outdir) {
    cfg.validate();
    fs::create_directories(outdir);
    write_manifest(cfg, subcommand, outdir, "started");
    write_schema(outdir);
    if (subcommand == "flow")
        cmd_flow(cfg, outdir);
    else if (subcommand == "liom-profile")
        cmd_liom_profile(cfg, outdir);
    else if (subcommand == "resonance-scan")
        cmd_resonance_scan(cfg, outdir);
    else if (subcommand == "diagram-count")
        cmd_diagram_count(cfg, outdir);
    else if (subcommand == "transport-sweep")
        cmd_transport_sweep(cfg, outdir);
    else if (subcommand == "lemma-checks")
        cmd_lemma_checks(cfg, outdir);
    else
        throw ConfigError("unknown subcommand " + subcommand);
    write_manifest(cfg, subcommand, outdir, "ok");
}

}  // namespace spinflow
