#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spinflow/diagrams.hpp"
#include "spinflow/interval.hpp"
#include "spinflow/model.hpp"
#include "spinflow/pauli.hpp"
#include "spinflow/rational.hpp"

namespace spinflow {

enum class ResonanceKind { nr1, nr2, denominator_floor };

std::string resonance_kind_name(ResonanceKind k);

struct ResonanceEvent {
    int scale = 0;
    ResonanceKind kind = ResonanceKind::denominator_floor;
    std::string descriptor;  // offending monomial or triad
    double measured = 0.0;
    double threshold = 0.0;
};

enum class FlowMode { aggregate, triadic };

struct FlowParams {
    Rational beta = Rational(311, 312);
    double delta = -1.0;    // < 0: resolved to gamma^{1/4}
    double epsilon = -1.0;  // < 0: resolved to gamma^{1/4}
    int k_max = 20;
    double eta_den_margin = 1e-2;  // denominator floor = margin * epsilon^{|I|}
    // Entries whose generator magnitude |f/d| would exceed this are deferred
    // as well: large generator entries break the perturbative rotation, the
    // same failure NR_II guards against.
    double eta_A_cap = 2.0;
    double eta_series = 1e-14;
    double eta_conv = 1e-10;
    int n_max = 60;
    double drop_tol = 1e-17;  // discard series monomials below this norm
    // Tuple-expansion cut in triadic mode; emissions carry 1/n! so the cut
    // bounds the dropped mass by a fast-converging series tail.
    double drop_tol_diagram = 1e-13;
    int dense_cutoff_L = 12;
    FlowMode mode = FlowMode::aggregate;
    std::uint64_t diagram_budget = 2000000;  // triadic-mode guard

    // Fills the delta = epsilon = gamma^{1/4} defaults. This regime sits far
    // outside the admissible-exponent window; run manifests flag it.
    void resolve(double gamma);
    double denominator_floor(int support_len) const;
};

struct FlowState {
    int L = 0;
    int k = 0;
    std::vector<XMonomial> E_terms;  // diagonal monomials, kept unmerged
    OperatorSum V;
    std::vector<OperatorSum> generators;  // A^(1), ..., A^(k)
    std::vector<ResonanceEvent> resonance_log;

    OperatorSum E() const;            // merged diagonal operator
    OperatorSum hamiltonian() const;  // E + V
    // E(flip_S sigma) - E(sigma) as a local diagonal monomial.
    XMonomial denominator(std::uint64_t active, Interval v_support) const;
};

// E0 absorbs the diagonal part of V0 immediately, so V starts off-diagonal.
FlowState initial_state(const ModelParams& params, const DisorderSample& sample);

// Off-diagonal part of V with support length below L_{k+1} (the aggregate
// proxy for the order threshold).
OperatorSum select_perturbative(const FlowState& state, const ScaleLadder& ladder);

struct GeneratorResult {
    OperatorSum A;         // skew-hermitian
    OperatorSum kept;      // the part of v_per canceled by [A, E]
    OperatorSum deferred;  // entries zeroed by the denominator floor
    std::vector<ResonanceEvent> events;
};

GeneratorResult solve_generator(const FlowState& state, const OperatorSum& v_per,
                                const FlowParams& params);

struct RotateReport {
    bool series_converged = true;
    int series_terms = 0;
    double absorbed_norm = 0.0;  // total norm of diagonal monomials moved into E
};

// H <- e^{ad_A} H with the resummed coefficients n/(n+1)! on the rotated-away
// part and 1/n! on the rest; all diagonal monomials produced are absorbed
// into E; k increments. The rotated-away part is taken as -[A, E], so the
// cancellation is exact whatever A is.
RotateReport rotate_step(FlowState& state, const OperatorSum& A, const FlowParams& params);

// --- Diagram-resolved (triadic) machinery ---------------------------------

struct DiagramTerm {
    DiagramPtr diagram;
    XMonomial term;
};

struct PoolEntry {  // an absorbed diagonal diagram with its monomial E^(k)(g')
    DiagramPtr diagram;
    XMonomial term;
};

struct TriadTerm {
    Triad triad;
    XMonomial term;  // A^{(k+1)}(t); zero when deferred
    double inv_d1_norm = 0.0;
    double inv_d2_norm = 0.0;
    bool deferred = false;
};

struct TriadicGenerator {
    std::vector<TriadTerm> terms;
    bool any_deferred = false;
    std::vector<ResonanceEvent> floor_events;
};

// Per-triad generator terms for one off-diagonal diagram; their sum over all
// triads equals V(g) / d_g E^(k) exactly when nothing is deferred.
TriadicGenerator solve_generator_triadic(const DiagramTerm& g, const std::vector<PoolEntry>& pool,
                                         const std::vector<XMonomial>& E0_terms,
                                         const ScaleLadder& ladder, const FlowParams& params,
                                         int L);

// First representation V(g)/d_g E^(k) (denominator floor applied entrywise).
XMonomial first_representation(const DiagramTerm& g, const std::vector<PoolEntry>& pool,
                               const std::vector<XMonomial>& E0_terms,
                               const FlowParams& params, int L);

// NR_I / NR_II checks over solved triads. Crowded centrals satisfy NR_II
// trivially and are skipped.
std::vector<ResonanceEvent> detect_resonances(const std::vector<TriadTerm>& triads, double gamma,
                                              const FlowParams& params, const ScaleLadder& ladder);

struct TriadicState {
    int L = 0;
    int k = 0;
    std::vector<XMonomial> E0_terms;
    std::vector<PoolEntry> pool;  // D^(k)
    std::vector<DiagramTerm> V;
    std::vector<OperatorSum> generators;
    std::vector<ResonanceEvent> resonance_log;

    std::vector<XMonomial> E_terms() const;  // E0 plus absorbed pool monomials
    OperatorSum V_sum() const;
};

TriadicState initial_triadic_state(const ModelParams& params, const DisorderSample& sample);

struct TriadicStepReport {
    int n_diagrams = 0;
    int n_triads = 0;
    int deferred_diagrams = 0;
    std::vector<ResonanceEvent> events;
};

TriadicStepReport triadic_step(TriadicState& state, const FlowParams& params,
                               const ScaleLadder& ladder, double gamma);

// --- Driver ----------------------------------------------------------------

struct ScaleReport {
    int k = 0;  // scale index before the step
    double norm_V = 0.0;
    bool norm_V_exact = false;
    double norm_A = 0.0;
    std::size_t n_terms = 0;
    int nr1_events = 0;
    int nr2_events = 0;
    int floor_events = 0;
    double spectrum_drift = 0.0;
    int series_terms = 0;
    // ||V_per_kept + [A, E]|| for the step taken from this scale (bound).
    double generator_residual = 0.0;
    bool step_deferred = false;  // any denominator-floor deferral this step
};

struct FlowResult {
    FlowState state;
    std::vector<ScaleReport> reports;
    bool converged = false;
    bool series_failure = false;
    int total_floor_events = 0;
    int total_nr1 = 0;
    int total_nr2 = 0;
    double final_norm_V = 0.0;
    double max_spectrum_drift = 0.0;
};

FlowResult run_flow(const ModelParams& params, const DisorderSample& sample,
                    const FlowParams& flow_params);

// --- Scale-0 resonance scan --------------------------------------------------

struct ResonanceScanRow {
    double epsilon = 0.0;
    long long order = 0;  // 0 = any order
    long long samples = 0;
    long long violations = 0;  // samples with at least one violating diagram
    double frequency = 0.0;
};

// NR_I-style scan of the bare denominators d_g E^(0) over all scale-0
// off-diagonal diagrams with |I| <= I_max, across a grid of epsilons.
std::vector<ResonanceScanRow> resonance_scan_k0(const ModelParams& params, int n_samples,
                                                const std::vector<double>& epsilons);

}  // namespace spinflow
