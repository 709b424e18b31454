#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spinflow/model.hpp"
#include "spinflow/pauli.hpp"

namespace spinflow {

enum class BathState { thermal, maximally_mixed, pure_random };

struct BathSpec {
    int dim_l = 2;
    int dim_r = 2;
    DenseMatrix H_Bl, H_Br;  // hermitian bath Hamiltonians
    DenseMatrix V_Bl, V_Br;  // hermitian couplings with norm <= 1
    BathState recipe = BathState::thermal;
    double beta_l = 0.5;
    double beta_r = 2.0;

    void validate() const;

    // Deterministic bath families used by the sweeps: "two-level" and
    // "four-level" (random level spacings, sigma_x-like couplings).
    static BathSpec family(const std::string& name, std::uint64_t seed);
};

struct TotalSystem {
    int L = 0;
    int dim_l = 1, dim_r = 1;
    std::int64_t dim = 0;
    DenseMatrix H_tot, H_l, H_r;
};

// H_tot = H_Bl + V_Bl (x) X_1 + H_Br + V_Br (x) X_L + H_sys on the space
// bath_l (x) chain (x) bath_r; H_l collects the left bath plus every H_I with
// min I <= L/2, and H_l + H_r = H_tot exactly.
TotalSystem build_total_system(const ModelParams& params, const DisorderSample& sample,
                               const BathSpec& bath, std::int64_t dense_budget = 8192);

// J = i[H_r, H_l]; hermitian.
DenseMatrix current_operator(const DenseMatrix& H_l, const DenseMatrix& H_r);

// Initial density matrix per the bath recipe (thermal product with the chain
// maximally mixed, fully mixed, or a random pure state).
DenseMatrix initial_density(const TotalSystem& sys, const BathSpec& bath, std::uint64_t seed);

struct CurrentTrace {
    std::vector<double> times;
    std::vector<double> instantaneous;   // <J(t)>
    std::vector<double> running_average; // (1/t) int_0^t <J>
    std::vector<double> energy_l;        // <H_l(t)>
    double average_current = 0.0;        // at the largest time
    double conservation_residual = 0.0;  // |avg - (<H_l(T)>-<H_l(0)>)/T|
    double energy_drift = 0.0;           // max |<H_tot(t)> - <H_tot(0)>|
    double trace_drift = 0.0;
    double min_eigenvalue_rho = 0.0;
};

// Heisenberg evolution via the eigendecomposition of H_tot; the time average
// is evaluated by the exact spectral formula, not quadrature.
CurrentTrace average_current(const TotalSystem& sys, const DenseMatrix& J,
                             const DenseMatrix& rho0, const std::vector<double>& times);

struct SweepRow {
    int L = 0;
    std::uint64_t seed = 0;
    std::string bath_family;
    double T = 0.0;
    double avg_current = 0.0;
    double energy_residual = 0.0;
    double energy_drift = 0.0;
};

struct SweepSummary {
    std::vector<SweepRow> rows;
    std::vector<int> lengths;
    std::vector<double> median_abs_current;  // per length
    std::vector<double> q1, q3;
    double loglog_slope = 0.0;  // fit of log median|J| vs log L
};

SweepSummary length_sweep(const ModelParams& base, const BathSpec& bath,
                          const std::string& bath_family_name, const std::vector<int>& lengths,
                          double T, int n_seeds, std::int64_t dense_budget = 8192);

}  // namespace spinflow
