#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "spinflow/interval.hpp"
#include "spinflow/pauli.hpp"

namespace spinflow {

// W_I generation rule. "random" draws a Gaussian hermitian matrix rescaled to
// unit spectral norm; "transverse_field" puts W_{x} = X_x only (the solvable
// Ising-like case); "xx" puts W_{x,x+1} = X_x X_{x+1} only.
enum class Ensemble { random, transverse_field, xx };

Ensemble ensemble_from_string(const std::string& s);
std::string ensemble_to_string(Ensemble e);

struct ModelParams {
    int L = 8;
    double gamma = 0.05;
    std::vector<double> kappa;  // L-1 per-bond couplings, |kappa_x| < C_kappa
    double C_kappa = 1.0;
    int I_max = 3;  // longest perturbation interval
    Ensemble ensemble = Ensemble::random;
    std::uint64_t seed = 1;

    void validate() const;

    // Per-bond couplings frozen per run: i.i.d. uniform in (-C_kappa, C_kappa)
    // from a dedicated stream of `seed`.
    static ModelParams with_random_kappa(int L, double gamma, double C_kappa, int I_max,
                                         Ensemble ensemble, std::uint64_t seed);
};

struct DisorderSample {
    std::uint64_t index = 0;
    std::vector<double> theta;  // theta_x in [0,1], x = 1..L
};

// Deterministic in (params.seed, index); i.i.d.-uniform marginals.
DisorderSample sample_disorder(const ModelParams& params, std::uint64_t index);

struct IntervalTerm {
    Interval I;
    DenseMatrix W;  // hermitian, ||W|| <= 1, in the local dense basis of I
};

// All W_I with |I| <= I_max and nonzero content under the ensemble rule.
std::vector<IntervalTerm> generate_interval_terms(const ModelParams& params,
                                                  const DisorderSample& sample);

// One scale-0 diagram (S, I) and its monomial.
struct BareTerm {
    std::uint64_t active;  // S as a site mask
    Interval I;
    XMonomial term;
};

struct BareSplit {
    OperatorSum E0;                   // sum theta_x Z_x + sum kappa_x Z_x Z_{x+1}
    OperatorSum V0;                   // all X-monomial perturbation terms
    std::vector<BareTerm> terms_by_diagram;
};

// E^(0) as a list of local diagonal monomials (not merged), preserving the
// interval structure used by denominator supports.
std::vector<XMonomial> bare_energy_terms(const ModelParams& params,
                                         const DisorderSample& sample);

BareSplit split_bare(const ModelParams& params, const DisorderSample& sample);

}  // namespace spinflow
