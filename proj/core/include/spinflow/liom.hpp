#pragma once

#include <map>
#include <optional>
#include <vector>

#include "spinflow/flow.hpp"
#include "spinflow/pauli.hpp"

namespace spinflow {

struct UnitaryProduct {
    int L = 0;
    std::vector<OperatorSum> factors;  // the generators A^(1..K)
    DenseMatrix dense;                 // e^{-A^(1)} e^{-A^(2)} ... e^{-A^(K)}
};

// Dense product of matrix exponentials; each factor is built from the
// eigendecomposition of the hermitian iA, so unitarity holds to roundoff.
UnitaryProduct build_unitary(const FlowState& state, int dense_budget_L = 13);

struct LiomReport {
    std::vector<double> h_residuals;     // per site: ||[H, U Z_x U^dagger]||
    double max_pair_commutator = 0.0;    // max_{x<y} ||[Z~_x, Z~_y]||
    double max_involution_dev = 0.0;     // max_x ||Z~_x^2 - 1||
    double max_proj_trace_dev = 0.0;     // sampled joint projectors: |tr P - 1|
    double max_proj_idem_dev = 0.0;      //                       and ||P^2 - P||
};

LiomReport liom_check(const DenseMatrix& U, const DenseMatrix& H);

// Diagonalizing unitary built from the dense eigenvectors by maximal-overlap
// assignment in the Z basis; nullopt when the assignment is ambiguous (near
// level crossings).
std::optional<DenseMatrix> oracle_unitary(const DenseMatrix& H);

enum class ConjugationDirection { conjugate, inverse_conjugate };

struct LocalityProfile {
    std::vector<double> tails;  // n -> ||(O)_n||
    double fit_prefactor = 0.0;
    double fit_rate = 0.0;  // tails ~ prefactor * exp(-rate * n)
    double reconstruction_error = 0.0;
};

// Normalized partial trace over the complement of a site set, re-embedded on
// the full chain.
DenseMatrix normalized_partial_trace(const DenseMatrix& M, std::uint64_t keep_sites, int L);

// Tail decomposition of U O U^dagger (or U^dagger O U) via differences of
// normalized partial traces over shrinking complements X_n.
LocalityProfile locality_profile(const DenseMatrix& U, const DenseMatrix& O, Interval support,
                                 int L, ConjugationDirection direction);

struct DiagonalExpansion {
    int L = 0;
    std::vector<double> couplings;  // D_S indexed by the site mask of S

    double coupling(std::uint64_t site_mask) const { return couplings[site_mask]; }
    // Length of the smallest real interval containing S (0 for singletons).
    static int diameter(std::uint64_t site_mask);
    std::map<int, double> max_abs_by_diameter() const;
    double sum_of_squares() const;
};

// D_S = 2^{-L} sum_sigma E(sigma) prod_{x in S} sigma_x, via a fast
// Walsh-Hadamard transform of the diagonal.
DiagonalExpansion extract_diagonal_couplings(const OperatorSum& E);

// Least-squares exponential fit on log of tails above the fp noise floor.
void fit_exponential_tail(const std::vector<double>& tails, double noise_floor, double* prefactor,
                          double* rate);

}  // namespace spinflow
