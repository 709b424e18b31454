#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spinflow/interval.hpp"

namespace spinflow {

using cplx = std::complex<double>;
using DenseMatrix = Eigen::MatrixXcd;

// ---------------------------------------------------------------------------
// Basis conventions, used consistently everywhere:
//  * sites are 1-based, x in {1..L};
//  * site sets are bitmasks with bit (x-1) for site x;
//  * the dense Z-product basis index i in [0, 2^L) stores sigma_x in bit
//    (L-x), i.e. site 1 is the most significant bit, with bit value 1 for
//    sigma_x = +1 (so index 0 is all-down, index 2^L-1 all-up);
//  * a diagonal table over a support interval [lo,hi] stores sigma_x in bit
//    (hi-x), the same reading order as the dense basis.
// ---------------------------------------------------------------------------

// sigma_x for dense basis index i.
inline int sigma_at(std::uint64_t index, int L, int x) {
    return ((index >> (L - x)) & 1ull) ? +1 : -1;
}

// Site mask -> XOR mask acting on dense basis indices.
inline std::uint64_t site_mask_to_dense(std::uint64_t mask, int L) {
    std::uint64_t out = 0;
    while (mask) {
        int x = 1 + __builtin_ctzll(mask);
        mask &= mask - 1;
        out |= 1ull << (L - x);
    }
    return out;
}

class SpinConfig {
  public:
    SpinConfig(int L, std::uint64_t bits) : L_(L), bits_(bits) {}
    static SpinConfig from_index(int L, std::uint64_t index) { return SpinConfig(L, index); }

    int length() const { return L_; }
    std::uint64_t index() const { return bits_; }
    int spin(int x) const { return sigma_at(bits_, L_, x); }
    // Flip the spins in a site mask; an involution.
    SpinConfig flipped(std::uint64_t site_mask) const {
        return SpinConfig(L_, bits_ ^ site_mask_to_dense(site_mask, L_));
    }
    bool operator==(const SpinConfig& o) const { return L_ == o.L_ && bits_ == o.bits_; }

  private:
    int L_;
    std::uint64_t bits_;
};

// An operator X_S f(Z) on a chain of L spins: a product of X's on the active
// set S times a diagonal function f tabulated over a support interval. The
// support always contains the active sites and every site f depends on.
class XMonomial {
  public:
    XMonomial() = default;
    XMonomial(int L, std::uint64_t active, Interval support, std::vector<cplx> diag);

    // Identity times a scalar.
    static XMonomial scalar(int L, cplx value);
    // Single Pauli Z_x / X_x.
    static XMonomial pauli_z(int L, int x);
    static XMonomial pauli_x(int L, int x);

    int length() const { return L_; }
    std::uint64_t active() const { return active_; }
    const Interval& support() const { return support_; }
    const std::vector<cplx>& table() const { return diag_; }
    bool is_diagonal() const { return active_ == 0; }

    // f evaluated on the restriction encoded by a local table index.
    cplx value_local(std::uint64_t local) const { return diag_[local]; }
    // f evaluated on a full-chain configuration (dense basis index).
    cplx value_global(std::uint64_t dense_index) const;
    // Local table index of the restriction of a dense basis index.
    std::uint64_t local_index(std::uint64_t dense_index) const;
    // XOR mask on local table indices realizing a flip of `site_mask`.
    std::uint64_t local_flip_mask(std::uint64_t site_mask) const;

    double norm() const;  // max_sigma |f|, the exact operator norm
    XMonomial scaled(cplx factor) const;
    XMonomial dagger() const;
    bool is_hermitian(double tol = 1e-12) const;
    bool is_skew_hermitian(double tol = 1e-12) const;

    // Refit the minimal support: boundary sites outside the active set whose
    // dependence is at most `tol` are averaged out; returns the norm dropped.
    double shrink(double tol);

    // Adds another monomial with the same active set (supports merged).
    void accumulate(const XMonomial& other);

    std::string json() const;

  private:
    int L_ = 0;
    std::uint64_t active_ = 0;
    Interval support_ = Interval::empty();
    std::vector<cplx> diag_;  // size 2^{support.size()}
};

// a*b. Active sets XOR; a's variables are conjugated through b's X-string.
XMonomial multiply_monomials(const XMonomial& a, const XMonomial& b);
// [a,b]; nullopt when the supports force the commutator to vanish.
std::optional<XMonomial> commutator_monomials(const XMonomial& a, const XMonomial& b);

enum class Parity { none, hermitian, skew_hermitian };

// A sum of X-monomials in normal form: at most one term per active set and
// no identically-zero terms. The per-diagram identity is not kept here; the
// diagrams module owns diagram-resolved objects.
class OperatorSum {
  public:
    OperatorSum() = default;
    explicit OperatorSum(int L, Parity parity = Parity::none) : L_(L), parity_(parity) {}

    int length() const { return L_; }
    Parity parity() const { return parity_; }
    void set_parity(Parity p) { parity_ = p; }

    const std::map<std::uint64_t, XMonomial>& terms() const { return terms_; }
    std::size_t term_count() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }
    const XMonomial* find(std::uint64_t active) const;

    void add_term(XMonomial m, double drop_tol = 0.0);
    void add(const OperatorSum& other, cplx factor = 1.0, double drop_tol = 0.0);

    OperatorSum scaled(cplx factor) const;
    OperatorSum diagonal_part() const;
    OperatorSum offdiagonal_part() const;
    bool is_diagonal() const;

    // Triangle-inequality bound on the operator norm.
    double norm_bound() const;
    double max_term_norm() const;

    bool is_hermitian(double tol = 1e-12) const;
    bool is_skew_hermitian(double tol = 1e-12) const;

    // Diagonal value E(sigma); requires is_diagonal().
    double diagonal_value(std::uint64_t dense_index) const;
    cplx diagonal_value_c(std::uint64_t dense_index) const;

    std::string json() const;

  private:
    int L_ = 0;
    Parity parity_ = Parity::none;
    std::map<std::uint64_t, XMonomial> terms_;
};

OperatorSum commutator(const OperatorSum& a, const OperatorSum& b, double drop_tol = 0.0);
OperatorSum multiply(const OperatorSum& a, const OperatorSum& b, double drop_tol = 0.0);

// The spin-flip derivative d_g F = X_g F X_g - F of a diagonal operator.
// Satisfies ||d_g F|| <= 2 ||F|| and d_g(d_g F) = -2 d_g F.
OperatorSum spin_flip_derivative(std::uint64_t active, const OperatorSum& f);
XMonomial spin_flip_derivative(std::uint64_t active, const XMonomial& f);

DenseMatrix to_dense(const OperatorSum& op);
DenseMatrix to_dense(const XMonomial& m);

// Decomposes a dense matrix supported on the interval I (given in the local
// dense basis of I, leftmost site most significant) into X-monomials:
// M = sum_S X_S f_{S,I}(Z), the Hilbert-Schmidt orthogonal components.
OperatorSum decompose_dense(const DenseMatrix& M, Interval I, int L,
                            Parity parity = Parity::none, double drop_tol = 0.0);

struct NormResult {
    double value = 0.0;
    bool exact = false;  // dense spectral norm vs. triangle-inequality bound
};

// Exact dense spectral norm when 2^L fits the cutoff, else the term-sum bound.
NormResult operator_norm(const OperatorSum& op, int dense_cutoff_L = 12);

}  // namespace spinflow
