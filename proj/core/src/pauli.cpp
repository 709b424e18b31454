#include "spinflow/pauli.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace spinflow {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Local table index of a's support restricted from a hull-local index.
// Both layouts put the leftmost site in the most significant bit.
inline std::uint64_t restrict_local(std::uint64_t hull_local, const Interval& hull,
                                    const Interval& sub) {
    if (sub.is_empty()) return 0;
    std::uint64_t width = static_cast<std::uint64_t>(sub.size());
    return (hull_local >> (hull.hi - sub.hi)) & ((1ull << width) - 1ull);
}

}  // namespace

XMonomial::XMonomial(int L, std::uint64_t active, Interval support, std::vector<cplx> diag)
    : L_(L), active_(active), support_(support.hull(mask_hull(active))), diag_(std::move(diag)) {
    if (diag_.size() != (1ull << support.size()))
        throw std::invalid_argument("XMonomial: table size does not match support");
    if (!(support_ == support)) {
        // Support widened to cover the active set; re-tabulate.
        std::vector<cplx> nd(1ull << support_.size());
        for (std::uint64_t j = 0; j < nd.size(); ++j)
            nd[j] = diag_[restrict_local(j, support_, support)];
        diag_ = std::move(nd);
    }
    if (support_.hi > L_ || (!support_.is_empty() && support_.lo < 1))
        throw std::invalid_argument("XMonomial: support outside the chain");
}

XMonomial XMonomial::scalar(int L, cplx value) {
    return XMonomial(L, 0, Interval::empty(), {value});
}

XMonomial XMonomial::pauli_z(int L, int x) {
    // f(sigma) = sigma_x on support {x}; table index 1 is sigma_x = +1.
    return XMonomial(L, 0, Interval::site(x), {cplx(-1.0, 0.0), cplx(1.0, 0.0)});
}

XMonomial XMonomial::pauli_x(int L, int x) {
    return XMonomial(L, 1ull << (x - 1), Interval::site(x), {cplx(1.0, 0.0), cplx(1.0, 0.0)});
}

std::uint64_t XMonomial::local_index(std::uint64_t dense_index) const {
    if (support_.is_empty()) return 0;
    std::uint64_t width = static_cast<std::uint64_t>(support_.size());
    return (dense_index >> (L_ - support_.hi)) & ((1ull << width) - 1ull);
}

std::uint64_t XMonomial::local_flip_mask(std::uint64_t site_mask) const {
    std::uint64_t out = 0;
    std::uint64_t inside = site_mask & interval_mask(support_);
    while (inside) {
        int x = 1 + __builtin_ctzll(inside);
        inside &= inside - 1;
        out |= 1ull << (support_.hi - x);
    }
    return out;
}

cplx XMonomial::value_global(std::uint64_t dense_index) const {
    return diag_[local_index(dense_index)];
}

double XMonomial::norm() const {
    double m = 0.0;
    for (const cplx& v : diag_) m = std::max(m, std::abs(v));
    return m;
}

XMonomial XMonomial::scaled(cplx factor) const {
    XMonomial out = *this;
    for (cplx& v : out.diag_) v *= factor;
    return out;
}

XMonomial XMonomial::dagger() const {
    // (X_S f)^dagger = X_S f^*(flip_S .)
    XMonomial out = *this;
    std::uint64_t fm = local_flip_mask(active_);
    for (std::uint64_t j = 0; j < diag_.size(); ++j) out.diag_[j] = std::conj(diag_[j ^ fm]);
    return out;
}

bool XMonomial::is_hermitian(double tol) const {
    std::uint64_t fm = local_flip_mask(active_);
    for (std::uint64_t j = 0; j < diag_.size(); ++j)
        if (std::abs(std::conj(diag_[j]) - diag_[j ^ fm]) > tol) return false;
    return true;
}

bool XMonomial::is_skew_hermitian(double tol) const {
    std::uint64_t fm = local_flip_mask(active_);
    for (std::uint64_t j = 0; j < diag_.size(); ++j)
        if (std::abs(std::conj(diag_[j]) + diag_[j ^ fm]) > tol) return false;
    return true;
}

double XMonomial::shrink(double tol) {
    double dropped = 0.0;
    bool again = true;
    while (again && !support_.is_empty()) {
        again = false;
        for (int side = 0; side < 2; ++side) {
            if (support_.is_empty()) break;
            int x = side == 0 ? support_.lo : support_.hi;
            if (active_ & (1ull << (x - 1))) continue;
            std::uint64_t bit = 1ull << (support_.hi - x);
            double dep = 0.0;
            for (std::uint64_t j = 0; j < diag_.size(); ++j)
                if (!(j & bit)) dep = std::max(dep, std::abs(diag_[j] - diag_[j | bit]));
            if (dep > 2.0 * tol) continue;
            dropped = std::max(dropped, dep / 2.0);
            // Average the site out and drop it from the support.
            Interval ns = x == support_.lo ? Interval{support_.lo + 1, support_.hi}
                                           : Interval{support_.lo, support_.hi - 1};
            if (ns.hi < ns.lo) ns = Interval::empty();
            std::vector<cplx> nd(1ull << ns.size());
            for (std::uint64_t j = 0; j < nd.size(); ++j) {
                std::uint64_t j0, j1;
                if (x == support_.hi) {  // removed bit is the LSB
                    j0 = j << 1;
                    j1 = (j << 1) | 1ull;
                } else {  // removed bit is the MSB
                    j0 = j;
                    j1 = j | bit;
                }
                nd[j] = 0.5 * (diag_[j0] + diag_[j1]);
            }
            support_ = ns;
            diag_ = std::move(nd);
            again = true;
            break;
        }
    }
    return dropped;
}

void XMonomial::accumulate(const XMonomial& other) {
    if (other.active_ != active_ || other.L_ != L_)
        throw std::invalid_argument("XMonomial::accumulate: mismatched term");
    Interval hull = support_.hull(other.support_);
    if (!(hull == support_)) {
        std::vector<cplx> nd(1ull << hull.size());
        for (std::uint64_t j = 0; j < nd.size(); ++j)
            nd[j] = diag_[restrict_local(j, hull, support_)];
        support_ = hull;
        diag_ = std::move(nd);
    }
    for (std::uint64_t j = 0; j < diag_.size(); ++j)
        diag_[j] += other.diag_[restrict_local(j, hull, other.support_)];
}

std::string XMonomial::json() const {
    std::string s = "{\"active\":" + std::to_string(active_) + ",\"support\":[" +
                    std::to_string(support_.is_empty() ? 0 : support_.lo) + "," +
                    std::to_string(support_.is_empty() ? 0 : support_.hi) + "],\"diag\":[";
    for (std::uint64_t j = 0; j < diag_.size(); ++j) {
        if (j) s += ",";
        s += "[" + fmt_double(diag_[j].real()) + "," + fmt_double(diag_[j].imag()) + "]";
    }
    return s + "]}";
}

XMonomial multiply_monomials(const XMonomial& a, const XMonomial& b) {
    if (a.length() != b.length())
        throw std::invalid_argument("multiply_monomials: chain length mismatch");
    Interval hull = a.support().hull(b.support());
    std::uint64_t active = a.active() ^ b.active();
    std::vector<cplx> diag(1ull << hull.size());
    std::uint64_t fa = a.local_flip_mask(b.active());
    for (std::uint64_t j = 0; j < diag.size(); ++j) {
        std::uint64_t ja = restrict_local(j, hull, a.support());
        std::uint64_t jb = restrict_local(j, hull, b.support());
        diag[j] = a.value_local(ja ^ fa) * b.value_local(jb);
    }
    return XMonomial(a.length(), active, hull, std::move(diag));
}

std::optional<XMonomial> commutator_monomials(const XMonomial& a, const XMonomial& b) {
    if (a.length() != b.length())
        throw std::invalid_argument("commutator_monomials: chain length mismatch");
    // Operators commute unless an active spin of one lies in the support of
    // the other.
    bool touch = (a.active() & interval_mask(b.support())) != 0 ||
                 (b.active() & interval_mask(a.support())) != 0;
    if (!touch) return std::nullopt;
    Interval hull = a.support().hull(b.support());
    std::uint64_t active = a.active() ^ b.active();
    std::vector<cplx> diag(1ull << hull.size());
    std::uint64_t fa = a.local_flip_mask(b.active());
    std::uint64_t fb = b.local_flip_mask(a.active());
    for (std::uint64_t j = 0; j < diag.size(); ++j) {
        std::uint64_t ja = restrict_local(j, hull, a.support());
        std::uint64_t jb = restrict_local(j, hull, b.support());
        diag[j] = a.value_local(ja ^ fa) * b.value_local(jb) -
                  b.value_local(jb ^ fb) * a.value_local(ja);
    }
    return XMonomial(a.length(), active, hull, std::move(diag));
}

const XMonomial* OperatorSum::find(std::uint64_t active) const {
    auto it = terms_.find(active);
    return it == terms_.end() ? nullptr : &it->second;
}

void OperatorSum::add_term(XMonomial m, double drop_tol) {
    if (m.length() != L_) throw std::invalid_argument("OperatorSum::add_term: length mismatch");
    auto it = terms_.find(m.active());
    if (it == terms_.end()) {
        if (m.norm() <= drop_tol) return;
        terms_.emplace(m.active(), std::move(m));
    } else {
        it->second.accumulate(m);
        if (it->second.norm() <= drop_tol) terms_.erase(it);
    }
}

void OperatorSum::add(const OperatorSum& other, cplx factor, double drop_tol) {
    for (const auto& [act, m] : other.terms()) add_term(m.scaled(factor), drop_tol);
}

OperatorSum OperatorSum::scaled(cplx factor) const {
    OperatorSum out(L_, parity_);
    for (const auto& [act, m] : terms_) out.terms_.emplace(act, m.scaled(factor));
    return out;
}

OperatorSum OperatorSum::diagonal_part() const {
    OperatorSum out(L_, parity_);
    auto it = terms_.find(0);
    if (it != terms_.end()) out.terms_.emplace(0, it->second);
    return out;
}

OperatorSum OperatorSum::offdiagonal_part() const {
    OperatorSum out(L_, parity_);
    for (const auto& [act, m] : terms_)
        if (act != 0) out.terms_.emplace(act, m);
    return out;
}

bool OperatorSum::is_diagonal() const {
    for (const auto& [act, m] : terms_)
        if (act != 0) return false;
    return true;
}

double OperatorSum::norm_bound() const {
    double s = 0.0;
    for (const auto& [act, m] : terms_) s += m.norm();
    return s;
}

double OperatorSum::max_term_norm() const {
    double s = 0.0;
    for (const auto& [act, m] : terms_) s = std::max(s, m.norm());
    return s;
}

bool OperatorSum::is_hermitian(double tol) const {
    for (const auto& [act, m] : terms_)
        if (!m.is_hermitian(tol)) return false;
    return true;
}

bool OperatorSum::is_skew_hermitian(double tol) const {
    for (const auto& [act, m] : terms_)
        if (!m.is_skew_hermitian(tol)) return false;
    return true;
}

double OperatorSum::diagonal_value(std::uint64_t dense_index) const {
    return diagonal_value_c(dense_index).real();
}

cplx OperatorSum::diagonal_value_c(std::uint64_t dense_index) const {
    if (!is_diagonal()) throw std::logic_error("diagonal_value on non-diagonal operator");
    cplx v = 0.0;
    for (const auto& [act, m] : terms_) v += m.value_global(dense_index);
    return v;
}

std::string OperatorSum::json() const {
    std::string s = "{\"L\":" + std::to_string(L_) + ",\"terms\":[";
    bool first = true;
    for (const auto& [act, m] : terms_) {
        if (!first) s += ",";
        first = false;
        s += m.json();
    }
    return s + "]}";
}

OperatorSum commutator(const OperatorSum& a, const OperatorSum& b, double drop_tol) {
    if (a.length() != b.length()) throw std::invalid_argument("commutator: length mismatch");
    OperatorSum out(a.length());
    for (const auto& [aa, ma] : a.terms())
        for (const auto& [ab, mb] : b.terms())
            if (auto c = commutator_monomials(ma, mb)) out.add_term(std::move(*c), drop_tol);
    return out;
}

OperatorSum multiply(const OperatorSum& a, const OperatorSum& b, double drop_tol) {
    if (a.length() != b.length()) throw std::invalid_argument("multiply: length mismatch");
    OperatorSum out(a.length());
    for (const auto& [aa, ma] : a.terms())
        for (const auto& [ab, mb] : b.terms())
            out.add_term(multiply_monomials(ma, mb), drop_tol);
    return out;
}

XMonomial spin_flip_derivative(std::uint64_t active, const XMonomial& f) {
    if (!f.is_diagonal()) throw std::invalid_argument("spin_flip_derivative: non-diagonal input");
    std::uint64_t fm = f.local_flip_mask(active);
    std::vector<cplx> diag(f.table().size());
    for (std::uint64_t j = 0; j < diag.size(); ++j)
        diag[j] = f.value_local(j ^ fm) - f.value_local(j);
    return XMonomial(f.length(), 0, f.support(), std::move(diag));
}

OperatorSum spin_flip_derivative(std::uint64_t active, const OperatorSum& f) {
    if (!f.is_diagonal()) throw std::invalid_argument("spin_flip_derivative: non-diagonal input");
    OperatorSum out(f.length());
    for (const auto& [act, m] : f.terms()) {
        XMonomial d = spin_flip_derivative(active, m);
        if (d.norm() > 0.0) out.add_term(std::move(d));
    }
    return out;
}

DenseMatrix to_dense(const XMonomial& m) {
    int L = m.length();
    std::uint64_t dim = 1ull << L;
    DenseMatrix M = DenseMatrix::Zero(dim, dim);
    std::uint64_t flip = site_mask_to_dense(m.active(), L);
    for (std::uint64_t j = 0; j < dim; ++j) M(j ^ flip, j) += m.value_global(j);
    return M;
}

DenseMatrix to_dense(const OperatorSum& op) {
    int L = op.length();
    if (L > 20) throw std::invalid_argument("to_dense: chain too long for a dense matrix");
    std::uint64_t dim = 1ull << L;
    DenseMatrix M = DenseMatrix::Zero(dim, dim);
    for (const auto& [act, m] : op.terms()) {
        std::uint64_t flip = site_mask_to_dense(act, L);
        for (std::uint64_t j = 0; j < dim; ++j) M(j ^ flip, j) += m.value_global(j);
    }
    return M;
}

OperatorSum decompose_dense(const DenseMatrix& M, Interval I, int L, Parity parity,
                            double drop_tol) {
    std::uint64_t dim = 1ull << I.size();
    if (static_cast<std::uint64_t>(M.rows()) != dim ||
        static_cast<std::uint64_t>(M.cols()) != dim)
        throw std::invalid_argument("decompose_dense: matrix size does not match interval");
    if (parity == Parity::hermitian) {
        double dev = (M - M.adjoint()).cwiseAbs().maxCoeff();
        if (dev > 1e-10 * std::max(1.0, M.cwiseAbs().maxCoeff()))
            throw std::invalid_argument("decompose_dense: non-hermitian input");
    }
    OperatorSum out(L, parity);
    // Subsets S of I; local dense flip for site x is bit (hi-x), matching the
    // diagonal table layout, so f_S(sigma) = M(flip_S sigma, sigma).
    int w = I.size();
    for (std::uint64_t sub = 0; sub < (1ull << w); ++sub) {
        std::uint64_t site_mask = 0;
        std::uint64_t flip = 0;
        for (int b = 0; b < w; ++b)
            if (sub & (1ull << b)) {
                int x = I.hi - b;
                site_mask |= 1ull << (x - 1);
                flip |= 1ull << b;
            }
        std::vector<cplx> diag(dim);
        double nrm = 0.0;
        for (std::uint64_t j = 0; j < dim; ++j) {
            diag[j] = M(j ^ flip, j);
            nrm = std::max(nrm, std::abs(diag[j]));
        }
        if (nrm <= drop_tol || nrm == 0.0) continue;
        out.add_term(XMonomial(L, site_mask, I, std::move(diag)));
    }
    return out;
}

NormResult operator_norm(const OperatorSum& op, int dense_cutoff_L) {
    if (op.empty()) return {0.0, true};
    if (op.term_count() == 1) return {op.terms().begin()->second.norm(), true};
    if (op.length() > dense_cutoff_L) return {op.norm_bound(), false};
    DenseMatrix M = to_dense(op);
    if (op.parity() == Parity::hermitian || op.parity() == Parity::skew_hermitian) {
        DenseMatrix H = op.parity() == Parity::hermitian ? M : DenseMatrix(cplx(0, 1) * M);
        Eigen::SelfAdjointEigenSolver<DenseMatrix> es(H, Eigen::EigenvaluesOnly);
        const auto& ev = es.eigenvalues();
        return {std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1))), true};
    }
    DenseMatrix G = M.adjoint() * M;
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(G, Eigen::EigenvaluesOnly);
    return {std::sqrt(std::max(0.0, es.eigenvalues()(es.eigenvalues().size() - 1))), true};
}

}  // namespace spinflow
