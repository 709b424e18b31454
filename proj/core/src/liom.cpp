#include "spinflow/liom.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spinflow/oracle.hpp"
#include "spinflow/rng.hpp"

namespace spinflow {

namespace {

double spectral_norm(const DenseMatrix& M) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(M.adjoint() * M, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues()(es.eigenvalues().size() - 1)));
}

DenseMatrix exp_minus(const OperatorSum& A, int L) {
    // iA is hermitian; e^{-A} = Q e^{i Lambda} Q^dagger with iA = Q Lambda Q^dagger.
    DenseMatrix Ad = to_dense(A);
    DenseMatrix H = cplx(0, 1) * Ad;
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(H);
    if (es.info() != Eigen::Success) throw std::runtime_error("build_unitary: eigensolver failed");
    std::uint64_t dim = 1ull << L;
    DenseMatrix phase = DenseMatrix::Zero(dim, dim);
    for (std::uint64_t i = 0; i < dim; ++i) {
        double lam = es.eigenvalues()(i);
        phase(i, i) = cplx(std::cos(lam), std::sin(lam));
    }
    return es.eigenvectors() * phase * es.eigenvectors().adjoint();
}

}  // namespace

UnitaryProduct build_unitary(const FlowState& state, int dense_budget_L) {
    if (state.L > dense_budget_L)
        throw BudgetExceeded("build_unitary: dimension exceeds the dense budget");
    UnitaryProduct up;
    up.L = state.L;
    up.factors = state.generators;
    std::uint64_t dim = 1ull << state.L;
    up.dense = DenseMatrix::Identity(dim, dim);
    for (const OperatorSum& A : state.generators) {
        if (A.empty()) continue;
        up.dense = up.dense * exp_minus(A, state.L);
    }
    return up;
}

LiomReport liom_check(const DenseMatrix& U, const DenseMatrix& H) {
    const std::uint64_t dim = U.rows();
    int L = 0;
    while ((1ull << L) < dim) ++L;
    LiomReport rep;
    std::vector<DenseMatrix> zs(L);
    DenseMatrix eye = DenseMatrix::Identity(dim, dim);
    for (int x = 1; x <= L; ++x) {
        DenseMatrix Z = DenseMatrix::Zero(dim, dim);
        for (std::uint64_t i = 0; i < dim; ++i) Z(i, i) = sigma_at(i, L, x);
        zs[x - 1] = U * Z * U.adjoint();
        rep.h_residuals.push_back(spectral_norm(H * zs[x - 1] - zs[x - 1] * H));
        rep.max_involution_dev =
            std::max(rep.max_involution_dev, (zs[x - 1] * zs[x - 1] - eye).cwiseAbs().maxCoeff());
    }
    for (int a = 0; a < L; ++a)
        for (int b = a + 1; b < L; ++b)
            rep.max_pair_commutator =
                std::max(rep.max_pair_commutator, spectral_norm(zs[a] * zs[b] - zs[b] * zs[a]));

    // Joint eigenprojections P_sigma = prod_x (1 + sigma_x Z~_x)/2 on a sample
    // of configurations: rank one and idempotent.
    RngStream rng(rng_key(0x110511, dim));
    std::vector<std::uint64_t> picks = {0ull, dim - 1};
    for (int t = 0; t < 14 && picks.size() < dim; ++t)
        picks.push_back(rng.next_u64() % dim);
    for (std::uint64_t idx : picks) {
        DenseMatrix P = eye;
        for (int x = 1; x <= L; ++x) {
            double s = sigma_at(idx, L, x);
            P = P * (0.5 * (eye + s * zs[x - 1]));
        }
        rep.max_proj_trace_dev =
            std::max(rep.max_proj_trace_dev, std::abs(P.trace().real() - 1.0));
        rep.max_proj_idem_dev = std::max(rep.max_proj_idem_dev, (P * P - P).cwiseAbs().maxCoeff());
    }
    return rep;
}

std::optional<DenseMatrix> oracle_unitary(const DenseMatrix& H) {
    Spectrum sp = dense_spectrum(DenseOperator{H, true}, true);
    const std::uint64_t dim = H.rows();
    DenseMatrix U = DenseMatrix::Zero(dim, dim);
    std::vector<bool> claimed(dim, false);
    for (std::uint64_t i = 0; i < dim; ++i) {
        Eigen::VectorXcd v = sp.eigenvectors.col(i);
        std::uint64_t best = 0;
        double best_w = -1.0;
        for (std::uint64_t j = 0; j < dim; ++j) {
            double w = std::norm(v(j));
            if (w > best_w) {
                best_w = w;
                best = j;
            }
        }
        if (best_w < 0.5 || claimed[best]) return std::nullopt;
        claimed[best] = true;
        cplx ph = v(best) / std::abs(v(best));
        U.col(best) = v / ph;
    }
    return U;
}

DenseMatrix normalized_partial_trace(const DenseMatrix& M, std::uint64_t keep_sites, int L) {
    const std::uint64_t dim = 1ull << L;
    if (static_cast<std::uint64_t>(M.rows()) != dim)
        throw std::invalid_argument("normalized_partial_trace: size mismatch");
    std::uint64_t keep_dense = site_mask_to_dense(keep_sites, L);
    int nk = __builtin_popcountll(keep_dense);
    int nc = L - nk;
    // Enumerate kept-bit patterns and complement patterns by scattering.
    std::vector<std::uint64_t> keep_bits, comp_bits;
    for (int p = L - 1; p >= 0; --p) {
        if (keep_dense & (1ull << p))
            keep_bits.push_back(1ull << p);
        else
            comp_bits.push_back(1ull << p);
    }
    auto scatter = [](std::uint64_t v, const std::vector<std::uint64_t>& bits) {
        std::uint64_t out = 0;
        for (std::size_t i = 0; i < bits.size(); ++i)
            if (v & (1ull << i)) out |= bits[i];
        return out;
    };
    const std::uint64_t nkeep = 1ull << nk;
    const std::uint64_t ncomp = 1ull << nc;
    DenseMatrix T = DenseMatrix::Zero(nkeep, nkeep);
    for (std::uint64_t a = 0; a < nkeep; ++a) {
        std::uint64_t sa = scatter(a, keep_bits);
        for (std::uint64_t b = 0; b < nkeep; ++b) {
            std::uint64_t sb = scatter(b, keep_bits);
            cplx acc = 0.0;
            for (std::uint64_t c = 0; c < ncomp; ++c) {
                std::uint64_t sc = scatter(c, comp_bits);
                acc += M(sa | sc, sb | sc);
            }
            T(a, b) = acc / static_cast<double>(ncomp);
        }
    }
    DenseMatrix out = DenseMatrix::Zero(dim, dim);
    for (std::uint64_t a = 0; a < nkeep; ++a) {
        std::uint64_t sa = scatter(a, keep_bits);
        for (std::uint64_t b = 0; b < nkeep; ++b) {
            std::uint64_t sb = scatter(b, keep_bits);
            for (std::uint64_t c = 0; c < ncomp; ++c) {
                std::uint64_t sc = scatter(c, comp_bits);
                out(sa | sc, sb | sc) = T(a, b);
            }
        }
    }
    return out;
}

LocalityProfile locality_profile(const DenseMatrix& U, const DenseMatrix& O, Interval support,
                                 int L, ConjugationDirection direction) {
    DenseMatrix Os = direction == ConjugationDirection::conjugate ? DenseMatrix(U * O * U.adjoint())
                                                                  : DenseMatrix(U.adjoint() * O * U);
    LocalityProfile prof;
    DenseMatrix reconstructed = DenseMatrix::Zero(Os.rows(), Os.cols());
    DenseMatrix prev;
    int n_max = std::max(support.lo - 1, L - support.hi);
    for (int n = 0; n <= n_max; ++n) {
        Interval Xn{std::max(1, support.lo - n), std::min(L, support.hi + n)};
        DenseMatrix tr = normalized_partial_trace(Os, interval_mask(Xn), L);
        DenseMatrix tail = n == 0 ? tr : DenseMatrix(tr - prev);
        prof.tails.push_back(spectral_norm(tail));
        reconstructed += tail;
        prev = std::move(tr);
    }
    prof.reconstruction_error = (reconstructed - Os).cwiseAbs().maxCoeff();
    fit_exponential_tail(prof.tails, 1e-13, &prof.fit_prefactor, &prof.fit_rate);
    return prof;
}

void fit_exponential_tail(const std::vector<double>& tails, double noise_floor, double* prefactor,
                          double* rate) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t n = 0; n < tails.size(); ++n)
        if (tails[n] > noise_floor) pts.push_back({static_cast<double>(n), std::log(tails[n])});
    if (pts.size() < 2) {
        *prefactor = tails.empty() ? 0.0 : tails[0];
        *rate = 0.0;
        return;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto& [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double n = static_cast<double>(pts.size());
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double icept = (sy - slope * sx) / n;
    *rate = -slope;
    *prefactor = std::exp(icept);
}

int DiagonalExpansion::diameter(std::uint64_t site_mask) {
    if (site_mask == 0) return 0;
    Interval h = mask_hull(site_mask);
    return h.hi - h.lo;
}

std::map<int, double> DiagonalExpansion::max_abs_by_diameter() const {
    std::map<int, double> out;
    for (std::uint64_t s = 1; s < couplings.size(); ++s) {
        int d = diameter(s);
        auto [it, inserted] = out.try_emplace(d, 0.0);
        it->second = std::max(it->second, std::abs(couplings[s]));
    }
    return out;
}

double DiagonalExpansion::sum_of_squares() const {
    double acc = 0.0;
    for (double d : couplings) acc += d * d;
    return acc;
}

DiagonalExpansion extract_diagonal_couplings(const OperatorSum& E) {
    if (!E.is_diagonal())
        throw std::invalid_argument("extract_diagonal_couplings: non-diagonal input");
    const int L = E.length();
    const std::uint64_t dim = 1ull << L;
    std::vector<double> vals(dim);
    for (std::uint64_t i = 0; i < dim; ++i) vals[i] = E.diagonal_value(i);
    // In-place Walsh-Hadamard transform over the dense index bits:
    // W[m] = sum_i vals[i] (-1)^{popcount(i & m)}.
    for (std::uint64_t len = 1; len < dim; len <<= 1)
        for (std::uint64_t i = 0; i < dim; i += len << 1)
            for (std::uint64_t j = i; j < i + len; ++j) {
                double u = vals[j], v = vals[j + len];
                vals[j] = u + v;
                vals[j + len] = u - v;
            }
    DiagonalExpansion out;
    out.L = L;
    out.couplings.resize(dim);
    for (std::uint64_t s = 0; s < dim; ++s) {
        std::uint64_t dense = site_mask_to_dense(s, L);
        double sign = (__builtin_popcountll(s) % 2 == 0) ? 1.0 : -1.0;
        out.couplings[s] = sign * vals[dense] / static_cast<double>(dim);
    }
    return out;
}

}  // namespace spinflow
