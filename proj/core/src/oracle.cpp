#include "spinflow/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spinflow/rng.hpp"

namespace spinflow {

DenseOperator DenseOperator::from_matrix(DenseMatrix M, bool claim_hermitian, double tol) {
    if (claim_hermitian) {
        double dev = (M - M.adjoint()).cwiseAbs().maxCoeff();
        if (dev > tol * std::max(1.0, M.cwiseAbs().maxCoeff()))
            throw std::invalid_argument("DenseOperator: matrix is not hermitian");
    }
    return DenseOperator{std::move(M), claim_hermitian};
}

Spectrum dense_spectrum(const DenseOperator& M, bool with_vectors, double residual_tol) {
    if (!M.hermitian) throw std::invalid_argument("dense_spectrum: non-hermitian input");
    double dev = (M.matrix - M.matrix.adjoint()).cwiseAbs().maxCoeff();
    if (dev > 1e-10 * std::max(1.0, M.matrix.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("dense_spectrum: matrix is not hermitian");
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(
        M.matrix, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw std::runtime_error("dense_spectrum: solver failed");
    Spectrum out;
    out.eigenvalues = es.eigenvalues();
    if (with_vectors) {
        out.eigenvectors = es.eigenvectors();
        for (int i = 0; i < out.eigenvalues.size(); ++i) {
            double res = (M.matrix * out.eigenvectors.col(i) -
                          out.eigenvalues(i) * out.eigenvectors.col(i))
                             .norm();
            if (res > residual_tol * std::max(1.0, std::abs(out.eigenvalues(i))))
                throw std::runtime_error("dense_spectrum: eigenpair residual too large");
        }
    }
    return out;
}

double spectrum_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw std::invalid_argument("spectrum_distance: size mismatch");
    double m = 0.0;
    for (int i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a(i) - b(i)));
    return m;
}

SpectralLemmaResult spectral_lemma_check(int d, double eps, int n_trials, std::uint64_t seed) {
    if (eps < 0.0 || eps >= 1.0) throw std::invalid_argument("spectral_lemma_check: need 0<=eps<1");
    SpectralLemmaResult out;
    out.constant = 4.0 / (std::sqrt(2.0) - 1.0);
    const double two_pi = 6.283185307179586476925286766559;
    for (int trial = 0; trial < n_trials; ++trial) {
        RngStream rng(rng_key(seed, 0x5eCull, static_cast<std::uint64_t>(trial)));
        Eigen::VectorXd diag(d);
        for (int i = 0; i < d; ++i) diag(i) = rng.next_uniform(-1.0, 1.0);
        DenseMatrix M = DenseMatrix::Zero(d, d);
        for (int i = 0; i < d; ++i) M(i, i) = diag(i);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                if (i == j) continue;
                double mag = rng.next_unit();
                double phase = two_pi * rng.next_unit();
                if (j > i) {
                    M(i, j) = cplx(mag * std::cos(phase), mag * std::sin(phase));
                } else {
                    double cap = std::pow(eps, static_cast<double>(i - j + 1));
                    M(i, j) = cplx(mag * cap * std::cos(phase), mag * cap * std::sin(phase));
                }
            }
        Eigen::ComplexEigenSolver<DenseMatrix> es(M, false);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("spectral_lemma_check: solver failed");
        for (int i = 0; i < d; ++i) {
            cplx lambda = es.eigenvalues()(i);
            double dist = 1e300;
            for (int k = 0; k < d; ++k) dist = std::min(dist, std::abs(lambda - diag(k)));
            out.max_distance = std::max(out.max_distance, dist);
            if (eps > 0.0) out.max_ratio = std::max(out.max_ratio, dist / eps);
        }
    }
    return out;
}

namespace {

// Scalar model of the truncated denominators: mass m(u',v') sits at exact
// offsets (u',v'), D_{u,v} = base + sum_{u'<=u, v'<=v} m(u',v'), and the
// underlined sums pick out one exact offset. Increments are scaled so all
// partial sums stay well away from zero; a floor at 1e-6 triggers a resample.
struct DenominatorFamily {
    double base = 0.0;
    std::vector<std::vector<double>> mass;  // (R+1) x (R+1)

    double D(int u, int v) const {
        if (u < 0 || v < 0) return 1.0;
        double s = base;
        for (int a = 0; a <= u; ++a)
            for (int b = 0; b <= v; ++b) s += mass[a][b];
        return s;
    }
    double D_under_u(int u, int v) const {  // min offset exactly u
        double s = 0.0;
        for (int b = 0; b <= v; ++b) s += mass[u][b];
        return s;
    }
    double D_under_v(int u, int v) const {  // max offset exactly v
        double s = 0.0;
        for (int a = 0; a <= u; ++a) s += mass[a][v];
        return s;
    }
};

}  // namespace

double resolvent_identity_check(int R, int n_trials, std::uint64_t seed) {
    if (R < 1) throw std::invalid_argument("resolvent_identity_check: need R >= 1");
    double worst = 0.0;
    for (int trial = 0; trial < n_trials; ++trial) {
        DenominatorFamily fam;
        fam.mass.assign(R + 1, std::vector<double>(R + 1, 0.0));
        double scale = 0.5 / ((R + 1.0) * (R + 1.0));
        bool ok = false;
        for (int attempt = 0; attempt < 64 && !ok; ++attempt) {
            RngStream rng(rng_key(seed, 0x4e5ull, static_cast<std::uint64_t>(trial),
                                  static_cast<std::uint64_t>(attempt)));
            fam.base = rng.next_uniform(1.0, 2.0) * (rng.next_unit() < 0.5 ? -1.0 : 1.0);
            for (int a = 0; a <= R; ++a)
                for (int b = 0; b <= R; ++b) fam.mass[a][b] = rng.next_uniform(-scale, scale);
            ok = true;
            for (int u = 0; u <= R && ok; ++u)
                for (int v = 0; v <= R && ok; ++v)
                    if (std::abs(fam.D(u, v)) < 1e-6) ok = false;
        }
        if (!ok) throw std::runtime_error("resolvent_identity_check: resampling failed");

        double lhs = 1.0 / fam.D(R, R);
        double rhs = 1.0 / fam.D(0, 0);
        for (int v = 1; v <= R; ++v)
            rhs -= fam.D_under_v(0, v) / (fam.D(0, v) * fam.D(0, v - 1));
        for (int u = 1; u <= R; ++u)
            rhs -= fam.D_under_u(u, R) / (fam.D(u, 0) * fam.D(u - 1, 0));
        for (int u = 1; u <= R; ++u)
            for (int v = 1; v <= R; ++v) {
                rhs += fam.D_under_u(u, R) * fam.D_under_v(u, v) /
                       (fam.D(u, v) * fam.D(u, v - 1) * fam.D(u - 1, v));
                rhs += fam.D_under_u(u, R) * fam.D_under_v(u - 1, v) /
                       (fam.D(u, v - 1) * fam.D(u - 1, v) * fam.D(u - 1, v - 1));
            }
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

DenseMatrix random_unitary(int dim, std::uint64_t seed) {
    RngStream rng(rng_key(seed, 0xd1ceull));
    DenseMatrix A(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) A(i, j) = cplx(rng.next_gaussian(), rng.next_gaussian());
    Eigen::HouseholderQR<DenseMatrix> qr(A);
    DenseMatrix Q = qr.householderQ();
    return Q;
}

}  // namespace spinflow
