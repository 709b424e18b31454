#include "spinflow/transport.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spinflow/diagrams.hpp"
#include "spinflow/parallel.hpp"
#include "spinflow/rng.hpp"

namespace spinflow {

namespace {

DenseMatrix kron(const DenseMatrix& A, const DenseMatrix& B) {
    DenseMatrix C(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            C.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return C;
}

double spectral_norm_hermitian(const DenseMatrix& M) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(M, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

}  // namespace

void BathSpec::validate() const {
    auto check_herm = [](const DenseMatrix& M, const char* name) {
        if ((M - M.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff()))
            throw std::invalid_argument(std::string("BathSpec: ") + name + " is not hermitian");
    };
    check_herm(H_Bl, "H_Bl");
    check_herm(H_Br, "H_Br");
    check_herm(V_Bl, "V_Bl");
    check_herm(V_Br, "V_Br");
    if (spectral_norm_hermitian(V_Bl) > 1.0 + 1e-12 || spectral_norm_hermitian(V_Br) > 1.0 + 1e-12)
        throw std::invalid_argument("BathSpec: coupling norms must be <= 1");
}

BathSpec BathSpec::family(const std::string& name, std::uint64_t seed) {
    BathSpec b;
    int dim;
    if (name == "two-level") {
        dim = 2;
    } else if (name == "four-level") {
        dim = 4;
    } else if (name == "none") {
        dim = 1;
    } else {
        throw std::invalid_argument("unknown bath family: " + name);
    }
    b.dim_l = b.dim_r = dim;
    auto make_side = [&](std::uint64_t salt) {
        RngStream rng(rng_key(seed, 0xba73, salt));
        DenseMatrix H = DenseMatrix::Zero(dim, dim);
        for (int i = 0; i < dim; ++i) H(i, i) = rng.next_uniform(-1.0, 1.0);
        DenseMatrix V = DenseMatrix::Zero(dim, dim);
        if (dim >= 2) {
            // Off-diagonal hopping ladder, rescaled to unit norm.
            for (int i = 0; i + 1 < dim; ++i) {
                double m = rng.next_uniform(0.2, 1.0);
                V(i, i + 1) = m;
                V(i + 1, i) = m;
            }
            double nrm = spectral_norm_hermitian(V);
            if (nrm > 0.0) V /= nrm;
        }
        return std::make_pair(H, V);
    };
    std::tie(b.H_Bl, b.V_Bl) = make_side(1);
    std::tie(b.H_Br, b.V_Br) = make_side(2);
    return b;
}

TotalSystem build_total_system(const ModelParams& params, const DisorderSample& sample,
                               const BathSpec& bath, std::int64_t dense_budget) {
    params.validate();
    bath.validate();
    TotalSystem sys;
    sys.L = params.L;
    sys.dim_l = bath.dim_l;
    sys.dim_r = bath.dim_r;
    const std::int64_t sys_dim = 1ll << params.L;
    sys.dim = bath.dim_l * sys_dim * bath.dim_r;
    if (sys.dim > dense_budget)
        throw BudgetExceeded("build_total_system: dimension exceeds the dense budget");

    DenseMatrix Il = DenseMatrix::Identity(bath.dim_l, bath.dim_l);
    DenseMatrix Ir = DenseMatrix::Identity(bath.dim_r, bath.dim_r);
    DenseMatrix Is = DenseMatrix::Identity(sys_dim, sys_dim);

    // System terms H_I = H^0_I + (gamma/2)^{|I|} W_I, split by min I <= L/2.
    DenseMatrix Hs_left = DenseMatrix::Zero(sys_dim, sys_dim);
    DenseMatrix Hs_right = DenseMatrix::Zero(sys_dim, sys_dim);
    auto deposit = [&](const OperatorSum& term, int min_I) {
        DenseMatrix M = to_dense(term);
        if (2 * min_I <= params.L)
            Hs_left += M;
        else
            Hs_right += M;
    };
    for (int x = 1; x <= params.L; ++x) {
        OperatorSum t(params.L);
        t.add_term(XMonomial::pauli_z(params.L, x).scaled(sample.theta[x - 1]));
        deposit(t, x);
    }
    for (int x = 1; x + 1 <= params.L; ++x) {
        OperatorSum t(params.L);
        t.add_term(multiply_monomials(XMonomial::pauli_z(params.L, x),
                                      XMonomial::pauli_z(params.L, x + 1))
                       .scaled(params.kappa[x - 1]));
        deposit(t, x);
    }
    if (params.gamma > 0.0) {
        for (const IntervalTerm& it : generate_interval_terms(params, sample)) {
            double w = std::pow(params.gamma / 2.0, it.I.size());
            OperatorSum dec = decompose_dense(w * it.W, it.I, params.L, Parity::hermitian);
            deposit(dec, it.I.lo);
        }
    }

    DenseMatrix X1 = DenseMatrix::Zero(sys_dim, sys_dim);
    DenseMatrix XL = DenseMatrix::Zero(sys_dim, sys_dim);
    {
        OperatorSum x1(params.L), xl(params.L);
        x1.add_term(XMonomial::pauli_x(params.L, 1));
        xl.add_term(XMonomial::pauli_x(params.L, params.L));
        X1 = to_dense(x1);
        XL = to_dense(xl);
    }

    sys.H_l = kron(bath.H_Bl, kron(Is, Ir)) + kron(bath.V_Bl, kron(X1, Ir)) +
              kron(Il, kron(Hs_left, Ir));
    sys.H_r = kron(Il, kron(Is, bath.H_Br)) + kron(Il, kron(XL, bath.V_Br)) +
              kron(Il, kron(Hs_right, Ir));
    sys.H_tot = sys.H_l + sys.H_r;
    return sys;
}

DenseMatrix current_operator(const DenseMatrix& H_l, const DenseMatrix& H_r) {
    return cplx(0, 1) * (H_r * H_l - H_l * H_r);
}

DenseMatrix initial_density(const TotalSystem& sys, const BathSpec& bath, std::uint64_t seed) {
    const std::int64_t sys_dim = 1ll << sys.L;
    DenseMatrix Is = DenseMatrix::Identity(sys_dim, sys_dim) / static_cast<double>(sys_dim);
    auto thermal = [](const DenseMatrix& H, double beta) {
        Eigen::SelfAdjointEigenSolver<DenseMatrix> es(H);
        DenseMatrix rho = DenseMatrix::Zero(H.rows(), H.cols());
        double Z = 0.0;
        for (Eigen::Index i = 0; i < H.rows(); ++i) Z += std::exp(-beta * es.eigenvalues()(i));
        for (Eigen::Index i = 0; i < H.rows(); ++i)
            rho += (std::exp(-beta * es.eigenvalues()(i)) / Z) *
                   (es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint());
        return rho;
    };
    switch (bath.recipe) {
        case BathState::thermal:
            return kron(thermal(bath.H_Bl, bath.beta_l), kron(Is, thermal(bath.H_Br, bath.beta_r)));
        case BathState::maximally_mixed:
            return DenseMatrix::Identity(sys.dim, sys.dim) / static_cast<double>(sys.dim);
        case BathState::pure_random: {
            RngStream rng(rng_key(seed, 0xa5));
            Eigen::VectorXcd v(sys.dim);
            for (std::int64_t i = 0; i < sys.dim; ++i)
                v(i) = cplx(rng.next_gaussian(), rng.next_gaussian());
            v /= v.norm();
            return v * v.adjoint();
        }
    }
    throw std::logic_error("initial_density: bad recipe");
}

CurrentTrace average_current(const TotalSystem& sys, const DenseMatrix& J,
                             const DenseMatrix& rho0, const std::vector<double>& times) {
    double tr = rho0.trace().real();
    if (std::abs(tr - 1.0) > 1e-9)
        throw std::invalid_argument("average_current: rho0 must have unit trace");
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es_rho(rho0, Eigen::EigenvaluesOnly);
    CurrentTrace out;
    out.min_eigenvalue_rho = es_rho.eigenvalues()(0);
    if (out.min_eigenvalue_rho < -1e-10)
        throw std::invalid_argument("average_current: rho0 is not positive");

    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sys.H_tot);
    const DenseMatrix& Q = es.eigenvectors();
    const Eigen::VectorXd& lam = es.eigenvalues();
    DenseMatrix rhoE = Q.adjoint() * rho0 * Q;
    DenseMatrix JE = Q.adjoint() * J * Q;
    DenseMatrix HlE = Q.adjoint() * sys.H_l * Q;

    double e_tot0 = (rhoE * (Q.adjoint() * sys.H_tot * Q)).trace().real();
    double hl0 = (rhoE * HlE).trace().real();

    const Eigen::Index n = lam.size();
    for (double t : times) {
        // <J(t)> = sum_{mn} rho_{nm} J_{mn} e^{i (lam_m - lam_n) t}.
        cplx inst = 0.0;
        cplx avg = 0.0;
        cplx hl_t = 0.0;
        cplx e_tot = 0.0;
        for (Eigen::Index m = 0; m < n; ++m)
            for (Eigen::Index k = 0; k < n; ++k) {
                cplx w = rhoE(k, m) * JE(m, k);
                cplx wh = rhoE(k, m) * HlE(m, k);
                double dl = lam(m) - lam(k);
                cplx phase(std::cos(dl * t), std::sin(dl * t));
                inst += w * phase;
                hl_t += wh * phase;
                if (m == k) e_tot += rhoE(k, m) * lam(m);
                if (t > 0.0) {
                    // (1/t) int_0^t e^{i dl s} ds
                    cplx factor = dl == 0.0
                                      ? cplx(1.0, 0.0)
                                      : (phase - cplx(1.0, 0.0)) / (cplx(0.0, 1.0) * dl * t);
                    avg += w * factor;
                } else {
                    avg += w;
                }
            }
        out.times.push_back(t);
        out.instantaneous.push_back(inst.real());
        out.running_average.push_back(avg.real());
        out.energy_l.push_back(hl_t.real());
        out.energy_drift = std::max(out.energy_drift, std::abs(e_tot.real() - e_tot0));
    }
    if (!times.empty()) {
        double T = times.back();
        out.average_current = out.running_average.back();
        if (T > 0.0)
            out.conservation_residual =
                std::abs(out.average_current - (out.energy_l.back() - hl0) / T);
    }
    return out;
}

SweepSummary length_sweep(const ModelParams& base, const BathSpec& bath,
                          const std::string& bath_family_name, const std::vector<int>& lengths,
                          double T, int n_seeds, std::int64_t dense_budget) {
    SweepSummary out;
    out.lengths = lengths;
    for (int L : lengths) {
        std::vector<double> abs_currents(n_seeds);
        std::vector<SweepRow> rows(n_seeds);
        parallel_for(n_seeds, 0, [&](std::size_t s) {
            ModelParams p = ModelParams::with_random_kappa(L, base.gamma, base.C_kappa,
                                                           std::min(base.I_max, L), base.ensemble,
                                                           base.seed);
            DisorderSample sample = sample_disorder(p, static_cast<std::uint64_t>(s));
            TotalSystem sys = build_total_system(p, sample, bath, dense_budget);
            DenseMatrix J = current_operator(sys.H_l, sys.H_r);
            DenseMatrix rho0 = initial_density(sys, bath, base.seed + s);
            CurrentTrace trace = average_current(sys, J, rho0, {T});
            abs_currents[s] = std::abs(trace.average_current);
            rows[s] = SweepRow{L,
                               static_cast<std::uint64_t>(s),
                               bath_family_name,
                               T,
                               trace.average_current,
                               trace.conservation_residual,
                               trace.energy_drift};
        });
        for (SweepRow& r : rows) out.rows.push_back(std::move(r));
        std::sort(abs_currents.begin(), abs_currents.end());
        auto quantile = [&](double q) {
            double pos = q * (abs_currents.size() - 1);
            std::size_t i = static_cast<std::size_t>(pos);
            double frac = pos - static_cast<double>(i);
            if (i + 1 < abs_currents.size())
                return abs_currents[i] * (1 - frac) + abs_currents[i + 1] * frac;
            return abs_currents[i];
        };
        out.median_abs_current.push_back(quantile(0.5));
        out.q1.push_back(quantile(0.25));
        out.q3.push_back(quantile(0.75));
    }
    // log-log slope of median |J| vs L (medians clipped at a tiny floor).
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < out.lengths.size(); ++i) {
        double x = std::log(static_cast<double>(out.lengths[i]));
        double y = std::log(std::max(out.median_abs_current[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n >= 2) out.loglog_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return out;
}

}  // namespace spinflow
