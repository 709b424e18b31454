#include "spinflow/model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "spinflow/rng.hpp"

namespace spinflow {

namespace {
constexpr std::uint64_t kThetaStream = 0x7e7a;
constexpr std::uint64_t kKappaStream = 0xca44a;
constexpr std::uint64_t kWStream = 0x3711;
}  // namespace

Ensemble ensemble_from_string(const std::string& s) {
    if (s == "random") return Ensemble::random;
    if (s == "transverse-field" || s == "transverse_field") return Ensemble::transverse_field;
    if (s == "xx") return Ensemble::xx;
    throw std::invalid_argument("unknown ensemble: " + s);
}

std::string ensemble_to_string(Ensemble e) {
    switch (e) {
        case Ensemble::random: return "random";
        case Ensemble::transverse_field: return "transverse-field";
        case Ensemble::xx: return "xx";
    }
    return "?";
}

void ModelParams::validate() const {
    if (L < 1) throw std::invalid_argument("model.L must be >= 1");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("model.gamma must be in [0,1)");
    if (I_max < 1 || I_max > L) throw std::invalid_argument("model.I_max must be in [1, L]");
    if (static_cast<int>(kappa.size()) != std::max(0, L - 1))
        throw std::invalid_argument("model.kappa must have L-1 entries");
    for (double k : kappa)
        if (!(std::abs(k) < C_kappa))
            throw std::invalid_argument("model.kappa entries must satisfy |kappa_x| < C_kappa");
}

ModelParams ModelParams::with_random_kappa(int L, double gamma, double C_kappa, int I_max,
                                           Ensemble ensemble, std::uint64_t seed) {
    ModelParams p;
    p.L = L;
    p.gamma = gamma;
    p.C_kappa = C_kappa;
    p.I_max = I_max;
    p.ensemble = ensemble;
    p.seed = seed;
    p.kappa.resize(std::max(0, L - 1));
    for (int x = 1; x <= L - 1; ++x) {
        double u = uniform01(seed, kKappaStream, static_cast<std::uint64_t>(x));
        p.kappa[x - 1] = C_kappa * (2.0 * u - 1.0) * (1.0 - 1e-12);
    }
    return p;
}

DisorderSample sample_disorder(const ModelParams& params, std::uint64_t index) {
    DisorderSample s;
    s.index = index;
    s.theta.resize(params.L);
    for (int x = 1; x <= params.L; ++x)
        s.theta[x - 1] = uniform01(params.seed, kThetaStream, index, static_cast<std::uint64_t>(x));
    return s;
}

std::vector<IntervalTerm> generate_interval_terms(const ModelParams& params,
                                                  const DisorderSample& sample) {
    std::vector<IntervalTerm> out;
    const double two_pi = 6.283185307179586476925286766559;
    for (int lo = 1; lo <= params.L; ++lo) {
        for (int len = 1; len <= params.I_max && lo + len - 1 <= params.L; ++len) {
            Interval I{lo, lo + len - 1};
            std::uint64_t dim = 1ull << len;
            DenseMatrix W;
            switch (params.ensemble) {
                case Ensemble::transverse_field: {
                    if (len != 1) continue;
                    W = DenseMatrix::Zero(2, 2);
                    W(0, 1) = W(1, 0) = 1.0;  // X in the local basis
                    break;
                }
                case Ensemble::xx: {
                    if (len != 2) continue;
                    W = DenseMatrix::Zero(4, 4);
                    // X_x X_{x+1} flips both local bits.
                    for (std::uint64_t j = 0; j < 4; ++j) W(j ^ 3ull, j) = 1.0;
                    break;
                }
                case Ensemble::random: {
                    RngStream rng(rng_key(params.seed ^ kWStream, sample.index,
                                          static_cast<std::uint64_t>(lo),
                                          static_cast<std::uint64_t>(len)));
                    DenseMatrix A(dim, dim);
                    for (std::uint64_t i = 0; i < dim; ++i)
                        for (std::uint64_t j = 0; j < dim; ++j) {
                            double mag = rng.next_gaussian();
                            double ph = two_pi * rng.next_unit();
                            A(i, j) = cplx(mag * std::cos(ph), mag * std::sin(ph));
                        }
                    W = 0.5 * (A + A.adjoint());
                    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(W, Eigen::EigenvaluesOnly);
                    double nrm = std::max(std::abs(es.eigenvalues()(0)),
                                          std::abs(es.eigenvalues()(dim - 1)));
                    if (nrm > 0.0) W /= nrm;
                    break;
                }
            }
            out.push_back(IntervalTerm{I, std::move(W)});
        }
    }
    return out;
}

std::vector<XMonomial> bare_energy_terms(const ModelParams& params,
                                         const DisorderSample& sample) {
    std::vector<XMonomial> out;
    for (int x = 1; x <= params.L; ++x)
        out.push_back(XMonomial::pauli_z(params.L, x).scaled(sample.theta[x - 1]));
    for (int x = 1; x <= params.L - 1; ++x) {
        XMonomial zz =
            multiply_monomials(XMonomial::pauli_z(params.L, x), XMonomial::pauli_z(params.L, x + 1));
        out.push_back(zz.scaled(params.kappa[x - 1]));
    }
    return out;
}

BareSplit split_bare(const ModelParams& params, const DisorderSample& sample) {
    params.validate();
    BareSplit out;
    out.E0 = OperatorSum(params.L, Parity::hermitian);
    for (const XMonomial& m : bare_energy_terms(params, sample)) out.E0.add_term(m);

    out.V0 = OperatorSum(params.L, Parity::hermitian);
    if (params.gamma == 0.0) return out;
    for (const IntervalTerm& it : generate_interval_terms(params, sample)) {
        double weight = std::pow(params.gamma / 2.0, it.I.size());
        OperatorSum dec = decompose_dense(weight * it.W, it.I, params.L, Parity::hermitian);
        for (const auto& [act, m] : dec.terms()) {
            out.terms_by_diagram.push_back(BareTerm{act, it.I, m});
            out.V0.add_term(m);
        }
    }
    return out;
}

}  // namespace spinflow
