#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spinflow/liom.hpp"
#include "spinflow/model.hpp"
#include "spinflow/oracle.hpp"
#include "spinflow/rng.hpp"

using namespace spinflow;

namespace {

ModelParams make_params(int L, double gamma, std::uint64_t seed = 3) {
    return ModelParams::with_random_kappa(L, gamma, 1.0, std::min(3, L), Ensemble::random, seed);
}

FlowParams desk_flow(double gamma) {
    FlowParams fp;
    fp.beta = Rational(9, 10);
    fp.resolve(gamma);
    return fp;
}

}  // namespace

TEST_CASE("zero generators give the identity unitary") {
    FlowState st;
    st.L = 3;
    UnitaryProduct up = build_unitary(st);
    CHECK((up.dense - DenseMatrix::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("one-site flow diagonalizes to machine precision") {
    ModelParams p = ModelParams::with_random_kappa(1, 0.1, 1.0, 1, Ensemble::transverse_field, 5);
    FlowParams fp = desk_flow(p.gamma);
    DisorderSample s = sample_disorder(p, 0);
    FlowResult r = run_flow(p, s, fp);
    REQUIRE(r.converged);
    UnitaryProduct up = build_unitary(r.state);
    DenseMatrix H0 = to_dense(initial_state(p, s).hamiltonian());
    DenseMatrix rot = up.dense.adjoint() * H0 * up.dense;
    CHECK(std::abs(rot(0, 1)) < 10 * fp.eta_conv);
    CHECK(std::abs(rot(1, 0)) < 10 * fp.eta_conv);
    // It matches the state the flow reports.
    CHECK((rot - to_dense(r.state.hamiltonian())).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("unitarity audit on a converged L = 6 run") {
    ModelParams p = make_params(6, 0.05);
    FlowParams fp = desk_flow(p.gamma);
    FlowResult r = run_flow(p, sample_disorder(p, 1), fp);
    REQUIRE(r.converged);
    UnitaryProduct up = build_unitary(r.state);
    std::uint64_t dim = 1ull << 6;
    CHECK((up.dense.adjoint() * up.dense - DenseMatrix::Identity(dim, dim)).cwiseAbs().maxCoeff() <
          1e-10);
}

TEST_CASE("liom_check") {
    SUBCASE("identity U on a diagonal H gives zero residuals") {
        OperatorSum e(3, Parity::hermitian);
        e.add_term(XMonomial::pauli_z(3, 1).scaled(0.3));
        e.add_term(XMonomial::pauli_z(3, 2).scaled(0.7));
        DenseMatrix H = to_dense(e);
        LiomReport rep = liom_check(DenseMatrix::Identity(8, 8), H);
        for (double r : rep.h_residuals) CHECK(r < 1e-12);
        CHECK(rep.max_pair_commutator < 1e-12);
        CHECK(rep.max_proj_trace_dev < 1e-12);
        CHECK(rep.max_proj_idem_dev < 1e-12);
    }
    SUBCASE("oracle-built U has residuals at roundoff") {
        ModelParams p = make_params(5, 0.04, 7);
        DisorderSample s = sample_disorder(p, 3);
        DenseMatrix H = to_dense(initial_state(p, s).hamiltonian());
        auto U = oracle_unitary(H);
        REQUIRE(U.has_value());
        LiomReport rep = liom_check(*U, H);
        for (double r : rep.h_residuals) CHECK(r < 1e-10);
        CHECK(rep.max_pair_commutator < 1e-10);
        CHECK(rep.max_involution_dev < 1e-10);
    }
    SUBCASE("converged flow gives residuals within the convergence budget") {
        ModelParams p = make_params(6, 0.05, 9);
        FlowParams fp = desk_flow(p.gamma);
        DisorderSample s = sample_disorder(p, 2);
        FlowResult r = run_flow(p, s, fp);
        REQUIRE(r.converged);
        UnitaryProduct up = build_unitary(r.state);
        DenseMatrix H0 = to_dense(initial_state(p, s).hamiltonian());
        LiomReport rep = liom_check(up.dense, H0);
        for (double res : rep.h_residuals) CHECK(res <= 10 * fp.eta_conv);
        CHECK(rep.max_pair_commutator <= 10 * fp.eta_conv);
    }
}

TEST_CASE("locality profile") {
    SUBCASE("operator outside the unitary's support has no tails beyond n = 0") {
        // U acts on sites {1,2} only; O sits on site 4.
        int L = 4;
        OperatorSum a(L, Parity::skew_hermitian);
        XMonomial x1 = XMonomial::pauli_x(L, 1);
        std::vector<cplx> tab = {cplx(0, 0.3), cplx(0, 0.3)};
        a.add_term(XMonomial(L, 1ull, Interval{1, 1}, tab));  // i 0.3 X_1
        FlowState st;
        st.L = L;
        st.generators.push_back(a);
        UnitaryProduct up = build_unitary(st);
        OperatorSum oz(L);
        oz.add_term(XMonomial::pauli_z(L, 4));
        LocalityProfile prof = locality_profile(up.dense, to_dense(oz), Interval::site(4), L,
                                                ConjugationDirection::conjugate);
        CHECK(prof.tails[0] == doctest::Approx(1.0));
        for (std::size_t n = 1; n < prof.tails.size(); ++n) CHECK(prof.tails[n] < 1e-12);
        CHECK(prof.reconstruction_error < 1e-12);
    }
    SUBCASE("tails reconstruct the conjugated operator exactly") {
        ModelParams p = make_params(5, 0.08, 11);
        FlowParams fp = desk_flow(p.gamma);
        DisorderSample s = sample_disorder(p, 1);
        FlowResult r = run_flow(p, s, fp);
        UnitaryProduct up = build_unitary(r.state);
        OperatorSum oz(5);
        oz.add_term(XMonomial::pauli_z(5, 3));
        for (auto dir : {ConjugationDirection::conjugate, ConjugationDirection::inverse_conjugate}) {
            LocalityProfile prof =
                locality_profile(up.dense, to_dense(oz), Interval::site(3), 5, dir);
            CHECK(prof.reconstruction_error < 1e-12);
            CHECK(prof.tails[0] <= 1.0 + 1e-12);  // normalized partial trace contracts
        }
    }
    SUBCASE("fitted decay rate increases as gamma decreases") {
        // Medians over a few seeds at L = 6; a coarse, fast version of the
        // ensemble check.
        std::vector<double> rates;
        for (double gamma : {0.1, 0.05, 0.02}) {
            std::vector<double> fits;
            for (std::uint64_t seed = 0; seed < 10 && fits.size() < 6; ++seed) {
                ModelParams p = make_params(6, gamma, 13);
                FlowParams fp = desk_flow(gamma);
                DisorderSample s = sample_disorder(p, seed);
                FlowResult r = run_flow(p, s, fp);
                if (!r.converged) continue;
                UnitaryProduct up = build_unitary(r.state);
                OperatorSum oz(6);
                oz.add_term(XMonomial::pauli_z(6, 3));
                LocalityProfile prof = locality_profile(up.dense, to_dense(oz), Interval::site(3),
                                                        6, ConjugationDirection::conjugate);
                fits.push_back(prof.fit_rate);
            }
            REQUIRE(fits.size() >= 3);
            std::sort(fits.begin(), fits.end());
            rates.push_back(fits[fits.size() / 2]);
        }
        CHECK(rates[0] < rates[1]);
        CHECK(rates[1] < rates[2]);
    }
}

TEST_CASE("diagonal couplings") {
    SUBCASE("E = theta Z_1 extracts a single coupling") {
        OperatorSum e(3, Parity::hermitian);
        e.add_term(XMonomial::pauli_z(3, 1).scaled(0.45));
        DiagonalExpansion de = extract_diagonal_couplings(e);
        CHECK(de.coupling(0b001) == doctest::Approx(0.45));
        for (std::uint64_t s = 0; s < 8; ++s)
            if (s != 0b001) CHECK(std::abs(de.coupling(s)) < 1e-14);
    }
    SUBCASE("E = Z_1 Z_3 has coupling 1 at diameter 2") {
        OperatorSum e(3, Parity::hermitian);
        e.add_term(multiply_monomials(XMonomial::pauli_z(3, 1), XMonomial::pauli_z(3, 3)));
        DiagonalExpansion de = extract_diagonal_couplings(e);
        CHECK(de.coupling(0b101) == doctest::Approx(1.0));
        CHECK(DiagonalExpansion::diameter(0b101) == 2);
    }
    SUBCASE("Parseval identity and reassembly on a random diagonal") {
        RngStream rng(400);
        int L = 5;
        std::vector<cplx> tab(1 << L);
        for (auto& v : tab) v = rng.next_uniform(-1, 1);
        OperatorSum e(L, Parity::hermitian);
        e.add_term(XMonomial(L, 0, Interval{1, L}, tab));
        DiagonalExpansion de = extract_diagonal_couplings(e);
        double lhs = de.sum_of_squares();
        double rhs = 0.0;
        for (std::uint64_t i = 0; i < (1ull << L); ++i) {
            double v = e.diagonal_value(i);
            rhs += v * v;
        }
        rhs /= static_cast<double>(1ull << L);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        // Reassembly: E(sigma) = sum_S D_S prod_{x in S} sigma_x.
        for (std::uint64_t i = 0; i < (1ull << L); i += 3) {
            double acc = 0.0;
            for (std::uint64_t sset = 0; sset < (1ull << L); ++sset) {
                double chi = 1.0;
                for (int x = 1; x <= L; ++x)
                    if (sset & (1ull << (x - 1))) chi *= sigma_at(i, L, x);
                acc += de.coupling(sset) * chi;
            }
            CHECK(acc == doctest::Approx(e.diagonal_value(i)).epsilon(1e-10));
        }
    }
    SUBCASE("converged run: per-diameter max coupling decays") {
        ModelParams p = make_params(6, 0.05, 17);
        FlowParams fp = desk_flow(p.gamma);
        FlowResult r = run_flow(p, sample_disorder(p, 0), fp);
        REQUIRE(r.converged);
        DiagonalExpansion de = extract_diagonal_couplings(r.state.E());
        std::map<int, double> by_diam = de.max_abs_by_diameter();
        // Log-linear fit slope over diameters >= 1 must be nonpositive.
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
        for (const auto& [d, v] : by_diam) {
            if (d < 1 || v < 1e-14) continue;
            sx += d;
            sy += std::log(v);
            sxx += double(d) * d;
            sxy += d * std::log(v);
            ++n;
        }
        REQUIRE(n >= 3);
        double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        CHECK(slope <= 0.0);
    }
}

TEST_CASE("oracle unitary bails out near ambiguity") {
    // A Hamiltonian with a dominant off-diagonal block mixes basis states
    // half-and-half; overlap assignment must refuse.
    DenseMatrix H = DenseMatrix::Zero(2, 2);
    H(0, 1) = H(1, 0) = 1.0;
    CHECK(!oracle_unitary(H).has_value());
}
