#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spinflow/model.hpp"
#include "spinflow/transport.hpp"

using namespace spinflow;

namespace {

ModelParams make_params(int L, double gamma, std::uint64_t seed = 3) {
    return ModelParams::with_random_kappa(L, gamma, 1.0, std::min(3, L), Ensemble::random, seed);
}

double herm_norm(const DenseMatrix& M) { return (M - M.adjoint()).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("decoupled system: left and right parts commute") {
    ModelParams p = make_params(4, 0.0);
    BathSpec bath = BathSpec::family("two-level", 5);
    bath.V_Bl.setZero();
    bath.V_Br.setZero();
    TotalSystem sys = build_total_system(p, sample_disorder(p, 0), bath);
    DenseMatrix c = sys.H_l * sys.H_r - sys.H_r * sys.H_l;
    CHECK(c.cwiseAbs().maxCoeff() < 1e-13);
    CHECK(current_operator(sys.H_l, sys.H_r).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("L = 2 hand check of the cut rule") {
    // min I <= L/2 = 1: the theta_1 Z_1 and kappa_1 Z_1 Z_2 terms go left,
    // theta_2 Z_2 goes right.
    ModelParams p = make_params(2, 0.0);
    DisorderSample s = sample_disorder(p, 0);
    BathSpec bath = BathSpec::family("two-level", 5);
    TotalSystem sys = build_total_system(p, s, bath);
    // Build the expected left part directly.
    OperatorSum left_sys(2, Parity::hermitian);
    left_sys.add_term(XMonomial::pauli_z(2, 1).scaled(s.theta[0]));
    left_sys.add_term(multiply_monomials(XMonomial::pauli_z(2, 1), XMonomial::pauli_z(2, 2))
                          .scaled(p.kappa[0]));
    OperatorSum x1(2);
    x1.add_term(XMonomial::pauli_x(2, 1));
    auto kron = [](const DenseMatrix& A, const DenseMatrix& B) {
        DenseMatrix C(A.rows() * B.rows(), A.cols() * B.cols());
        for (Eigen::Index i = 0; i < A.rows(); ++i)
            for (Eigen::Index j = 0; j < A.cols(); ++j)
                C.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
        return C;
    };
    DenseMatrix I2 = DenseMatrix::Identity(2, 2);
    DenseMatrix I4 = DenseMatrix::Identity(4, 4);
    DenseMatrix expect = kron(bath.H_Bl, kron(I4, I2)) +
                         kron(bath.V_Bl, kron(to_dense(x1), I2)) +
                         kron(I2, kron(to_dense(left_sys), I2));
    CHECK((sys.H_l - expect).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("H_l + H_r reassembles H_tot exactly") {
    ModelParams p = make_params(4, 0.1);
    BathSpec bath = BathSpec::family("four-level", 9);
    TotalSystem sys = build_total_system(p, sample_disorder(p, 1), bath);
    CHECK((sys.H_l + sys.H_r - sys.H_tot).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("current operator identities") {
    ModelParams p = make_params(4, 0.08);
    BathSpec bath = BathSpec::family("two-level", 7);
    TotalSystem sys = build_total_system(p, sample_disorder(p, 2), bath);
    DenseMatrix J = current_operator(sys.H_l, sys.H_r);
    SUBCASE("J is hermitian") { CHECK(herm_norm(J) < 1e-13); }
    SUBCASE("i[H_tot, H_l] equals i[H_r, H_l]") {
        DenseMatrix J2 = cplx(0, 1) * (sys.H_tot * sys.H_l - sys.H_l * sys.H_tot);
        CHECK((J - J2).cwiseAbs().maxCoeff() < 1e-13);
    }
    SUBCASE("J acts trivially where no straddling terms reach") {
        // With I_max = 3 every system term straddling the L = 4 cut touches
        // only sites 1..4; the bath corners enter through X_1 and X_L. A
        // current commuting with Z on a far site would be suspicious; here we
        // simply check J commutes with the right-bath identity block
        // structure: conjugating by a right-bath basis rotation must leave J
        // support intact. Cheap proxy: J's trace against any operator
        // supported on the right bath alone vanishes.
        DenseMatrix probe = DenseMatrix::Zero(sys.dim, sys.dim);
        // right-bath raising operator turned hermitian, tensored with identity
        int dr = sys.dim_r;
        DenseMatrix B = DenseMatrix::Zero(dr, dr);
        B(0, 1) = B(1, 0) = 1.0;
        for (std::int64_t i = 0; i < sys.dim / dr; ++i)
            probe.block(i * dr, i * dr, dr, dr) = B;
        CHECK(std::abs((J * probe).trace()) / sys.dim < 1e-12);
    }
}

TEST_CASE("average current evolution") {
    ModelParams p = make_params(4, 0.06);
    BathSpec bath = BathSpec::family("two-level", 11);
    DisorderSample s = sample_disorder(p, 3);
    TotalSystem sys = build_total_system(p, s, bath);
    DenseMatrix J = current_operator(sys.H_l, sys.H_r);

    SUBCASE("a stationary state carries no average current") {
        // rho = f(H_tot): maximally mixed.
        bath.recipe = BathState::maximally_mixed;
        DenseMatrix rho0 = initial_density(sys, bath, 1);
        CurrentTrace tr = average_current(sys, J, rho0, {5.0, 20.0});
        for (double j : tr.instantaneous) CHECK(std::abs(j) < 1e-12);
        for (double j : tr.running_average) CHECK(std::abs(j) < 1e-12);
    }
    SUBCASE("conservation identity and positivity bookkeeping") {
        bath.recipe = BathState::thermal;
        DenseMatrix rho0 = initial_density(sys, bath, 1);
        CurrentTrace tr = average_current(sys, J, rho0, {3.0, 7.0, 15.0});
        CHECK(tr.conservation_residual < 1e-9);
        CHECK(tr.energy_drift < 1e-10);
        CHECK(tr.min_eigenvalue_rho > -1e-12);
    }
    SUBCASE("non-density inputs are rejected") {
        DenseMatrix bad = DenseMatrix::Identity(sys.dim, sys.dim);  // trace != 1
        CHECK_THROWS(average_current(sys, J, bad, {1.0}));
    }
}

TEST_CASE("gamma = 0 with zero couplings carries exactly zero current") {
    ModelParams base = make_params(4, 0.0);
    BathSpec bath = BathSpec::family("two-level", 5);
    bath.V_Bl.setZero();
    bath.V_Br.setZero();
    SweepSummary sweep = length_sweep(base, bath, "two-level", {2, 4}, 20.0, 3);
    for (const SweepRow& r : sweep.rows) CHECK(std::abs(r.avg_current) < 1e-13);
}

TEST_CASE("averaged current magnitude does not grow when T doubles") {
    ModelParams p = make_params(4, 0.05, 23);
    BathSpec bath = BathSpec::family("two-level", 13);
    DisorderSample s = sample_disorder(p, 1);
    TotalSystem sys = build_total_system(p, s, bath);
    DenseMatrix J = current_operator(sys.H_l, sys.H_r);
    DenseMatrix rho0 = initial_density(sys, bath, 2);
    // Long past the system's recurrence structure the average decays; check a
    // late-time doubling.
    CurrentTrace tr = average_current(sys, J, rho0, {400.0, 800.0});
    CHECK(std::abs(tr.running_average[1]) <= std::abs(tr.running_average[0]) + 1e-12);
}

TEST_CASE("length sweep medians are reported per length") {
    ModelParams base = make_params(4, 0.05, 29);
    BathSpec bath = BathSpec::family("two-level", 3);
    SweepSummary sweep = length_sweep(base, bath, "two-level", {3, 4}, 30.0, 4);
    CHECK(sweep.rows.size() == 8);
    CHECK(sweep.median_abs_current.size() == 2);
    for (const SweepRow& r : sweep.rows) CHECK(r.energy_residual < 1e-9);
}
