// Acceptance suite: one pass/fail line per criterion, every tolerance pinned
// in code. Run with --only N to restrict to a single criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "spinflow/diagrams.hpp"
#include "spinflow/flow.hpp"
#include "spinflow/liom.hpp"
#include "spinflow/model.hpp"
#include "spinflow/oracle.hpp"
#include "spinflow/parallel.hpp"
#include "spinflow/rng.hpp"
#include "spinflow/transport.hpp"

using namespace spinflow;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& msg) {
        if (!cond && ok) {
            ok = false;
            detail = msg;
        }
    }
    void note(const std::string& msg) {
        if (!detail.empty()) detail += "; ";
        detail += msg;
    }
};

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

// Least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = static_cast<int>(x.size());
    for (int i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ModelParams desk_model(int L, double gamma) {
    return ModelParams::with_random_kappa(L, gamma, 1.0, std::min(3, L), Ensemble::random, 1);
}

FlowParams desk_flow(double gamma) {
    FlowParams fp;
    fp.beta = Rational(9, 10);
    fp.resolve(gamma);
    return fp;
}

// The L = 8, gamma = 0.05 reference ensemble shared by criteria 2, 3, 6, 7,
// 8, and 9; computed once.
struct ReferenceEnsemble {
    static constexpr int kSeeds = 50;
    ModelParams params = desk_model(8, 0.05);
    FlowParams fp = desk_flow(0.05);
    std::vector<FlowResult> runs;
    double wall_seconds = 0.0;

    static ReferenceEnsemble& get() {
        static ReferenceEnsemble self;
        if (self.runs.empty()) {
            auto t0 = std::chrono::steady_clock::now();
            self.runs.resize(kSeeds);
            parallel_for(kSeeds, 0, [&](std::size_t i) {
                self.runs[i] = run_flow(self.params, sample_disorder(self.params, i), self.fp);
            });
            self.wall_seconds = std::chrono::duration<double>(
                                    std::chrono::steady_clock::now() - t0)
                                    .count();
        }
        return self;
    }
};

// --- 1: algebra vs dense oracle ---------------------------------------------

XMonomial random_monomial(int L, std::uint64_t key) {
    RngStream rng(key);
    std::uint64_t full = (1ull << L) - 1ull;
    std::vector<cplx> diag(1ull << L);
    for (auto& v : diag) v = cplx(rng.next_uniform(-1, 1), rng.next_uniform(-1, 1));
    return XMonomial(L, rng.next_u64() & full, Interval{1, L}, std::move(diag));
}

Check criterion_1() {
    Check c;
    auto t0 = std::chrono::steady_clock::now();
    int done = 0;
    for (int L : {2, 3, 4}) {
        int trials = L == 4 ? 168 : 166;
        for (int t = 0; t < trials; ++t) {
            XMonomial a = random_monomial(L, rng_key(1001, L, t, 0));
            XMonomial b = random_monomial(L, rng_key(1001, L, t, 1));
            DenseMatrix da = to_dense(a), db = to_dense(b);
            double perr = (to_dense(multiply_monomials(a, b)) - da * db).cwiseAbs().maxCoeff();
            OperatorSum sa(L), sb(L);
            sa.add_term(a);
            sb.add_term(b);
            double cerr =
                (to_dense(commutator(sa, sb)) - (da * db - db * da)).cwiseAbs().maxCoeff();
            c.require(perr < 1e-12, "product mismatch " + fmt(perr));
            c.require(cerr < 1e-12, "commutator mismatch " + fmt(cerr));
            ++done;
        }
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.require(secs < 10.0, "runtime " + fmt(secs) + "s over the 10 s budget");
    c.note(std::to_string(done) + " pairs in " + fmt(secs) + "s");
    return c;
}

// --- 2: spectrum preservation -------------------------------------------------

Check criterion_2() {
    Check c;
    ReferenceEnsemble& ref = ReferenceEnsemble::get();
    double worst = 0.0;
    for (const FlowResult& r : ref.runs)
        for (const ScaleReport& row : r.reports) worst = std::max(worst, row.spectrum_drift);
    c.require(worst < 1e-10, "drift " + fmt(worst));
    c.require(ref.wall_seconds < 300.0,
              "runtime " + fmt(ref.wall_seconds) + "s over the 5 min budget");
    c.note("worst drift " + fmt(worst) + ", ensemble in " + fmt(ref.wall_seconds) + "s");
    return c;
}

// --- 3: generator residual ----------------------------------------------------

Check criterion_3() {
    Check c;
    ReferenceEnsemble& ref = ReferenceEnsemble::get();
    double worst = 0.0;
    int steps = 0;
    for (const FlowResult& r : ref.runs)
        for (const ScaleReport& row : r.reports) {
            if (row.step_deferred) continue;
            worst = std::max(worst, row.generator_residual);
            ++steps;
        }
    c.require(worst < 1e-12, "residual " + fmt(worst));
    c.note(std::to_string(steps) + " non-deferred steps, worst " + fmt(worst));
    return c;
}

// --- 4: triadic vs first representation ---------------------------------------

DiagramPtr raw_diagram(int scale, Rational order, long long bare, Interval dom,
                       std::uint64_t act) {
    auto d = std::make_shared<Diagram>();
    d->scale = scale;
    d->order = std::move(order);
    d->bare_order = bare;
    d->domain = dom;
    d->active = act;
    d->factorial = 1;
    return d;
}

Check criterion_4() {
    Check c;
    FlowParams fp = desk_flow(0.05);
    ScaleLadder ladder(fp.beta);
    int compared = 0;

    auto compare = [&](const DiagramTerm& dt, const std::vector<PoolEntry>& pool,
                       const std::vector<XMonomial>& e0, int L) -> bool {
        TriadicGenerator tg = solve_generator_triadic(dt, pool, e0, ladder, fp, L);
        if (tg.any_deferred) return false;
        XMonomial first = first_representation(dt, pool, e0, fp, L);
        DenseMatrix sum = DenseMatrix::Zero(1 << L, 1 << L);
        for (const TriadTerm& tt : tg.terms) sum += to_dense(tt.term);
        double err = (sum - to_dense(first)).cwiseAbs().maxCoeff();
        c.require(err < 1e-10, "representations differ by " + fmt(err));
        ++compared;
        return true;
    };

    // k = 0 instances: real scale-0 states, empty pool.
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        ModelParams p = desk_model(5, 0.05);
        TriadicState ts = initial_triadic_state(p, sample_disorder(p, seed));
        for (const DiagramTerm& dt : ts.V) {
            if (dt.diagram->is_diagonal() || !(dt.diagram->order < ladder.length(1))) continue;
            if (compare(dt, {}, ts.E0_terms, ts.L)) break;  // one per seed
        }
    }

    // k = 1 instances: pools from one triadic step.
    for (std::uint64_t seed = 0; seed < 3 && compared < 12; ++seed) {
        ModelParams p = desk_model(6, 0.05);
        TriadicState ts = initial_triadic_state(p, sample_disorder(p, seed));
        triadic_step(ts, fp, ladder, p.gamma);
        int taken = 0;
        for (const DiagramTerm& dt : ts.V) {
            if (dt.diagram->is_diagonal()) continue;
            if (!(dt.diagram->order < ladder.length(2))) continue;
            if (compare(dt, ts.pool, ts.E0_terms, ts.L) && ++taken >= 3) break;
        }
    }

    // k = 2 instances: synthetic pools (diagonal diagrams at scales < 2 with
    // |I| below L_2) around a synthetic scale-2 center.
    for (int inst = 0; compared < 20 && inst < 40; ++inst) {
        RngStream rng(rng_key(4004, inst));
        int L = 6;
        std::vector<XMonomial> e0;
        for (int x = 1; x <= L; ++x)
            e0.push_back(XMonomial::pauli_z(L, x).scaled(0.2 + 0.6 * rng.next_unit()));
        std::vector<PoolEntry> pool;
        int n_pool = 2 + static_cast<int>(rng.next_u64() % 4);
        for (int i = 0; i < n_pool; ++i) {
            int len = 1 + static_cast<int>(rng.next_u64() % 3);  // |I| <= 3 < L_2
            int lo = 1 + static_cast<int>(rng.next_u64() % (L - len + 1));
            Interval I{lo, lo + len - 1};
            DiagramPtr h = raw_diagram(i % 2, Rational(len), len, I, 0);
            Interval Ibar = I.extended(L);
            std::vector<cplx> tab(1ull << Ibar.size());
            for (auto& v : tab) v = 0.02 * rng.next_uniform(-1, 1);
            pool.push_back(PoolEntry{h, XMonomial(L, 0, Ibar, std::move(tab))});
        }
        int len = 2 + static_cast<int>(rng.next_u64() % 3);
        int lo = 1 + static_cast<int>(rng.next_u64() % (L - len + 1));
        Interval I{lo, lo + len - 1};
        std::uint64_t act = 0;
        while (act == 0) act = rng.next_u64() & interval_mask(I);
        DiagramPtr g = raw_diagram(2, Rational(4), 5, I, act);  // L_2 <= 4 < L_3
        Interval Ibar = I.extended(L);
        std::vector<cplx> vt(1ull << Ibar.size());
        for (auto& v : vt) v = 0.01 * rng.next_uniform(-1, 1);
        compare(DiagramTerm{g, XMonomial(L, act, Ibar, std::move(vt))}, pool, e0, L);
    }
    c.require(compared >= 20, "only " + std::to_string(compared) + " clean instances");
    c.note(std::to_string(compared) + " instances");
    return c;
}

// --- 5: resolvent expansion identity ------------------------------------------

Check criterion_5() {
    Check c;
    double worst = 0.0;
    for (int R = 1; R <= 5; ++R) worst = std::max(worst, resolvent_identity_check(R, 2000, 55));
    c.require(worst < 1e-12, "residual " + fmt(worst));
    c.note("10000 instances, worst " + fmt(worst));
    return c;
}

// --- 6: flow contraction -------------------------------------------------------

Check criterion_6() {
    Check c;
    ReferenceEnsemble& ref = ReferenceEnsemble::get();
    int strict = 0, with_deferrals = 0;
    for (const FlowResult& r : ref.runs) {
        with_deferrals += r.total_floor_events > 0 ? 1 : 0;
        std::map<int, double> norm_at;
        for (const ScaleReport& row : r.reports) norm_at[row.k] = row.norm_V;
        bool dec = true;
        for (int k = 0; k < 3; ++k) {
            if (!norm_at.count(k) || !norm_at.count(k + 1) || !(norm_at[k + 1] < norm_at[k]))
                dec = false;
        }
        strict += dec ? 1 : 0;
    }
    c.require(strict * 10 >= 9 * ReferenceEnsemble::kSeeds,
              "strict decrease on only " + std::to_string(strict) + "/50 seeds");
    c.note(std::to_string(strict) + "/50 strictly decreasing, " +
           std::to_string(with_deferrals) + " with deferrals (reported separately)");
    return c;
}

// --- 7: LIOM residuals ----------------------------------------------------------

Check criterion_7() {
    Check c;
    ReferenceEnsemble& ref = ReferenceEnsemble::get();
    int converged = 0, good = 0;
    for (std::size_t i = 0; i < ref.runs.size(); ++i) {
        const FlowResult& r = ref.runs[i];
        if (!r.converged) continue;
        ++converged;
        UnitaryProduct up = build_unitary(r.state);
        DenseMatrix H0 =
            to_dense(initial_state(ref.params, sample_disorder(ref.params, i)).hamiltonian());
        const std::uint64_t dim = 1ull << 8;
        bool all_sites = true;
        for (int x = 1; x <= 8; ++x) {
            DenseMatrix Z = DenseMatrix::Zero(dim, dim);
            for (std::uint64_t j = 0; j < dim; ++j) Z(j, j) = sigma_at(j, 8, x);
            DenseMatrix Zt = up.dense * Z * up.dense.adjoint();
            DenseMatrix comm = H0 * Zt - Zt * H0;
            Eigen::SelfAdjointEigenSolver<DenseMatrix> es(comm.adjoint() * comm,
                                                          Eigen::EigenvaluesOnly);
            double nrm = std::sqrt(std::max(0.0, es.eigenvalues()(dim - 1)));
            if (!(nrm <= 10.0 * ref.fp.eta_conv)) all_sites = false;
        }
        good += all_sites ? 1 : 0;
    }
    c.require(converged > 0, "no converged seeds");
    c.require(good * 100 >= 95 * converged,
              std::to_string(good) + "/" + std::to_string(converged) + " below the bound");
    c.note(std::to_string(good) + "/" + std::to_string(converged) + " converged seeds pass");
    return c;
}

// --- 8: locality tails -----------------------------------------------------------

Check criterion_8() {
    Check c;
    std::vector<double> gammas = {0.1, 0.05, 0.02};
    std::vector<double> med_rates;
    for (double gamma : gammas) {
        ModelParams p = desk_model(8, gamma);
        FlowParams fp = desk_flow(gamma);
        const int n = 30;
        std::vector<FlowResult> runs(n);
        // gamma = 0.05 reuses the reference ensemble's first 30 runs.
        if (gamma == 0.05) {
            ReferenceEnsemble& ref = ReferenceEnsemble::get();
            for (int i = 0; i < n; ++i) runs[i] = ref.runs[i];
        } else {
            parallel_for(n, 0, [&](std::size_t i) {
                runs[i] = run_flow(p, sample_disorder(p, i), fp);
            });
        }
        std::vector<double> rates;
        for (int i = 0; i < n; ++i) {
            if (!runs[i].converged) continue;
            UnitaryProduct up = build_unitary(runs[i].state);
            OperatorSum oz(8);
            oz.add_term(XMonomial::pauli_z(8, 4));
            LocalityProfile prof = locality_profile(up.dense, to_dense(oz), Interval::site(4), 8,
                                                    ConjugationDirection::conjugate);
            c.require(prof.reconstruction_error < 1e-12,
                      "tail reconstruction error " + fmt(prof.reconstruction_error));
            rates.push_back(prof.fit_rate);
        }
        c.require(rates.size() >= 5, "too few converged seeds at gamma " + fmt(gamma));
        med_rates.push_back(median(rates));
        c.note("gamma " + fmt(gamma) + ": rate " + fmt(median(rates)) + " (" +
               std::to_string(rates.size()) + " converged)");
    }
    c.require(med_rates[0] < med_rates[1] && med_rates[1] < med_rates[2],
              "median decay rates not strictly increasing as gamma decreases");
    return c;
}

// --- 9: diagonal-coupling decay ---------------------------------------------------

Check criterion_9() {
    Check c;
    ReferenceEnsemble& ref = ReferenceEnsemble::get();
    int converged = 0;
    for (const FlowResult& r : ref.runs) {
        if (!r.converged) continue;
        ++converged;
        DiagonalExpansion de = extract_diagonal_couplings(r.state.E());
        std::vector<double> xs, ys;
        for (const auto& [d, v] : de.max_abs_by_diameter()) {
            if (d < 1 || v < 1e-14) continue;
            xs.push_back(d);
            ys.push_back(std::log(v));
        }
        if (xs.size() < 2) continue;
        double slope = ls_slope(xs, ys);
        c.require(slope <= 0.0, "positive log-linear slope " + fmt(slope));
    }
    c.require(converged > 0, "no converged seeds");
    c.note(std::to_string(converged) + " converged seeds checked");
    return c;
}

// --- 10: diagram census -------------------------------------------------------------

// Brute-force oracle, independent of the diagrams module: raw tuples over
// scale-0 data with integer tallies per (x, w, n).
std::map<CensusKey, Rational> census_oracle(int L, long long w_max, const Rational& beta) {
    struct Comp {
        std::uint64_t active;
        int lo, hi;
    };
    auto ibar = [L](int lo, int hi) {
        std::uint64_t m = 0;
        for (int x = std::max(1, lo - 1); x <= std::min(L, hi + 1); ++x) m |= 1ull << (x - 1);
        return m;
    };
    auto adjacent = [&](const Comp& a, const Comp& b) {
        return (a.active & ibar(b.lo, b.hi)) != 0 || (b.active & ibar(a.lo, a.hi)) != 0;
    };
    Rational L1 = 1 + beta;

    std::map<CensusKey, Rational> out;
    // scale 0
    std::vector<Comp> g0;
    for (int lo = 1; lo <= L; ++lo)
        for (int hi = lo; hi <= L && hi - lo + 1 <= w_max; ++hi) {
            std::uint64_t im = 0;
            for (int x = lo; x <= hi; ++x) im |= 1ull << (x - 1);
            for (std::uint64_t sub = im;; sub = (sub - 1) & im) {
                g0.push_back(Comp{sub, lo, hi});
                out[CensusKey{lo, 0, hi - lo + 1}] += 1;
                if (sub == 0) break;
            }
        }
    // scale-1 tuples; tallies are integers per (x, w, n), divided by n! once.
    std::map<std::tuple<int, long long, int>, std::uint64_t> tally;
    std::vector<Comp> comps;
    std::vector<int> seq;
    for (const Comp& t0 : g0) {
        long long w0 = t0.hi - t0.lo + 1;
        if (Rational(w0) >= L1) out[CensusKey{t0.lo, 1, w0}] += 1;
        comps.assign(1, t0);
        seq.clear();
        auto dfs = [&](auto&& self) -> void {
            if (w0 + static_cast<long long>(seq.size()) >= w_max) return;
            for (int x = 1; x <= L; ++x) {
                Comp cand{1ull << (x - 1), x, x};
                bool ok = false;
                for (const Comp& cc : comps) ok = ok || adjacent(cc, cand);
                if (!ok) continue;
                seq.push_back(x);
                comps.push_back(cand);
                int min_x = t0.lo;
                for (int y : seq) min_x = std::min(min_x, y);
                tally[{min_x, w0 + static_cast<long long>(seq.size()),
                       static_cast<int>(seq.size())}] += 1;
                self(self);
                comps.pop_back();
                seq.pop_back();
            }
        };
        dfs(dfs);
    }
    for (const auto& [key, count] : tally) {
        auto [x, w, n] = key;
        out[CensusKey{x, 1, w}] += Rational(BigInt(count), factorial(n));
    }
    return out;
}

Check criterion_10() {
    Check c;
    auto t0 = std::chrono::steady_clock::now();
    Rational beta(9, 10);
    for (int L : {4, 6, 8}) {
        long long w_max = L == 8 ? 10 : L + 2;
        Census census = enumerate_diagrams(L, 1, w_max, beta);
        std::map<CensusKey, Rational> oracle = census_oracle(L, w_max, beta);
        bool same = census.counts.size() == oracle.size();
        for (const auto& [key, N] : oracle) {
            auto it = census.counts.find(key);
            if (it == census.counts.end() || !(it->second == N)) same = false;
        }
        c.require(same, "census mismatch at L = " + std::to_string(L));
        for (int x = 1; x <= L; ++x)
            for (long long w = 1; x + w - 1 <= L && w <= w_max; ++w) {
                auto it = census.counts.find(CensusKey{x, 0, w});
                c.require(it != census.counts.end() && it->second == Rational(BigInt(1) << w),
                          "interior 2^w identity fails");
            }
        for (const auto& [key, N] : census.counts)
            c.require(to_double(N) <=
                          std::pow(census.fitted_C, static_cast<double>(key.w)) * (1 + 1e-9),
                      "fitted C bound violated");
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.require(secs < 120.0, "runtime " + fmt(secs) + "s over the 2 min budget");
    c.note("L in {4,6,8} in " + fmt(secs) + "s");
    return c;
}

// --- 11: resonance-probability trend ----------------------------------------------

Check criterion_11() {
    Check c;
    ModelParams p = desk_model(8, 0.05);
    std::vector<double> eps = {0.2, 0.1, 0.05, 0.025};
    std::vector<ResonanceScanRow> rows = resonance_scan_k0(p, 10000, eps);
    std::vector<double> any_freq;
    for (double e : eps)
        for (const ResonanceScanRow& r : rows)
            if (r.epsilon == e && r.order == 0) any_freq.push_back(r.frequency);
    for (std::size_t i = 0; i + 1 < any_freq.size(); ++i)
        c.require(any_freq[i + 1] <= any_freq[i], "frequency increased as epsilon decreased");
    c.require(any_freq.back() < any_freq.front(), "no overall decrease across the grid");
    // log-frequency vs order slope at each epsilon where all orders fire.
    int slopes_checked = 0;
    for (double e : eps) {
        std::vector<double> xs, ys;
        bool all_positive = true;
        for (const ResonanceScanRow& r : rows) {
            if (r.epsilon != e || r.order == 0) continue;
            if (r.frequency <= 0.0) all_positive = false;
            xs.push_back(static_cast<double>(r.order));
            ys.push_back(r.frequency > 0 ? std::log(r.frequency) : 0.0);
        }
        if (!all_positive || xs.size() < 2) continue;
        double slope = ls_slope(xs, ys);
        c.require(slope <= 0.0, "positive log-frequency slope at eps " + fmt(e));
        ++slopes_checked;
    }
    c.require(slopes_checked >= 1, "no epsilon had all orders firing");
    c.note("any-violation freq " + fmt(any_freq.front()) + " -> " + fmt(any_freq.back()) + ", " +
           std::to_string(slopes_checked) + " slope checks");
    return c;
}

// --- 12/13: transport ---------------------------------------------------------------

struct TransportShared {
    SweepSummary sweep;
    static TransportShared& get() {
        static TransportShared self;
        if (self.sweep.rows.empty()) {
            ModelParams base = desk_model(8, 0.05);
            BathSpec bath = BathSpec::family("two-level", 1);
            self.sweep = length_sweep(base, bath, "two-level", {4, 6, 8}, 200.0, 30);
        }
        return self;
    }
};

Check criterion_12() {
    Check c;
    const SweepSummary& sweep = TransportShared::get().sweep;
    double worst_res = 0.0, worst_drift = 0.0;
    for (const SweepRow& r : sweep.rows) {
        worst_res = std::max(worst_res, r.energy_residual);
        worst_drift = std::max(worst_drift, r.energy_drift);
    }
    // A few dedicated evolutions with several read-out times.
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        ModelParams p = desk_model(5, 0.06);
        BathSpec bath = BathSpec::family("four-level", 3);
        DisorderSample s = sample_disorder(p, seed);
        TotalSystem sys = build_total_system(p, s, bath);
        DenseMatrix J = current_operator(sys.H_l, sys.H_r);
        DenseMatrix rho0 = initial_density(sys, bath, seed);
        CurrentTrace tr = average_current(sys, J, rho0, {5.0, 25.0, 100.0});
        worst_res = std::max(worst_res, tr.conservation_residual);
        worst_drift = std::max(worst_drift, tr.energy_drift);
    }
    c.require(worst_res < 1e-9, "conservation residual " + fmt(worst_res));
    c.require(worst_drift < 1e-10, "energy drift " + fmt(worst_drift));
    c.note("worst residual " + fmt(worst_res) + ", worst drift " + fmt(worst_drift));
    return c;
}

Check criterion_13() {
    Check c;
    const SweepSummary& sweep = TransportShared::get().sweep;
    for (std::size_t i = 0; i + 1 < sweep.median_abs_current.size(); ++i)
        c.require(sweep.median_abs_current[i + 1] <= sweep.median_abs_current[i],
                  "median |J| increased from L=" + std::to_string(sweep.lengths[i]));
    std::string meds;
    for (double m : sweep.median_abs_current) meds += fmt(m) + " ";
    c.note("medians " + meds + "(no quantitative exponent target)");
    return c;
}

// --- 14: perturbed-triangular spectral lemma -----------------------------------------

Check criterion_14() {
    Check c;
    auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (int d : {5, 10, 20})
        for (double eps : {0.01, 0.05, 0.1}) {
            SpectralLemmaResult r = spectral_lemma_check(d, eps, 1000, 99);
            worst = std::max(worst, r.max_ratio);
            c.require(r.max_ratio <= r.constant,
                      "ratio " + fmt(r.max_ratio) + " over the constant at d=" +
                          std::to_string(d) + " eps=" + fmt(eps));
        }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.require(secs < 30.0, "runtime " + fmt(secs) + "s over the 30 s budget");
    c.note("worst ratio " + fmt(worst) + " vs 9.657, in " + fmt(secs) + "s");
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i + 1 < argc + 1; ++i)
        if (i + 1 < argc && std::strcmp(argv[i], "--only") == 0) only = std::atoi(argv[i + 1]);

    struct Entry {
        int id;
        const char* name;
        std::function<Check()> run;
    };
    std::vector<Entry> entries = {
        {1, "algebra-oracle equivalence", criterion_1},
        {2, "spectrum preservation", criterion_2},
        {3, "generator residual", criterion_3},
        {4, "representation equivalence", criterion_4},
        {5, "resolvent-expansion identity", criterion_5},
        {6, "flow contraction", criterion_6},
        {7, "LIOM residuals", criterion_7},
        {8, "locality tails", criterion_8},
        {9, "diagonal-coupling decay", criterion_9},
        {10, "diagram census", criterion_10},
        {11, "resonance-probability trend", criterion_11},
        {12, "transport conservation", criterion_12},
        {13, "transport trend", criterion_13},
        {14, "perturbed-triangular spectral lemma", criterion_14},
    };

    int failures = 0;
    for (const Entry& e : entries) {
        if (only != 0 && e.id != only) continue;
        Check c;
        try {
            c = e.run();
        } catch (const std::exception& ex) {
            c.ok = false;
            c.detail = std::string("exception: ") + ex.what();
        }
        std::printf("[%s] %2d. %s%s%s\n", c.ok ? "PASS" : "FAIL", e.id, e.name,
                    c.detail.empty() ? "" : " -- ", c.detail.c_str());
        std::fflush(stdout);
        failures += c.ok ? 0 : 1;
    }
    return failures;
}
