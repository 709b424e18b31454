#include "spinflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spinflow/oracle.hpp"

namespace spinflow {

namespace {

inline std::uint64_t restrict_index(std::uint64_t j, const Interval& W, const Interval& sub) {
    if (sub.is_empty()) return 0;
    return (j >> (W.hi - sub.hi)) & ((1ull << sub.size()) - 1ull);
}

inline double inv_factorial(int n) {
    double acc = 1.0;
    for (int i = 2; i <= n; ++i) acc *= i;
    return 1.0 / acc;
}

}  // namespace

std::string resonance_kind_name(ResonanceKind k) {
    switch (k) {
        case ResonanceKind::nr1: return "NR_I";
        case ResonanceKind::nr2: return "NR_II";
        case ResonanceKind::denominator_floor: return "denominator-floor";
    }
    return "?";
}

void FlowParams::resolve(double gamma) {
    if (delta < 0.0) delta = gamma > 0.0 ? std::pow(gamma, 0.25) : 0.5;
    if (epsilon < 0.0) epsilon = gamma > 0.0 ? std::pow(gamma, 0.25) : 0.5;
}

double FlowParams::denominator_floor(int support_len) const {
    return eta_den_margin * std::pow(epsilon, support_len);
}

OperatorSum FlowState::E() const {
    OperatorSum out(L, Parity::hermitian);
    for (const XMonomial& m : E_terms) out.add_term(m);
    return out;
}

OperatorSum FlowState::hamiltonian() const {
    OperatorSum out = E();
    out.add(V);
    return out;
}

XMonomial FlowState::denominator(std::uint64_t active, Interval v_support) const {
    XMonomial d = XMonomial::scalar(L, 0.0);
    // Seed the support so the table covers the V-term even if no E-term acts.
    if (!v_support.is_empty()) {
        std::vector<cplx> zeros(1ull << v_support.size(), 0.0);
        d = XMonomial(L, 0, v_support, std::move(zeros));
    }
    for (const XMonomial& e : E_terms) {
        if ((interval_mask(e.support()) & active) == 0) continue;
        XMonomial de = spin_flip_derivative(active, e);
        if (de.norm() == 0.0) continue;
        d.accumulate(de);
    }
    return d;
}

FlowState initial_state(const ModelParams& params, const DisorderSample& sample) {
    BareSplit bare = split_bare(params, sample);
    FlowState st;
    st.L = params.L;
    st.k = 0;
    st.E_terms = bare_energy_terms(params, sample);
    st.V = OperatorSum(params.L, Parity::hermitian);
    // Diagonal perturbation monomials go straight into E; V stays
    // off-diagonal from the start.
    for (const BareTerm& bt : bare.terms_by_diagram) {
        if (bt.active == 0)
            st.E_terms.push_back(bt.term);
        else
            st.V.add_term(bt.term);
    }
    return st;
}

OperatorSum select_perturbative(const FlowState& state, const ScaleLadder& ladder) {
    const Rational& cut = ladder.length(state.k + 1);
    OperatorSum out(state.L, Parity::hermitian);
    for (const auto& [act, m] : state.V.terms()) {
        if (act == 0) continue;
        // Order threshold proxied by the active-hull length: |g| >= |I(g)| >=
        // |hull(A(g))| for every diagram carrying this active set, so this
        // over-selects relative to |g| < L_{k+1}. The term's support itself is
        // not indicative here, since merging by active set widens it.
        int hull = mask_hull(act).size();
        if (Rational(hull) < cut) out.add_term(m);
    }
    return out;
}

GeneratorResult solve_generator(const FlowState& state, const OperatorSum& v_per,
                                const FlowParams& params) {
    GeneratorResult res;
    res.A = OperatorSum(state.L, Parity::skew_hermitian);
    res.kept = OperatorSum(state.L, Parity::hermitian);
    res.deferred = OperatorSum(state.L, Parity::hermitian);
    for (const auto& [act, m] : v_per.terms()) {
        if (act == 0) throw std::invalid_argument("solve_generator: v_per must be off-diagonal");
        XMonomial den = state.denominator(act, m.support());
        Interval W = den.support().hull(m.support());
        double floor = params.denominator_floor(m.support().size());

        std::vector<cplx> a_tab(1ull << W.size());
        std::vector<cplx> keep_tab(a_tab.size());
        std::vector<cplx> defer_tab(a_tab.size());
        double worst = 0.0;
        bool any_floor = false;
        for (std::uint64_t j = 0; j < a_tab.size(); ++j) {
            cplx f = m.value_local(restrict_index(j, W, m.support()));
            cplx d = den.value_local(restrict_index(j, W, den.support()));
            if (std::abs(d) < floor || std::abs(f) > params.eta_A_cap * std::abs(d)) {
                any_floor = true;
                worst = std::min(worst == 0.0 ? floor : worst, std::abs(d));
                a_tab[j] = 0.0;
                keep_tab[j] = 0.0;
                defer_tab[j] = f;
            } else {
                a_tab[j] = f / d;
                keep_tab[j] = f;
                defer_tab[j] = 0.0;
            }
        }
        XMonomial am(state.L, act, W, std::move(a_tab));
        XMonomial km(state.L, act, W, std::move(keep_tab));
        XMonomial dm(state.L, act, W, std::move(defer_tab));
        am.shrink(0.0);
        km.shrink(0.0);
        dm.shrink(0.0);
        if (am.norm() > 0.0) res.A.add_term(std::move(am));
        if (km.norm() > 0.0) res.kept.add_term(std::move(km));
        if (dm.norm() > 0.0) res.deferred.add_term(std::move(dm));
        if (any_floor) {
            res.events.push_back(ResonanceEvent{state.k, ResonanceKind::denominator_floor,
                                                "monomial " + std::to_string(act) + " on " +
                                                    m.support().str(),
                                                worst, floor});
        }
    }
    return res;
}

RotateReport rotate_step(FlowState& state, const OperatorSum& A, const FlowParams& params) {
    RotateReport report;
    const int L = state.L;

    // The rotated-away part: K = -[A, E], computed per E-term for locality.
    OperatorSum K(L, Parity::hermitian);
    for (const auto& [aact, am] : A.terms())
        for (const XMonomial& e : state.E_terms)
            if (auto c = commutator_monomials(am, e))
                K.add_term(c->scaled(-1.0), params.drop_tol);

    OperatorSum R = state.V;
    R.add(K, -1.0, 0.0);

    OperatorSum v_next(L, Parity::hermitian);
    std::vector<XMonomial> new_diag;
    double absorbed = 0.0;
    auto route = [&](const XMonomial& m, double coeff) {
        XMonomial scaled = m.scaled(coeff);
        if (scaled.norm() <= params.drop_tol) return;
        if (scaled.is_diagonal()) {
            scaled.shrink(0.0);
            absorbed += scaled.norm();
            new_diag.push_back(std::move(scaled));
        } else {
            v_next.add_term(std::move(scaled), params.drop_tol);
        }
    };

    for (const auto& [act, m] : R.terms()) route(m, 1.0);  // n = 0 of the rest

    double norm_A = operator_norm(A, params.dense_cutoff_L).value;
    double norm_H = state.E().norm_bound() + state.V.norm_bound();
    OperatorSum P = K;
    OperatorSum Rn = R;
    double coeff_bound = norm_H;
    double inv_fact = 1.0;
    bool converged = A.empty() || norm_A == 0.0;
    int n = 0;
    if (!converged) {
        for (n = 1; n <= params.n_max; ++n) {
            P = commutator(A, P, params.drop_tol);
            Rn = commutator(A, Rn, params.drop_tol);
            inv_fact /= static_cast<double>(n);
            double c_per = static_cast<double>(n) / (n + 1.0) * inv_fact;
            for (const auto& [act, m] : P.terms()) route(m, c_per);
            for (const auto& [act, m] : Rn.terms()) route(m, inv_fact);
            coeff_bound *= 2.0 * norm_A / static_cast<double>(n);
            if (coeff_bound < params.eta_series) {
                converged = true;
                break;
            }
        }
    }
    report.series_converged = converged;
    report.series_terms = n;
    if (!converged) return report;  // step aborted; state untouched past this point

    for (XMonomial& m : new_diag) {
        // Hermitian diagonal monomials are real; strip fp dust so later
        // denominators stay clean.
        std::vector<cplx> tab(m.table().size());
        for (std::size_t j = 0; j < tab.size(); ++j) tab[j] = cplx(m.table()[j].real(), 0.0);
        state.E_terms.emplace_back(L, 0, m.support(), std::move(tab));
    }
    report.absorbed_norm = absorbed;
    state.V = std::move(v_next);
    state.generators.push_back(A);
    state.k += 1;
    return report;
}

// --- Triadic representation -------------------------------------------------

namespace {

// Diagonal tables over a common working support, indexed like XMonomial.
struct WorkTable {
    Interval W;
    std::vector<cplx> vals;
};

WorkTable tabulate(const XMonomial& m, const Interval& W) {
    WorkTable t{W, std::vector<cplx>(1ull << W.size())};
    for (std::uint64_t j = 0; j < t.vals.size(); ++j)
        t.vals[j] = m.value_local(restrict_index(j, W, m.support()));
    return t;
}

}  // namespace

TriadicGenerator solve_generator_triadic(const DiagramTerm& g, const std::vector<PoolEntry>& pool,
                                         const std::vector<XMonomial>& E0_terms,
                                         const ScaleLadder& ladder, const FlowParams& params,
                                         int L) {
    if (!g.diagram || g.diagram->is_diagonal())
        throw std::invalid_argument("solve_generator_triadic: need an off-diagonal diagram");
    TriadicGenerator out;
    const std::uint64_t act = g.diagram->active;
    const Interval Ig = g.diagram->domain;

    // Relevant pool entries and their flip derivatives.
    struct Relevant {
        const PoolEntry* entry;
        XMonomial deriv;
        int lprot, rprot;
    };
    std::vector<Relevant> rel;
    Interval W = g.term.support();
    for (const PoolEntry& pe : pool) {
        if ((act & interval_mask(pe.diagram->domain.extended(L))) == 0) continue;
        XMonomial d = spin_flip_derivative(act, pe.term);
        W = W.hull(d.support());
        rel.push_back(Relevant{&pe, std::move(d),
                               std::max(0, Ig.lo - pe.diagram->domain.lo),
                               std::max(0, pe.diagram->domain.hi - Ig.hi)});
    }

    // Bare denominator d_g E^(0).
    XMonomial d0 = XMonomial::scalar(L, 0.0);
    {
        std::vector<cplx> zeros(1, 0.0);
        bool seeded = false;
        for (const XMonomial& e : E0_terms) {
            if ((interval_mask(e.support()) & act) == 0) continue;
            XMonomial de = spin_flip_derivative(act, e);
            if (!seeded) {
                d0 = de;
                seeded = true;
            } else {
                d0.accumulate(de);
            }
        }
        if (!seeded) throw std::runtime_error("solve_generator_triadic: empty bare denominator");
    }
    W = W.hull(d0.support());

    int U = 0, Vmax = 0;
    for (const Relevant& r : rel) {
        U = std::max(U, r.lprot);
        Vmax = std::max(Vmax, r.rprot);
    }

    // Truncated denominators D_{u,v} for all offsets we may need.
    std::vector<std::vector<WorkTable>> D(U + 1, std::vector<WorkTable>(Vmax + 1));
    WorkTable base = tabulate(d0, W);
    std::vector<WorkTable> derivs;
    derivs.reserve(rel.size());
    for (const Relevant& r : rel) derivs.push_back(tabulate(r.deriv, W));
    for (int u = 0; u <= U; ++u)
        for (int v = 0; v <= Vmax; ++v) {
            WorkTable t = base;
            for (std::size_t i = 0; i < rel.size(); ++i)
                if (rel[i].lprot <= u && rel[i].rprot <= v)
                    for (std::uint64_t j = 0; j < t.vals.size(); ++j)
                        t.vals[j] += derivs[i].vals[j];
            D[u][v] = std::move(t);
        }
    auto denom_at = [&](int u, int v, std::uint64_t j) -> cplx {
        if (u < 0 || v < 0) return cplx(1.0, 0.0);
        return D[u][v].vals[j];
    };

    std::vector<DiagramPtr> pool_diagrams;
    pool_diagrams.reserve(pool.size());
    for (const PoolEntry& pe : pool) pool_diagrams.push_back(pe.diagram);
    std::vector<Triad> triads = build_triads(g.diagram, pool_diagrams, ladder, L);

    WorkTable vt = tabulate(g.term, W);
    const double floor = params.denominator_floor(Ig.size());

    auto deriv_table_for = [&](const DiagramPtr& d) -> const WorkTable* {
        for (std::size_t i = 0; i < rel.size(); ++i)
            if (rel[i].entry->diagram == d) return &derivs[i];
        throw std::logic_error("solve_generator_triadic: gap diagram not in pool");
    };

    for (Triad& t : triads) {
        TriadTerm tt;
        const int r = t.r, s = t.s;
        const bool extra = r > 0 && s > 0 && t.left->domain.lo != t.right->domain.lo;
        const double sign = ((r == 0) != (s == 0)) ? -1.0 : 1.0;
        const WorkTable* dl = t.left ? deriv_table_for(t.left) : nullptr;
        const WorkTable* dr = t.right ? deriv_table_for(t.right) : nullptr;

        std::vector<cplx> a_tab(vt.vals.size(), 0.0);
        double min_d1 = 1e300, min_d2 = 1e300;
        for (std::uint64_t j = 0; j < a_tab.size(); ++j) {
            cplx num = vt.vals[j];
            if (dl) num *= dl->vals[j];
            if (dr) num *= dr->vals[j];
            cplx d1 = denom_at(r, s, j) * denom_at(r, s - 1, j) * denom_at(r - 1, s, j);
            cplx d2 = denom_at(r, s - 1, j) * denom_at(r - 1, s, j) * denom_at(r - 1, s - 1, j);
            min_d1 = std::min(min_d1, std::abs(d1));
            min_d2 = std::min(min_d2, std::abs(d2));
            cplx val = d1 != cplx(0.0) ? num / d1 : cplx(0.0);
            if (extra) val += d2 != cplx(0.0) ? num / d2 : cplx(0.0);
            a_tab[j] = sign * val;
        }
        tt.inv_d1_norm = min_d1 > 0.0 ? 1.0 / min_d1 : 1e300;
        tt.inv_d2_norm = min_d2 > 0.0 ? 1.0 / min_d2 : 1e300;

        // The floor applies to each truncated-denominator factor.
        double min_factor = 1e300;
        auto scan_factor = [&](int u, int v) {
            if (u < 0 || v < 0) return;
            for (const cplx& c : D[u][v].vals) min_factor = std::min(min_factor, std::abs(c));
        };
        scan_factor(r, s);
        scan_factor(r, s - 1);
        scan_factor(r - 1, s);
        if (extra) scan_factor(r - 1, s - 1);
        if (min_factor < floor) {
            tt.deferred = true;
            out.any_deferred = true;
            out.floor_events.push_back(
                ResonanceEvent{t.scale, ResonanceKind::denominator_floor,
                               "triad r=" + std::to_string(r) + " s=" + std::to_string(s) +
                                   " center " + Ig.str(),
                               min_factor, floor});
            tt.term = XMonomial::scalar(L, 0.0);
        } else {
            XMonomial am(L, act, W, std::move(a_tab));
            am.shrink(0.0);
            tt.term = std::move(am);
        }
        tt.triad = std::move(t);
        out.terms.push_back(std::move(tt));
    }
    return out;
}

XMonomial first_representation(const DiagramTerm& g, const std::vector<PoolEntry>& pool,
                               const std::vector<XMonomial>& E0_terms, const FlowParams& params,
                               int L) {
    const std::uint64_t act = g.diagram->active;
    XMonomial den = XMonomial::scalar(L, 0.0);
    bool seeded = false;
    auto add_term = [&](const XMonomial& e) {
        if ((interval_mask(e.support()) & act) == 0) return;
        XMonomial de = spin_flip_derivative(act, e);
        if (!seeded) {
            den = de;
            seeded = true;
        } else {
            den.accumulate(de);
        }
    };
    for (const XMonomial& e : E0_terms) add_term(e);
    for (const PoolEntry& pe : pool)
        if ((act & interval_mask(pe.diagram->domain.extended(L))) != 0) add_term(pe.term);
    if (!seeded) throw std::runtime_error("first_representation: empty denominator");

    Interval W = den.support().hull(g.term.support());
    double floor = params.denominator_floor(g.diagram->domain.size());
    std::vector<cplx> tab(1ull << W.size());
    for (std::uint64_t j = 0; j < tab.size(); ++j) {
        cplx f = g.term.value_local(restrict_index(j, W, g.term.support()));
        cplx d = den.value_local(restrict_index(j, W, den.support()));
        tab[j] = std::abs(d) < floor ? cplx(0.0) : f / d;
    }
    XMonomial am(L, act, W, std::move(tab));
    am.shrink(0.0);
    return am;
}

std::vector<ResonanceEvent> detect_resonances(const std::vector<TriadTerm>& triads, double gamma,
                                              const FlowParams& params,
                                              const ScaleLadder& ladder) {
    std::vector<ResonanceEvent> out;
    for (const TriadTerm& tt : triads) {
        const Diagram& c = *tt.triad.center;
        double thr1 = std::pow(params.epsilon, -to_double(c.order));
        double measured1 = std::max(tt.inv_d1_norm, tt.inv_d2_norm);
        if (measured1 > thr1)
            out.push_back(ResonanceEvent{tt.triad.scale, ResonanceKind::nr1,
                                         "triad center " + c.domain.str(), measured1, thr1});
        if (is_crowded(c, ladder.beta())) continue;  // NR_II trivially satisfied
        double order_t = to_double(tt.triad.order);
        double bare_t = static_cast<double>(tt.triad.bare_order);
        double b2 = std::pow(params.delta, bare_t - order_t) *
                    std::pow(gamma / params.epsilon, order_t) /
                    (4.0 * to_double(Rational(tt.triad.factorial)));
        double measured2 = tt.term.norm();
        if (measured2 > b2)
            out.push_back(ResonanceEvent{tt.triad.scale, ResonanceKind::nr2,
                                         "triad center " + c.domain.str(), measured2, b2});
    }
    return out;
}

std::vector<XMonomial> TriadicState::E_terms() const {
    std::vector<XMonomial> out = E0_terms;
    for (const PoolEntry& pe : pool) out.push_back(pe.term);
    return out;
}

OperatorSum TriadicState::V_sum() const {
    OperatorSum out(L, Parity::hermitian);
    for (const DiagramTerm& dt : V) out.add_term(dt.term);
    return out;
}

TriadicState initial_triadic_state(const ModelParams& params, const DisorderSample& sample) {
    BareSplit bare = split_bare(params, sample);
    TriadicState st;
    st.L = params.L;
    st.k = 0;
    st.E0_terms = bare_energy_terms(params, sample);
    for (const BareTerm& bt : bare.terms_by_diagram)
        st.V.push_back(DiagramTerm{scale0_diagram(bt.active, bt.I), bt.term});
    return st;
}

namespace {

// Merge key for the tuple expansion: tuples sharing every diagram attribute
// are interchangeable for thresholds, triad geometry, and NR checks, so their
// operators are accumulated on one register entry. Without this the number of
// tuples grows like (#triads)^n and swamps memory.
struct MergeKey {
    int scale;
    long long bare;
    int lo, hi;
    std::uint64_t active;
    Rational order;
    BigInt fact;

    bool operator<(const MergeKey& o) const {
        if (scale != o.scale) return scale < o.scale;
        if (bare != o.bare) return bare < o.bare;
        if (lo != o.lo) return lo < o.lo;
        if (hi != o.hi) return hi < o.hi;
        if (active != o.active) return active < o.active;
        if (order != o.order) return order < o.order;
        return fact < o.fact;
    }
    static MergeKey of(const Diagram& d) {
        return MergeKey{d.scale, d.bare_order, d.domain.lo, d.domain.hi,
                        d.active, d.order, d.factorial};
    }
};

struct TriadicRotator {
    std::vector<const TriadTerm*> gens;  // non-deferred, sorted by norm, descending
    std::vector<double> gen_norms;
    const ScaleLadder& ladder;
    const FlowParams& params;
    int L;
    std::map<MergeKey, DiagramTerm> out;
    std::uint64_t emitted = 0;

    TriadicRotator(const std::vector<TriadTerm>& all, const ScaleLadder& lad,
                   const FlowParams& fp, int length)
        : ladder(lad), params(fp), L(length) {
        for (const TriadTerm& t : all)
            if (!t.deferred && t.term.norm() > 0.0) gens.push_back(&t);
        std::sort(gens.begin(), gens.end(), [](const TriadTerm* a, const TriadTerm* b) {
            return a->term.norm() > b->term.norm();
        });
        for (const TriadTerm* t : gens) gen_norms.push_back(t->term.norm());
    }

    void expand(const DiagramTerm& base, bool per_kept) {
        std::vector<Triad> parts;
        MergeKey key = MergeKey::of(*base.diagram);
        dfs(base, parts, key, base.term, base.term.norm(), 0, per_kept);
    }

    // The merge key is accumulated incrementally; diagram objects are only
    // materialized when a key first enters the register.
    void dfs(const DiagramTerm& base, std::vector<Triad>& parts, const MergeKey& key,
             const XMonomial& current, double current_norm, int n, bool per_kept) {
        int depth = n + 1;
        double inv_f = inv_factorial(depth);
        for (std::size_t i = 0; i < gens.size(); ++i) {
            // ||[A(t), C]|| <= 2 ||A(t)|| ||C||; emissions carry 1/m! and only
            // shrink under further extension, so with triads sorted by norm
            // the first candidate below the cut ends the whole loop.
            if (2.0 * gen_norms[i] * current_norm * inv_f <= params.drop_tol_diagram) break;
            const TriadTerm& at = *gens[i];
            auto c = commutator_monomials(at.term, current);
            if (!c) continue;
            double cnorm = c->norm();
            if (cnorm * inv_f <= params.drop_tol_diagram) continue;
            const Triad& t = at.triad;
            MergeKey next = key;
            next.scale = t.scale + 1;
            next.bare += t.bare_order;
            next.lo = std::min(next.lo, t.domain.lo);
            next.hi = std::max(next.hi, t.domain.hi);
            next.active ^= t.active;
            next.order += t.order;
            // g! = n! t_0! ... t_n!: the n-th extension multiplies by n t_n!.
            next.fact = key.fact * depth * t.factorial;
            parts.push_back(t);
            double coeff = per_kept ? static_cast<double>(depth) / (depth + 1.0) * inv_f : inv_f;
            emit(base, parts, next, c->scaled(coeff));
            if (depth < params.n_max) dfs(base, parts, next, *c, cnorm, depth, per_kept);
            parts.pop_back();
        }
    }

    void emit(const DiagramTerm& base, const std::vector<Triad>& parts, const MergeKey& key,
              XMonomial term) {
        auto it = out.find(key);
        if (it != out.end()) {
            it->second.term.accumulate(term);
            return;
        }
        DiagramPtr d = compose(base.diagram, parts, ladder, L);
        out.emplace(key, DiagramTerm{std::move(d), std::move(term)});
        if (++emitted > params.diagram_budget)
            throw BudgetExceeded("triadic rotation: diagram budget exceeded");
    }
};

}  // namespace

TriadicStepReport triadic_step(TriadicState& state, const FlowParams& params,
                               const ScaleLadder& ladder, double gamma) {
    TriadicStepReport report;
    const Rational& cut = ladder.length(state.k + 1);
    report.n_diagrams = static_cast<int>(state.V.size());

    // Generators for the off-diagonal low-order diagrams; a diagram with any
    // deferred triad is deferred whole so the cancellation stays exact.
    std::vector<TriadTerm> gens;
    std::vector<bool> is_per(state.V.size(), false);
    OperatorSum A_sum(state.L, Parity::skew_hermitian);
    for (std::size_t i = 0; i < state.V.size(); ++i) {
        const DiagramTerm& dt = state.V[i];
        if (dt.diagram->is_diagonal() || !(dt.diagram->order < cut)) continue;
        TriadicGenerator tg =
            solve_generator_triadic(dt, state.pool, state.E0_terms, ladder, params, state.L);
        for (const ResonanceEvent& ev : tg.floor_events) report.events.push_back(ev);
        for (ResonanceEvent& ev : detect_resonances(tg.terms, gamma, params, ladder))
            report.events.push_back(std::move(ev));
        if (tg.any_deferred) {
            report.deferred_diagrams += 1;
            continue;
        }
        is_per[i] = true;
        for (TriadTerm& tt : tg.terms) {
            if (tt.term.norm() > 0.0) A_sum.add_term(tt.term);
            gens.push_back(std::move(tt));
        }
    }
    report.n_triads = static_cast<int>(gens.size());

    std::vector<DiagramTerm> v_next;
    TriadicRotator rotator(gens, ladder, params, state.L);
    std::vector<PoolEntry> absorbed;
    for (std::size_t i = 0; i < state.V.size(); ++i) {
        const DiagramTerm& dt = state.V[i];
        bool small = dt.diagram->order < cut;
        if (is_per[i]) {
            rotator.expand(dt, true);  // n = 0 part cancels
        } else {
            rotator.expand(dt, false);
            if (!small) {
                v_next.push_back(DiagramTerm{regenerate(dt.diagram, ladder), dt.term});
            } else if (dt.diagram->is_diagonal()) {
                absorbed.push_back(PoolEntry{dt.diagram, dt.term});
            } else {
                v_next.push_back(dt);  // deferred resonant diagram, re-exposed later
            }
        }
    }
    for (auto& [key, dt] : rotator.out) {
        if (dt.term.norm() <= params.drop_tol_diagram) continue;
        dt.term.shrink(0.0);
        v_next.push_back(std::move(dt));
    }

    for (PoolEntry& pe : absorbed) state.pool.push_back(std::move(pe));
    state.V = std::move(v_next);
    state.generators.push_back(std::move(A_sum));
    state.k += 1;
    return report;
}

// --- Driver ------------------------------------------------------------------

FlowResult run_flow(const ModelParams& params, const DisorderSample& sample,
                    const FlowParams& flow_params_in) {
    FlowParams fp = flow_params_in;
    fp.resolve(params.gamma);
    ScaleLadder ladder(fp.beta);

    FlowResult result;
    bool dense_ok = params.L <= fp.dense_cutoff_L;
    Eigen::VectorXd spec0;

    auto spectrum_of = [&](const OperatorSum& H) {
        return dense_spectrum(DenseOperator{to_dense(H), true}).eigenvalues;
    };

    if (fp.mode == FlowMode::aggregate) {
        FlowState st = initial_state(params, sample);
        if (dense_ok) spec0 = spectrum_of(st.hamiltonian());
        double best_norm = 1e300;
        int no_progress = 0;
        for (;;) {
            ScaleReport row;
            row.k = st.k;
            NormResult nv = operator_norm(st.V, fp.dense_cutoff_L);
            row.norm_V = nv.value;
            row.norm_V_exact = nv.exact;
            row.n_terms = st.V.term_count();
            if (dense_ok)
                row.spectrum_drift = spectrum_distance(spec0, spectrum_of(st.hamiltonian()));
            result.max_spectrum_drift = std::max(result.max_spectrum_drift, row.spectrum_drift);
            if (nv.value <= fp.eta_conv) {
                result.converged = true;
                result.reports.push_back(row);
                break;
            }
            if (st.k >= fp.k_max) {
                result.reports.push_back(row);
                break;
            }
            // Resonant samples can churn without progress once everything
            // selectable is deferred; stop grinding after a few flat scales.
            if (nv.value < best_norm * 0.99) {
                best_norm = nv.value;
                no_progress = 0;
            } else if (++no_progress >= 3 && st.k > 3) {
                result.reports.push_back(row);
                break;
            }
            OperatorSum v_per = select_perturbative(st, ladder);
            GeneratorResult gen = solve_generator(st, v_per, fp);
            row.norm_A = operator_norm(gen.A, fp.dense_cutoff_L).value;
            row.floor_events = static_cast<int>(gen.events.size());
            row.step_deferred = !gen.events.empty();
            result.total_floor_events += row.floor_events;
            for (const ResonanceEvent& ev : gen.events) st.resonance_log.push_back(ev);
            {
                OperatorSum resid = commutator(gen.A, st.E());
                resid.add(gen.kept);
                row.generator_residual = resid.norm_bound();
            }
            RotateReport rot = rotate_step(st, gen.A, fp);
            row.series_terms = rot.series_terms;
            result.reports.push_back(row);
            if (!rot.series_converged) {
                result.series_failure = true;
                break;
            }
        }
        result.final_norm_V = operator_norm(st.V, fp.dense_cutoff_L).value;
        result.state = std::move(st);
    } else {
        TriadicState ts = initial_triadic_state(params, sample);
        FlowState shadow;  // assembled view for reporting and downstream use
        auto sync = [&](FlowState& dst) {
            dst.L = ts.L;
            dst.k = ts.k;
            dst.E_terms = ts.E_terms();
            dst.V = ts.V_sum();
            dst.generators = ts.generators;
            dst.resonance_log = ts.resonance_log;
        };
        sync(shadow);
        if (dense_ok) spec0 = spectrum_of(shadow.hamiltonian());
        for (;;) {
            sync(shadow);
            ScaleReport row;
            row.k = ts.k;
            NormResult nv = operator_norm(shadow.V, fp.dense_cutoff_L);
            row.norm_V = nv.value;
            row.norm_V_exact = nv.exact;
            row.n_terms = ts.V.size();
            if (dense_ok)
                row.spectrum_drift = spectrum_distance(spec0, spectrum_of(shadow.hamiltonian()));
            result.max_spectrum_drift = std::max(result.max_spectrum_drift, row.spectrum_drift);
            if (nv.value <= fp.eta_conv) {
                result.converged = true;
                result.reports.push_back(row);
                break;
            }
            if (ts.k >= fp.k_max) {
                result.reports.push_back(row);
                break;
            }
            TriadicStepReport rep = triadic_step(ts, fp, ladder, params.gamma);
            for (const ResonanceEvent& ev : rep.events) {
                ts.resonance_log.push_back(ev);
                switch (ev.kind) {
                    case ResonanceKind::denominator_floor:
                        result.total_floor_events += 1;
                        row.floor_events += 1;
                        break;
                    case ResonanceKind::nr1:
                        result.total_nr1 += 1;
                        row.nr1_events += 1;
                        break;
                    case ResonanceKind::nr2:
                        result.total_nr2 += 1;
                        row.nr2_events += 1;
                        break;
                }
            }
            row.norm_A = ts.generators.empty()
                             ? 0.0
                             : operator_norm(ts.generators.back(), fp.dense_cutoff_L).value;
            result.reports.push_back(row);
        }
        sync(shadow);
        result.final_norm_V = operator_norm(shadow.V, fp.dense_cutoff_L).value;
        result.state = std::move(shadow);
    }
    return result;
}

std::vector<ResonanceScanRow> resonance_scan_k0(const ModelParams& params, int n_samples,
                                                const std::vector<double>& epsilons) {
    params.validate();
    const int L = params.L;
    // Per-order maxima of ||1/d_g E^(0)|| across diagrams, per sample.
    std::vector<std::vector<double>> max_inv(n_samples, std::vector<double>(params.I_max + 1, 0.0));
    for (int s = 0; s < n_samples; ++s) {
        DisorderSample sample = sample_disorder(params, static_cast<std::uint64_t>(s));
        FlowState st;
        st.L = L;
        st.E_terms = bare_energy_terms(params, sample);
        for (int lo = 1; lo <= L; ++lo)
            for (int len = 1; len <= params.I_max && lo + len - 1 <= L; ++len) {
                Interval I{lo, lo + len - 1};
                std::uint64_t im = interval_mask(I);
                for (std::uint64_t sub = im;; sub = (sub - 1) & im) {
                    if (sub == 0) break;  // diagonal diagrams carry no denominator
                    XMonomial d = st.denominator(sub, I);
                    double min_abs = 1e300;
                    for (const cplx& v : d.table()) min_abs = std::min(min_abs, std::abs(v));
                    double inv = min_abs > 0.0 ? 1.0 / min_abs : 1e300;
                    max_inv[s][len] = std::max(max_inv[s][len], inv);
                }
            }
    }
    std::vector<ResonanceScanRow> rows;
    for (double eps : epsilons) {
        long long any_count = 0;
        std::vector<long long> per_w(params.I_max + 1, 0);
        for (int s = 0; s < n_samples; ++s) {
            bool any = false;
            for (int w = 1; w <= params.I_max; ++w) {
                if (max_inv[s][w] > std::pow(eps, -static_cast<double>(w))) {
                    per_w[w] += 1;
                    any = true;
                }
            }
            if (any) any_count += 1;
        }
        rows.push_back(ResonanceScanRow{eps, 0, n_samples, any_count,
                                        static_cast<double>(any_count) / n_samples});
        for (int w = 1; w <= params.I_max; ++w)
            rows.push_back(ResonanceScanRow{eps, w, n_samples, per_w[w],
                                            static_cast<double>(per_w[w]) / n_samples});
    }
    return rows;
}

}  // namespace spinflow
