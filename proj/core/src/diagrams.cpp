#include "spinflow/diagrams.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spinflow {

ScaleLadder::ScaleLadder(Rational beta) : beta_(std::move(beta)) {
    if (!(beta_ > 0 && beta_ < 1))
        throw std::invalid_argument("ScaleLadder: beta must lie in (0,1)");
    lengths_.push_back(Rational(1));
}

const Rational& ScaleLadder::length(int k) const {
    if (k < 0) throw std::invalid_argument("ScaleLadder::length: negative scale");
    while (static_cast<int>(lengths_.size()) <= k)
        lengths_.push_back(lengths_.back() * (1 + beta_));
    return lengths_[k];
}

std::string Diagram::json() const {
    std::string s = "{\"scale\":" + std::to_string(scale) + ",\"order\":\"" +
                    order.str() + "\",\"bare_order\":" + std::to_string(bare_order) +
                    ",\"domain\":[" + std::to_string(domain.lo) + "," +
                    std::to_string(domain.hi) + "],\"active\":" + std::to_string(active) +
                    ",\"factorial\":\"" + factorial.str() + "\"}";
    return s;
}

DiagramPtr scale0_diagram(std::uint64_t active_mask, Interval I) {
    if (I.is_empty()) throw std::invalid_argument("scale0_diagram: empty interval");
    if ((active_mask & ~interval_mask(I)) != 0)
        throw std::invalid_argument("scale0_diagram: active set not inside the interval");
    auto g = std::make_shared<Diagram>();
    g->scale = 0;
    g->order = I.size();
    g->bare_order = I.size();
    g->domain = I;
    g->active = active_mask;
    g->factorial = 1;
    return g;
}

bool is_crowded(const Diagram& g, const Rational& beta) {
    // |g| >= |I(g)| / beta  <=>  beta |g| >= |I(g)|
    return beta * g.order >= Rational(g.domain.size());
}

Rational reduced_order(const Diagram& g, const ScaleLadder& ladder) {
    if (!is_crowded(g, ladder.beta()))
        throw std::invalid_argument("reduced_order: diagram is not crowded");
    if (g.is_diagonal()) throw std::invalid_argument("reduced_order: diagram is diagonal");
    if (!(g.order < ladder.length(g.scale + 1)))
        throw std::invalid_argument("reduced_order: order not below the next scale");
    Rational cap = Rational(g.domain.size());
    Rational floor = ladder.beta() * ladder.length(g.scale);
    return std::max(cap, floor);
}

Rational effective_order(const Diagram& g, const ScaleLadder& ladder) {
    if (!g.is_diagonal() && g.order < ladder.length(g.scale + 1) && is_crowded(g, ladder.beta()))
        return reduced_order(g, ladder);
    return g.order;
}

CrowdedInfo classify_crowded(const Diagram& g, const ScaleLadder& ladder) {
    CrowdedInfo info;
    info.crowded = is_crowded(g, ladder.beta());
    if (info.crowded && !g.is_diagonal() && g.order < ladder.length(g.scale + 1)) {
        info.has_reduced = true;
        info.reduced = reduced_order(g, ladder);
    }
    return info;
}

Triad make_triad(DiagramPtr center, DiagramPtr left, DiagramPtr right,
                 const ScaleLadder& ladder) {
    if (!center) throw std::invalid_argument("make_triad: missing center");
    if (center->is_diagonal()) throw std::invalid_argument("make_triad: diagonal center");
    Triad t;
    t.center = center;
    t.left = std::move(left);
    t.right = std::move(right);
    t.scale = center->scale;
    t.order = effective_order(*center, ladder);
    t.bare_order = center->bare_order;
    t.domain = center->domain;
    t.active = center->active;
    t.factorial = center->factorial;
    if (t.left) {
        t.order += t.left->order;
        t.bare_order += t.left->bare_order;
        t.domain = t.domain.hull(t.left->domain);
        t.factorial *= t.left->factorial;
        t.r = center->domain.lo - t.left->domain.lo;
    }
    if (t.right) {
        t.order += t.right->order;
        t.bare_order += t.right->bare_order;
        t.domain = t.domain.hull(t.right->domain);
        t.factorial *= t.right->factorial;
        t.s = t.right->domain.hi - center->domain.hi;
    }
    return t;
}

bool components_adjacent(std::uint64_t active_a, const Interval& dom_a,
                         std::uint64_t active_b, const Interval& dom_b, int L) {
    return (active_a & interval_mask(dom_b.extended(L))) != 0 ||
           (active_b & interval_mask(dom_a.extended(L))) != 0;
}

bool triads_adjacent(const Triad& a, const Triad& b, int L) {
    return components_adjacent(a.active, a.domain, b.active, b.domain, L);
}

std::vector<Triad> build_triads(const DiagramPtr& g, const std::vector<DiagramPtr>& pool,
                                const ScaleLadder& ladder, int L) {
    if (!g || g->is_diagonal()) throw std::invalid_argument("build_triads: need off-diagonal g");
    if (!(g->order < ladder.length(g->scale + 1)))
        throw std::invalid_argument("build_triads: |g| not below the next scale");
    std::vector<Triad> out;

    std::vector<DiagramPtr> lefts{nullptr};
    for (const DiagramPtr& h : pool) {
        if ((g->active & interval_mask(h->domain.extended(L))) == 0) continue;
        if (!(h->domain.lo < g->domain.lo)) continue;
        lefts.push_back(h);
    }
    for (const DiagramPtr& gp : lefts) {
        int min_left = gp ? gp->domain.lo : g->domain.lo;
        out.push_back(make_triad(g, gp, nullptr, ladder));
        for (const DiagramPtr& h : pool) {
            if ((g->active & interval_mask(h->domain.extended(L))) == 0) continue;
            if (!(h->domain.lo >= min_left)) continue;
            if (!(h->domain.hi > g->domain.hi)) continue;
            out.push_back(make_triad(g, gp, h, ladder));
        }
    }
    return out;
}

DiagramPtr regenerate(const DiagramPtr& g, const ScaleLadder& ladder) {
    if (!(g->order >= ladder.length(g->scale + 1)))
        throw std::invalid_argument("regenerate: only diagrams with |g| >= L_{k+1} are taken over");
    auto out = std::make_shared<Diagram>(*g);
    out->scale = g->scale + 1;
    out->taken_from = g;
    out->first = nullptr;
    out->parts.clear();
    return out;
}

DiagramPtr compose(const DiagramPtr& t0, std::vector<Triad> parts, const ScaleLadder& ladder,
                   int L) {
    (void)ladder;  // triad attributes already carry their reduced orders
    if (parts.empty()) throw std::invalid_argument("compose: use regenerate for n = 0");
    auto g = std::make_shared<Diagram>();
    g->scale = parts.front().scale + 1;
    g->order = t0->order;
    g->bare_order = t0->bare_order;
    g->domain = t0->domain;
    g->active = t0->active;
    g->factorial = factorial(static_cast<int>(parts.size())) * t0->factorial;
    for (std::size_t j = 0; j < parts.size(); ++j) {
        const Triad& t = parts[j];
        bool ok = components_adjacent(t.active, t.domain, t0->active, t0->domain, L);
        for (std::size_t i = 0; i < j && !ok; ++i)
            ok = triads_adjacent(parts[i], t, L);
        if (!ok) throw std::invalid_argument("compose: adjacency constraint violated");
        g->order += t.order;
        g->bare_order += t.bare_order;
        g->domain = g->domain.hull(t.domain);
        g->active ^= t.active;  // active for an odd number of components
        g->factorial *= t.factorial;
    }
    g->first = t0;
    g->parts = std::move(parts);
    return g;
}

namespace {

struct CensusBuilder {
    int L;
    long long w_max;
    const ScaleLadder& ladder;
    std::uint64_t budget;
    bool keep;
    Census census;
    // Counting accumulator: per (x,k,w), tallies per distinct factorial so
    // the hot loop stays in integer arithmetic; rationals only at the end.
    std::map<CensusKey, std::vector<std::pair<BigInt, std::uint64_t>>> acc;

    void bump() {
        if (++census.diagrams_visited > budget)
            throw BudgetExceeded("enumerate_diagrams: node budget exceeded");
    }

    void tally_fact(int x, int k, long long w, const BigInt& fact) {
        bump();
        auto& v = acc[CensusKey{x, k, w}];
        for (auto& [f, c] : v)
            if (f == fact) {
                ++c;
                return;
            }
        v.emplace_back(fact, 1);
    }

    void tally(const DiagramPtr& g) {
        tally_fact(g->domain.lo, g->scale, g->bare_order, g->factorial);
        if (keep) census.kept.push_back(g);
    }

    void finish() {
        for (const auto& [key, v] : acc) {
            Rational n = 0;
            for (const auto& [f, c] : v) n += Rational(BigInt(c), f);
            census.counts[key] = n;
        }
    }

    // Count-only DFS over ordered tuples (t_0, t_1, ..., t_n), n >= 1. The
    // adjacent-to-some-earlier constraint reduces to masks against the union
    // of earlier actives / extended domains.
    struct TriadLite {
        std::uint64_t active;
        std::uint64_t ibar;
        int lo;
        long long bare;
        BigInt fact;
        Rational order;
    };

    void extend_count(int k_next, int lo_min, long long w_used, int n,
                      const BigInt& fact, std::uint64_t union_active,
                      std::uint64_t union_ibar, const std::vector<TriadLite>& triads) {
        for (const TriadLite& t : triads) {
            if (w_used + t.bare > w_max) continue;
            if ((t.active & union_ibar) == 0 && (union_active & t.ibar) == 0) continue;
            // g! = n! t_0! t_1! ... : the (n+1)-th component multiplies by
            // (n+1) and by t!.
            BigInt next_fact = fact * (n + 1) * t.fact;
            int lo2 = std::min(lo_min, t.lo);
            tally_fact(lo2, k_next, w_used + t.bare, next_fact);
            extend_count(k_next, lo2, w_used + t.bare, n + 1, next_fact,
                         union_active | t.active, union_ibar | t.ibar, triads);
        }
    }

    // Object-materializing DFS, used when the next scale must be stored.
    void extend(const DiagramPtr& t0, std::vector<Triad>& parts,
                const std::vector<Triad>& triads, long long w_used,
                std::vector<DiagramPtr>* store) {
        for (const Triad& t : triads) {
            if (w_used + t.bare_order > w_max) continue;
            bool ok = components_adjacent(t.active, t.domain, t0->active, t0->domain, L);
            for (std::size_t i = 0; i < parts.size() && !ok; ++i)
                ok = triads_adjacent(parts[i], t, L);
            if (!ok) continue;
            parts.push_back(t);
            DiagramPtr g = compose(t0, parts, ladder, L);
            tally(g);
            if (store) store->push_back(g);
            extend(t0, parts, triads, w_used + t.bare_order, store);
            parts.pop_back();
        }
    }
};

}  // namespace

Census enumerate_diagrams(int L, int k_max, long long w_max, const Rational& beta,
                          std::uint64_t node_budget, bool keep_diagrams) {
    if (L < 1 || w_max < 1 || k_max < 0)
        throw std::invalid_argument("enumerate_diagrams: bad parameters");
    ScaleLadder ladder(beta);
    CensusBuilder builder{L, w_max, ladder, node_budget, keep_diagrams, {}};

    std::vector<DiagramPtr> current;  // G^(k)
    for (int lo = 1; lo <= L; ++lo)
        for (int hi = lo; hi <= L && hi - lo + 1 <= w_max; ++hi) {
            Interval I{lo, hi};
            std::uint64_t im = interval_mask(I);
            // All subsets of I, enumerated inside the interval's mask.
            std::uint64_t sub = 0;
            while (true) {
                DiagramPtr g = scale0_diagram(sub, I);
                builder.tally(g);
                current.push_back(g);
                if (sub == im) break;
                sub = (sub - im) & im;
            }
        }

    std::vector<DiagramPtr> pool;  // D^(k), grown scale by scale
    for (int k = 0; k < k_max; ++k) {
        std::vector<Triad> triads;
        for (const DiagramPtr& g : current) {
            if (g->is_diagonal() || !(g->order < ladder.length(k + 1))) continue;
            for (Triad& t : build_triads(g, pool, ladder, L))
                if (t.bare_order <= w_max) triads.push_back(std::move(t));
        }

        bool store_next = k + 1 < k_max || keep_diagrams;
        std::vector<DiagramPtr> next;
        std::vector<CensusBuilder::TriadLite> lite;
        if (!store_next) {
            lite.reserve(triads.size());
            for (const Triad& t : triads)
                lite.push_back(CensusBuilder::TriadLite{
                    t.active, interval_mask(t.domain.extended(L)), t.domain.lo, t.bare_order,
                    t.factorial, t.order});
        }
        for (const DiagramPtr& g : current) {
            if (g->order >= ladder.length(k + 1)) {
                DiagramPtr r = regenerate(g, ladder);
                builder.tally(r);
                if (store_next) next.push_back(r);
            }
            if (store_next) {
                std::vector<Triad> parts;
                builder.extend(g, parts, triads, g->bare_order, &next);
            } else {
                builder.extend_count(k + 1, g->domain.lo, g->bare_order, 0, g->factorial,
                                     g->active, interval_mask(g->domain.extended(L)), lite);
            }
        }

        for (const DiagramPtr& g : current)
            if (g->is_diagonal() && g->order < ladder.length(k + 1)) pool.push_back(g);
        current = std::move(next);
    }

    builder.finish();
    double fitted = 0.0;
    for (const auto& [key, N] : builder.census.counts) {
        if (key.w <= 0) continue;
        fitted = std::max(fitted, std::pow(to_double(N), 1.0 / static_cast<double>(key.w)));
    }
    builder.census.fitted_C = fitted;
    return builder.census;
}

}  // namespace spinflow
