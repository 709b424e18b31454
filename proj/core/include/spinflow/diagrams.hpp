#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include "spinflow/interval.hpp"
#include "spinflow/rational.hpp"

namespace spinflow {

// The geometric scale ladder L_k = (1+beta)^k, kept exact so the strict
// inequalities defining scales and crowdedness never depend on rounding.
class ScaleLadder {
  public:
    explicit ScaleLadder(Rational beta);

    const Rational& beta() const { return beta_; }
    const Rational& length(int k) const;  // L_k

  private:
    Rational beta_;
    mutable std::vector<Rational> lengths_;
};

struct Diagram;
using DiagramPtr = std::shared_ptr<const Diagram>;

// Triple (center, left-gap, right-gap); empty gap slots are null pointers.
struct Triad {
    DiagramPtr center;
    DiagramPtr left;
    DiagramPtr right;
    int scale = 0;  // the scale k of T^(k)
    Rational order;
    long long bare_order = 0;
    Interval domain;
    std::uint64_t active = 0;  // = center's active set
    BigInt factorial = 1;
    int r = 0, s = 0;  // left/right offset indices
};

struct Diagram {
    int scale = 0;
    Rational order;             // |g|
    long long bare_order = 0;   // ||g||
    Interval domain;            // I(g)
    std::uint64_t active = 0;   // A(g) as a site mask
    BigInt factorial = 1;       // g!

    // Provenance. Scale-0 diagrams have none; a taken-over diagram points to
    // the diagram it regenerates; a composite keeps (t_0, t_1..t_n).
    DiagramPtr taken_from;
    DiagramPtr first;           // t_0
    std::vector<Triad> parts;   // t_1..t_n

    bool is_diagonal() const { return active == 0; }
    std::string json() const;
};

// Scale-0 diagram g = (S, I) with S subset of I.
DiagramPtr scale0_diagram(std::uint64_t active_mask, Interval I);

// |g| >= |I(g)|/beta.
bool is_crowded(const Diagram& g, const Rational& beta);

// max{|I(g)|, beta L_k}; only defined for crowded, off-diagonal diagrams with
// |g| < L_{k+1}.
Rational reduced_order(const Diagram& g, const ScaleLadder& ladder);

// |g|, or the reduced order when it applies (crowded triad centers).
Rational effective_order(const Diagram& g, const ScaleLadder& ladder);

struct CrowdedInfo {
    bool crowded = false;
    bool has_reduced = false;
    Rational reduced;
};
CrowdedInfo classify_crowded(const Diagram& g, const ScaleLadder& ladder);

// Assembles a triad and its attributes; left/right may be null.
Triad make_triad(DiagramPtr center, DiagramPtr left, DiagramPtr right,
                 const ScaleLadder& ladder);

// Adjacency of components of a composite diagram: an active spin of one lies
// in the one-site-extended domain of the other.
bool components_adjacent(std::uint64_t active_a, const Interval& dom_a,
                         std::uint64_t active_b, const Interval& dom_b, int L);
bool triads_adjacent(const Triad& a, const Triad& b, int L);

// All triads (g, g', g'') with g' in L(g) and g'' in R(g, g') drawn from the
// diagonal pool, including the empty slots.
std::vector<Triad> build_triads(const DiagramPtr& g, const std::vector<DiagramPtr>& pool,
                                const ScaleLadder& ladder, int L);

// n = 0 composition: the diagram is taken over to scale k+1 unchanged.
DiagramPtr regenerate(const DiagramPtr& g, const ScaleLadder& ladder);

// n >= 1 composition (t_0, t_1, ..., t_n); attributes per the recursive rules.
DiagramPtr compose(const DiagramPtr& t0, std::vector<Triad> parts, const ScaleLadder& ladder,
                   int L);

struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CensusKey {
    int x = 0;
    int k = 0;
    long long w = 0;
    bool operator<(const CensusKey& o) const {
        return std::tie(x, k, w) < std::tie(o.x, o.k, o.w);
    }
};

struct Census {
    std::map<CensusKey, Rational> counts;  // N(x,k,w) = sum over diagrams of 1/g!
    double fitted_C = 0.0;                 // smallest C with N <= C^w over all rows
    std::uint64_t diagrams_visited = 0;
    std::vector<DiagramPtr> kept;  // every enumerated diagram, if requested
};

// Exact factorial-weighted census of all diagrams with ||g|| <= w_max at
// scales 0..k_max, built by the recursive composition. Throws BudgetExceeded
// when the enumeration grows past `node_budget` visited diagrams.
Census enumerate_diagrams(int L, int k_max, long long w_max, const Rational& beta,
                          std::uint64_t node_budget = 200000000ull,
                          bool keep_diagrams = false);

}  // namespace spinflow
