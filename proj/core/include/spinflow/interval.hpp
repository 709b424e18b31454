#pragma once

#include <algorithm>
#include <cstdint>
#include <string>

namespace spinflow {

// Discrete interval of sites, 1-based and inclusive. {lo=1, hi=0} is the
// canonical empty interval.
struct Interval {
    int lo = 1;
    int hi = 0;

    constexpr Interval() = default;
    constexpr Interval(int lo_, int hi_) : lo(lo_), hi(hi_) {}

    static constexpr Interval empty() { return Interval{1, 0}; }
    static constexpr Interval site(int x) { return Interval{x, x}; }

    constexpr bool is_empty() const { return hi < lo; }
    // Number of sites |I|.
    constexpr int size() const { return is_empty() ? 0 : hi - lo + 1; }
    constexpr bool contains(int x) const { return lo <= x && x <= hi; }
    constexpr bool contains(const Interval& o) const {
        return o.is_empty() || (lo <= o.lo && o.hi <= hi);
    }
    constexpr bool intersects(const Interval& o) const {
        return !is_empty() && !o.is_empty() && lo <= o.hi && o.lo <= hi;
    }

    // Smallest interval containing both.
    constexpr Interval hull(const Interval& o) const {
        if (is_empty()) return o;
        if (o.is_empty()) return *this;
        return Interval{std::min(lo, o.lo), std::max(hi, o.hi)};
    }

    // I-bar: the interval extended by one site on each end, clipped to [1,L].
    constexpr Interval extended(int L) const {
        if (is_empty()) return *this;
        return Interval{std::max(1, lo - 1), std::min(L, hi + 1)};
    }

    constexpr bool operator==(const Interval& o) const {
        if (is_empty() && o.is_empty()) return true;
        return lo == o.lo && hi == o.hi;
    }
    constexpr bool operator<(const Interval& o) const {
        return lo != o.lo ? lo < o.lo : hi < o.hi;
    }

    std::string str() const {
        if (is_empty()) return "[]";
        return "[" + std::to_string(lo) + "," + std::to_string(hi) + "]";
    }
};

// Bitmask with bit (x-1) set for every site x in I.
inline std::uint64_t interval_mask(const Interval& I) {
    if (I.is_empty()) return 0;
    std::uint64_t width = static_cast<std::uint64_t>(I.size());
    std::uint64_t ones = width >= 64 ? ~0ull : ((1ull << width) - 1ull);
    return ones << (I.lo - 1);
}

// Smallest interval containing every set bit of a site mask.
inline Interval mask_hull(std::uint64_t mask) {
    if (mask == 0) return Interval::empty();
    int lo = 1 + __builtin_ctzll(mask);
    int hi = 64 - __builtin_clzll(mask);
    return Interval{lo, hi};
}

}  // namespace spinflow
