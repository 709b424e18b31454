#pragma once

#include <cmath>
#include <cstdint>

namespace spinflow {

// Counter-based splittable RNG. Every draw is a pure function of the key
// chain, so disorder samples are reproducible and order-independent under
// parallel generation.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t rng_key(std::uint64_t seed, std::uint64_t a,
                             std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    h = splitmix64(h ^ c);
    return h;
}

// Uniform in [0,1) with 53-bit resolution.
inline double u64_to_unit(std::uint64_t u) {
    return static_cast<double>(u >> 11) * 0x1.0p-53;
}

inline double uniform01(std::uint64_t seed, std::uint64_t a,
                        std::uint64_t b = 0, std::uint64_t c = 0) {
    return u64_to_unit(rng_key(seed, a, b, c));
}

// Small stateful stream seeded from a key chain; used where a sequence of
// draws is needed (matrix fills, Box-Muller pairs).
class RngStream {
  public:
    explicit RngStream(std::uint64_t key) : state_(key) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return splitmix64(state_);
    }
    double next_unit() { return u64_to_unit(next_u64()); }
    double next_uniform(double a, double b) { return a + (b - a) * next_unit(); }

    double next_gaussian() {
        // Box-Muller; u clamped away from 0.
        double u = next_unit();
        double v = next_unit();
        if (u < 1e-300) u = 1e-300;
        return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586476925286766559 * v);
    }

  private:
    std::uint64_t state_;
};

}  // namespace spinflow
