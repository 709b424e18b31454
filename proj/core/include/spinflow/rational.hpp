#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <stdexcept>
#include <string>

namespace spinflow {

// Exact arithmetic for diagram orders and factorial weights. Scale lengths
// L_k = (1+beta)^k with rational beta stay exact, so the strict inequalities
// defining scales and crowdedness never hinge on float rounding.
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& r) {
    return static_cast<double>(r);
}

inline Rational rational_pow(const Rational& base, int exp) {
    if (exp < 0) throw std::invalid_argument("rational_pow: negative exponent");
    Rational acc = 1;
    Rational b = base;
    int e = exp;
    while (e > 0) {
        if (e & 1) acc *= b;
        b *= b;
        e >>= 1;
    }
    return acc;
}

// Parses "p/q" or a plain decimal like "0.9" into an exact rational.
inline Rational parse_rational(const std::string& s) {
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        BigInt p(s.substr(0, slash));
        BigInt q(s.substr(slash + 1));
        if (q == 0) throw std::invalid_argument("parse_rational: zero denominator");
        return Rational(p, q);
    }
    auto dot = s.find('.');
    if (dot == std::string::npos) return Rational(BigInt(s));
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    bool neg = false;
    if (!digits.empty() && (digits[0] == '+' || digits[0] == '-')) {
        neg = digits[0] == '-';
        digits = digits.substr(1);
    }
    if (digits.empty()) throw std::invalid_argument("parse_rational: bad literal " + s);
    BigInt p(digits);
    BigInt q = 1;
    for (std::size_t i = 0; i < s.size() - dot - 1; ++i) q *= 10;
    Rational r(p, q);
    return neg ? -r : r;
}

inline BigInt factorial(int n) {
    BigInt f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

}  // namespace spinflow
