#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace demvar {

using Rational = boost::multiprecision::mpq_rational;
using BigInt = boost::multiprecision::mpz_int;

enum class ArithmeticMode { Double, Rational };

// Tolerances and caps shared by all analyses. All values pinned here;
// the CLI only overrides, never invents.
struct AnalysisConfig {
    ArithmeticMode mode = ArithmeticMode::Double;
    double tol_prob = 1e-9;        // distribution sum check (double mode)
    double tol_value = 1e-9;       // objective-value comparisons
    double ascent_tol = 1e-10;     // alternating best-response stopping
    long long md_cap = 1'000'000;  // max enumerable MD schedulers
    long long max_unfold_states = 5'000'000;
    long long max_product_states = 25'000'000;
    long long simplex_pivot_cap = 1'000'000;
    std::optional<long long> bound_override;  // reward-counter unfolding bound
    unsigned long long seed = 0;
    long long samples = 100'000;
    bool use_exact_oracle = true;  // cross-check desk-scale demonic results
    int random_restarts = 8;       // extra multi-start seeds for the ascent
};

template <class T>
inline double to_double(const T& v) {
    return static_cast<double>(v);
}
inline double to_double(const Rational& v) {
    return v.convert_to<double>();
}

template <class T>
T from_rational(const Rational& r);
template <>
inline double from_rational<double>(const Rational& r) {
    return to_double(r);
}
template <>
inline Rational from_rational<Rational>(const Rational& r) {
    return r;
}

// Base-10 integer; leading zeros stripped explicitly because the GMP string
// constructor would read them as octal.
inline BigInt parse_bigint(std::string s) {
    bool neg = !s.empty() && s[0] == '-';
    if (neg || (!s.empty() && s[0] == '+')) s.erase(0, 1);
    if (s.empty()) throw std::invalid_argument("empty integer");
    for (char c : s)
        if (c < '0' || c > '9') throw std::invalid_argument("bad integer: " + s);
    auto nz = s.find_first_not_of('0');
    s = nz == std::string::npos ? "0" : s.substr(nz);
    BigInt v(s);
    return neg ? -v : v;
}

// Accepts "p/q", integers, and plain decimals ("0.25", "-3.5"; "1e-3" is
// not accepted: the model grammar has no use for exponents).
inline Rational parse_rational(std::string_view text) {
    std::string s(text);
    if (s.empty()) throw std::invalid_argument("empty rational");
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        BigInt num = parse_bigint(s.substr(0, slash));
        BigInt den = parse_bigint(s.substr(slash + 1));
        if (den == 0) throw std::invalid_argument("zero denominator");
        return Rational(num, den);
    }
    auto dot = s.find('.');
    if (dot == std::string::npos) return Rational(parse_bigint(s));
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    size_t frac_len = s.size() - dot - 1;
    if (frac_len == 0) return Rational(parse_bigint(s.substr(0, dot)));
    BigInt den = 1;
    for (size_t i = 0; i < frac_len; ++i) den *= 10;
    return Rational(parse_bigint(digits), den);
}

inline std::string rational_str(const Rational& r) {
    return r.str();
}

}  // namespace demvar
