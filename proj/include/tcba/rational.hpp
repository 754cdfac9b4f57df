#pragma once

#include <gmpxx.h>

#include <string>

namespace tcba {

using Rational = mpq_class;

// Accepts "num/den", integers, and decimals. Decimals go through the nearest
// double and are kept as that double's exact dyadic value.
Rational parse_rational(const std::string& text);

std::string format_rational(const Rational& r);

Rational dyadic(double x);

template <class S>
S from_rational(const Rational& r);

template <>
inline Rational from_rational<Rational>(const Rational& r) {
    return r;
}

template <>
inline double from_rational<double>(const Rational& r) {
    return r.get_d();
}

inline double to_double(double x) { return x; }
inline double to_double(const Rational& r) { return r.get_d(); }

template <class S>
inline S scalar(long num, long den = 1) {
    if constexpr (std::is_same_v<S, double>) {
        return static_cast<double>(num) / static_cast<double>(den);
    } else {
        Rational r(num, den);
        r.canonicalize();
        return r;
    }
}

}  // namespace tcba
