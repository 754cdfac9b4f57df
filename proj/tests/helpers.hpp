#pragma once

#include "tcba/model.hpp"

#include <random>

namespace testutil {

inline tcba::Rational R(const char* s) { return tcba::parse_rational(s); }

inline tcba::Params P(const char* p, const char* a, const char* b, const char* c,
                      tcba::Mode mode = tcba::Mode::Exact) {
    return tcba::validate_params(R(p), R(a), R(b), R(c), mode);
}

// Random valid parameters with small denominators.
inline tcba::Params random_params(std::mt19937_64& g, tcba::Mode mode = tcba::Mode::Exact) {
    std::uniform_int_distribution<long> den(2, 12);
    auto frac = [&](bool open) {
        const long d = den(g);
        std::uniform_int_distribution<long> num(open ? 1 : 0, open ? d - 1 : d);
        tcba::Rational r(num(g), d);
        r.canonicalize();
        return r;
    };
    const tcba::Rational p = frac(true), a = frac(false);
    tcba::Rational b = frac(false);
    if (a + b > 1) b = 1 - a;
    return tcba::validate_params(p, a, b, frac(false), mode);
}

}  // namespace testutil
