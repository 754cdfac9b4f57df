#include "tcba/rational.hpp"

#include <cmath>
#include <stdexcept>

namespace tcba {

Rational dyadic(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite value");
    Rational r(x);  // mpq_set_d is exact
    return r;
}

Rational parse_rational(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("empty number");
    auto slash = text.find('/');
    if (slash != std::string::npos) {
        Rational r;
        if (r.set_str(text, 10) != 0 || r.get_den() == 0)
            throw std::invalid_argument("bad rational '" + text + "'");
        r.canonicalize();
        return r;
    }
    bool integral = text.find_first_of(".eE") == std::string::npos;
    if (integral) {
        mpz_class z;
        if (z.set_str(text[0] == '+' ? text.substr(1) : text, 10) != 0)
            throw std::invalid_argument("bad number '" + text + "'");
        return Rational(z);
    }
    std::size_t used = 0;
    double x = 0;
    try {
        x = std::stod(text, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("bad number '" + text + "'");
    }
    if (used != text.size()) throw std::invalid_argument("bad number '" + text + "'");
    return dyadic(x);
}

std::string format_rational(const Rational& r) {
    if (r.get_den() == 1) return r.get_num().get_str();
    return r.get_num().get_str() + "/" + r.get_den().get_str();
}

}  // namespace tcba
