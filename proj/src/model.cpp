#include "tcba/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace tcba {

namespace {

void check_unit(const Rational& x, const char* name, bool open) {
    bool bad = open ? (x <= 0 || x >= 1) : (x < 0 || x > 1);
    if (!bad) return;
    std::string msg = std::string(name) + " = " + format_rational(x) + " outside " +
                      (open ? "(0,1)" : "[0,1]");
    if (open) throw ParamError(ParamError::Code::DegenerateP, name, msg);
    throw ParamError(ParamError::Code::OutOfRange, name, msg);
}

}  // namespace

Params validate_params(const Rational& p, const Rational& a, const Rational& b,
                       const Rational& c, Mode mode) {
    check_unit(p, "p", true);
    check_unit(a, "a", false);
    check_unit(b, "b", false);
    check_unit(c, "c", false);
    if (a + b > 1)
        throw ParamError(ParamError::Code::SumExceeded, "a+b",
                         "a + b = " + format_rational(a + b) + " exceeds 1");
    return Params{p, a, b, c, mode, p.get_d(), a.get_d(), b.get_d(), c.get_d()};
}

Velocity mirror(Velocity v) {
    if (v == Velocity::Left) return Velocity::Right;
    if (v == Velocity::Right) return Velocity::Left;
    return v;
}

ReactionKind mirror(ReactionKind k) {
    if (k == ReactionKind::StillMeetsLeft) return ReactionKind::RightMeetsStill;
    if (k == ReactionKind::RightMeetsStill) return ReactionKind::StillMeetsLeft;
    return k;
}

ReactionOutcome mirror(ReactionOutcome o) {
    if (o == ReactionOutcome::LeftSurvives) return ReactionOutcome::RightSurvives;
    if (o == ReactionOutcome::RightSurvives) return ReactionOutcome::LeftSurvives;
    return o;
}

const char* to_string(Velocity v) {
    switch (v) {
        case Velocity::Left: return "Left";
        case Velocity::Still: return "Still";
        case Velocity::Right: return "Right";
    }
    return "?";
}

const char* to_string(ReactionKind k) {
    switch (k) {
        case ReactionKind::RightMeetsLeft: return "RightMeetsLeft";
        case ReactionKind::StillMeetsLeft: return "StillMeetsLeft";
        case ReactionKind::RightMeetsStill: return "RightMeetsStill";
    }
    return "?";
}

const char* to_string(ReactionOutcome o) {
    switch (o) {
        case ReactionOutcome::LeftSurvives: return "LeftSurvives";
        case ReactionOutcome::RightSurvives: return "RightSurvives";
        case ReactionOutcome::BlockadeGenerated: return "BlockadeGenerated";
        case ReactionOutcome::MutualAnnihilation: return "MutualAnnihilation";
    }
    return "?";
}

Velocity sample_velocity(const Params& params, CounterRng& rng) {
    const double p = params.pd();
    const double q = (1.0 - p) / 2.0;
    const double u = rng.uniform();
    if (u < q) return Velocity::Left;
    if (u < q + p) return Velocity::Still;
    return Velocity::Right;
}

ReactionOutcome sample_outcome(double a, double b, double c, ReactionKind kind, double u) {
    switch (kind) {
        case ReactionKind::RightMeetsLeft:
            if (u < a / 2) return ReactionOutcome::LeftSurvives;
            if (u < a) return ReactionOutcome::RightSurvives;
            if (u < a + b) return ReactionOutcome::BlockadeGenerated;
            return ReactionOutcome::MutualAnnihilation;
        case ReactionKind::StillMeetsLeft:
            return u < c ? ReactionOutcome::LeftSurvives : ReactionOutcome::MutualAnnihilation;
        case ReactionKind::RightMeetsStill:
            return u < c ? ReactionOutcome::RightSurvives : ReactionOutcome::MutualAnnihilation;
    }
    return ReactionOutcome::MutualAnnihilation;
}

ReactionOutcome sample_outcome(const Params& params, ReactionKind kind, double u) {
    return sample_outcome(params.ad(), params.bd(), params.cd(), kind, u);
}

SpacingLaw SpacingLaw::exponential(double rate) {
    if (!(rate > 0) || !std::isfinite(rate)) throw std::invalid_argument("exp rate must be > 0");
    return {Kind::Exponential, rate, 0};
}

SpacingLaw SpacingLaw::uniform(double lo, double hi) {
    if (!(lo >= 0) || !(hi > lo) || !std::isfinite(hi))
        throw std::invalid_argument("uniform needs 0 <= lo < hi");
    return {Kind::Uniform, lo, hi};
}

SpacingLaw SpacingLaw::pareto(double shape, double scale) {
    if (!(shape > 0) || !(scale > 0) || !std::isfinite(shape) || !std::isfinite(scale))
        throw std::invalid_argument("pareto needs shape > 0 and scale > 0");
    return {Kind::Pareto, shape, scale};
}

SpacingLaw SpacingLaw::lognormal(double meanlog, double sdlog) {
    if (!std::isfinite(meanlog) || !(sdlog > 0) || !std::isfinite(sdlog))
        throw std::invalid_argument("lognormal needs sdlog > 0");
    return {Kind::LogNormal, meanlog, sdlog};
}

SpacingLaw SpacingLaw::parse(const std::string& spec) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string tok; std::getline(ss, tok, ':');) parts.push_back(tok);
    if (parts.empty()) throw std::invalid_argument("empty spacing law");
    auto num = [&](std::size_t i, double dflt) {
        if (i >= parts.size()) return dflt;
        std::size_t used = 0;
        double v = std::stod(parts[i], &used);
        if (used != parts[i].size()) throw std::invalid_argument("bad number in '" + spec + "'");
        return v;
    };
    const std::string& name = parts[0];
    try {
        if (name == "exp" || name == "exponential") {
            if (parts.size() > 2) throw std::invalid_argument("exp takes one argument");
            return exponential(num(1, 1.0));
        }
        if (name == "uniform") {
            if (parts.size() != 1 && parts.size() != 3)
                throw std::invalid_argument("uniform takes lo:hi");
            return uniform(num(1, 0.0), num(2, 1.0));
        }
        if (name == "pareto") {
            if (parts.size() > 3) throw std::invalid_argument("pareto takes shape:scale");
            return pareto(num(1, 2.5), num(2, 1.0));
        }
        if (name == "lognormal") {
            if (parts.size() > 3) throw std::invalid_argument("lognormal takes meanlog:sdlog");
            return lognormal(num(1, 0.0), num(2, 1.0));
        }
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("spacing law '" + spec + "': " + e.what());
    }
    throw std::invalid_argument("unknown spacing law '" + spec +
                                "' (atomic laws are not supported)");
}

std::string SpacingLaw::to_string() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind) {
        case Kind::Exponential: os << "exp:" << x; break;
        case Kind::Uniform: os << "uniform:" << x << ":" << y; break;
        case Kind::Pareto: os << "pareto:" << x << ":" << y; break;
        case Kind::LogNormal: os << "lognormal:" << x << ":" << y; break;
    }
    return os.str();
}

double sample_spacing(const SpacingLaw& law, CounterRng& rng) {
    double v = 0;
    switch (law.kind) {
        case SpacingLaw::Kind::Exponential:
            v = -std::log(rng.uniform()) / law.x;
            break;
        case SpacingLaw::Kind::Uniform:
            v = law.x + (law.y - law.x) * rng.uniform();
            break;
        case SpacingLaw::Kind::Pareto:
            v = law.y * std::pow(rng.uniform(), -1.0 / law.x);
            break;
        case SpacingLaw::Kind::LogNormal: {
            const double u1 = rng.uniform(), u2 = rng.uniform();
            const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2 * std::numbers::pi * u2);
            v = std::exp(law.x + law.y * z);
            break;
        }
    }
    if (!(v > 0) || !std::isfinite(v)) throw NonPositiveSample("spacing sampler produced " + std::to_string(v));
    return v;
}

}  // namespace tcba
