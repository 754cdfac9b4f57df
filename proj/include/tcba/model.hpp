#pragma once

#include "tcba/rational.hpp"

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcba {

enum class Mode { Exact, Float };

struct Params {
    Rational p, a, b, c;
    Mode mode = Mode::Exact;

    // Double copies for the samplers, filled in by validate_params.
    double pf = 0, af = 0, bf = 0, cf = 0;

    double pd() const { return pf; }
    double ad() const { return af; }
    double bd() const { return bf; }
    double cd() const { return cf; }
};

class ParamError : public std::invalid_argument {
public:
    enum class Code { OutOfRange, SumExceeded, DegenerateP };
    ParamError(Code code, std::string field, const std::string& what)
        : std::invalid_argument(what), code(code), field(std::move(field)) {}
    Code code;
    std::string field;
};

Params validate_params(const Rational& p, const Rational& a, const Rational& b,
                       const Rational& c, Mode mode = Mode::Exact);

enum class Velocity : std::uint8_t { Left, Still, Right };
enum class ReactionKind : std::uint8_t { RightMeetsLeft, StillMeetsLeft, RightMeetsStill };
enum class ReactionOutcome : std::uint8_t {
    LeftSurvives,
    RightSurvives,
    BlockadeGenerated,
    MutualAnnihilation
};

inline int speed(Velocity v) { return v == Velocity::Left ? -1 : v == Velocity::Right ? 1 : 0; }

Velocity mirror(Velocity v);
ReactionKind mirror(ReactionKind k);
ReactionOutcome mirror(ReactionOutcome o);

const char* to_string(Velocity v);
const char* to_string(ReactionKind k);
const char* to_string(ReactionOutcome o);

template <class S>
struct Weighted {
    ReactionOutcome outcome;
    S weight;
};

// Zero-weight outcomes are kept so callers can index by position.
template <class S>
std::vector<Weighted<S>> reaction_distribution(const Params& params, ReactionKind kind) {
    const S a = from_rational<S>(params.a), b = from_rational<S>(params.b),
            c = from_rational<S>(params.c);
    const S one = scalar<S>(1), half = scalar<S>(1, 2);
    switch (kind) {
        case ReactionKind::RightMeetsLeft:
            return {{ReactionOutcome::LeftSurvives, a * half},
                    {ReactionOutcome::RightSurvives, a * half},
                    {ReactionOutcome::BlockadeGenerated, b},
                    {ReactionOutcome::MutualAnnihilation, one - (a + b)}};
        case ReactionKind::StillMeetsLeft:
            return {{ReactionOutcome::LeftSurvives, c},
                    {ReactionOutcome::MutualAnnihilation, one - c}};
        case ReactionKind::RightMeetsStill:
            return {{ReactionOutcome::RightSurvives, c},
                    {ReactionOutcome::MutualAnnihilation, one - c}};
    }
    return {};
}

// Order: Left, Still, Right.
template <class S>
std::array<S, 3> velocity_weights(const Params& params) {
    const S p = from_rational<S>(params.p);
    const S q = (scalar<S>(1) - p) * scalar<S>(1, 2);
    return {q, p, q};
}

// SplitMix64 finalizer; the generators below are counter-based on top of it.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_key(std::uint64_t parent, std::uint64_t index) {
    return mix64(parent ^ mix64(index + 0x632be59bd9b4e019ULL));
}

// Stream i of key k is SplitMix64 started at state k: deterministic per
// (key, counter) and cheap to reposition.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) : key_(key), ctr_(counter) {}

    std::uint64_t next() { return mix64(key_ + 0x9e3779b97f4a7c15ULL * ctr_++); }

    // Uniform on the open interval (0,1).
    double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

    std::uint64_t counter() const { return ctr_; }

private:
    std::uint64_t key_;
    std::uint64_t ctr_;
};

Velocity sample_velocity(const Params& params, CounterRng& rng);
ReactionOutcome sample_outcome(const Params& params, ReactionKind kind, double u);
ReactionOutcome sample_outcome(double a, double b, double c, ReactionKind kind, double u);

struct SpacingLaw {
    enum class Kind { Exponential, Uniform, Pareto, LogNormal };
    Kind kind;
    double x, y;  // rate | lo,hi | shape,scale | meanlog,sdlog

    static SpacingLaw exponential(double rate);
    static SpacingLaw uniform(double lo, double hi);
    static SpacingLaw pareto(double shape, double scale);
    static SpacingLaw lognormal(double meanlog, double sdlog);

    // "exp:1", "uniform:0:1", "pareto:2.5:1", "lognormal:0:2"
    static SpacingLaw parse(const std::string& spec);
    std::string to_string() const;
};

class NonPositiveSample : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

double sample_spacing(const SpacingLaw& law, CounterRng& rng);

}  // namespace tcba
