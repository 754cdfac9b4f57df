#pragma once

#include "tcba/model.hpp"
#include "tcba/simulator.hpp"

#include <stdexcept>
#include <vector>

namespace tcba {

class OracleError : public std::runtime_error {
public:
    enum class Code { TieDetected, TooLarge, BadInput, MismatchFound };
    OracleError(Code code, const std::string& what) : std::runtime_error(what), code(code) {}
    Code code;
};

constexpr int kOracleMaxN = 8;

template <class S>
struct ConditionalPmf {
    std::vector<Rational> positions;
    std::vector<S> mass;  // mass[k] = P(A = k | x) for 1 <= k <= n; mass[0] unused
    S beyond;             // P(A > n | x)
};

// Exhaustive branching over velocities and over the outcomes of the
// collisions that actually happen. A simultaneous pair of collisions sharing
// a particle raises TieDetected; ties between disjoint pairs are harmless.
template <class S>
ConditionalPmf<S> enumerate_conditional(const Params& params, const std::vector<Rational>& positions);

// Same, for positions already in integer ticks (any common unit).
template <class S>
std::vector<S> enumerate_conditional_ticks(const Params& params, const std::vector<Tick>& positions);

struct OracleEvent {
    int owner;  // particle whose instruction stack decides the collision
    ReactionKind kind;
    ReactionOutcome outcome;
};

struct OracleLeaf {
    std::vector<OracleEvent> events;
    int index = 0;  // A, or 0 when nothing reaches the origin
    Rational weight;
};

// All first-arrival branches for fixed positions and velocities; weights
// include the velocity weights.
std::vector<OracleLeaf> enumerate_leaves(const Params& params, const std::vector<Rational>& positions,
                                         const std::vector<Velocity>& velocities);

struct RaoBlackwell {
    int n = 0;
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
    std::uint64_t resampled = 0;  // spacing vectors redrawn after a tie
    std::vector<double> mean, se;  // index k = 1..n
    std::vector<bool> constant;    // conditional mass identical for every sample
    double beyond_mean = 0, beyond_se = 0;
};

// P(A = k | x) for k <= n is computed from the k-particle prefix, which is all
// the event depends on.
RaoBlackwell rao_blackwell_estimate(const Params& params, const SpacingLaw& law, int n,
                                    std::uint64_t spacing_samples, std::uint64_t seed,
                                    int threads = 0);

struct ReversalReport {
    int n = 0;
    std::size_t leaves = 0;
    std::size_t matched = 0;
    std::size_t mismatches = 0;
};

// Runs the dynamics of the n particles to completion (ignoring the origin)
// for x and for the reversed configuration, and pairs every leaf with its
// mirror image.
ReversalReport check_reversal(const Params& params, const std::vector<Rational>& positions);

// Law of A for n particles when successive spacing scales separate
// completely: gaps M^r for every ordering r of the ranks, averaged over all
// (n-1)! orderings. By spacing-law invariance this equals P(A = k) exactly.
std::vector<Rational> hierarchical_pmf(const Params& params, int n);

}  // namespace tcba
