#pragma once

#include "tcba/model.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace tcba {

// Positions are integers in a per-state unit (see SimState::unit). Particles
// sampled from a spacing law use unit 2^-65: gaps are quantized to 2^-64 and
// doubled, so every midpoint and collision time is again an integer.
using Tick = __int128;

struct Label {
    int j = 0;  // original index of a single particle, or left parent of a blockade
    int k = 0;  // right parent of a blockade, 0 for single particles

    static Label single(int k) { return {k, 0}; }
    static Label pair(int j, int k) { return {j, k}; }
    bool is_pair() const { return k != 0; }
    bool operator==(const Label&) const = default;
};

struct Particle {
    Label label;
    Velocity velocity;
    Tick x0;  // position at time 0 of the particle's world line
    bool alive = true;

    Tick at(Tick t) const { return x0 + speed(velocity) * t; }
};

class SimError : public std::runtime_error {
public:
    enum class Code { DegenerateSpacing, SimultaneousCollision, StackUnderflow, BadState };
    SimError(Code code, const std::string& what) : std::runtime_error(what), code(code) {}
    Code code;
};

// Reaction instructions. Right-movers own a RightMeetsStill stack; left-movers
// own a RightMeetsLeft and a StillMeetsLeft stack. Entries are either supplied
// explicitly or are a fixed function of (key, owner, stack, depth), which is
// the same thing as a pre-drawn stack of unbounded depth.
class InstructionStacks {
public:
    InstructionStacks() = default;
    InstructionStacks(const Params& params, std::uint64_t key, int n);

    // explicit[k-1][kind] lists the draws owned by particle k for that kind
    static InstructionStacks explicit_stacks(
        std::vector<std::array<std::vector<ReactionOutcome>, 3>> lists);

    // Reuses storage; used by the Monte Carlo loop.
    void rekey(const Params& params, std::uint64_t key, int n);

    ReactionOutcome pop(int owner, ReactionKind kind);
    int consumed(int owner, ReactionKind kind) const;
    void reset();

private:
    bool hashed_ = false;
    double a_ = 0, b_ = 0, c_ = 0;
    std::uint64_t key_ = 0;
    std::vector<std::array<std::vector<ReactionOutcome>, 3>> lists_;
    std::vector<std::array<int, 3>> cursor_;
};

struct SimState {
    std::vector<Particle> alive;  // ordered by position
    Rational unit;                // length of one tick
    int horizon = 0;              // N, the prefix length
    Tick now = 0;
    int collisions = 0;
    std::vector<ReactionOutcome> trace;  // outcomes applied, in order

    Rational to_rational(Tick x) const;
};

struct Collision {
    std::size_t left;  // index into SimState::alive; the partner is left + 1
    ReactionKind kind;
    Tick time;
    Tick location;
};

struct SimOutcome {
    bool arrived = false;
    int index = 0;   // A when arrived
    int horizon = 0;
    Rational time;   // arrival time at the origin

    bool beyond() const { return !arrived; }
};

// Positions must be strictly increasing; their common denominator must fit
// the tick representation.
SimState make_state(const std::vector<Rational>& positions, const std::vector<Velocity>& velocities);

// Positions x_1 < ... < x_N in ticks of sampled_unit(); x_1 is itself a gap.
std::vector<Tick> sample_positions(const SpacingLaw& law, int N, CounterRng& rng);
Rational sampled_unit();

std::pair<SimState, InstructionStacks> build_initial(const Params& params, const SpacingLaw& law,
                                                     int N, std::uint64_t seed);

std::optional<Collision> next_collision(const SimState& state);
std::optional<Collision> next_collision(const std::vector<Particle>& alive);
// Applies a given outcome without consulting any stack.
void apply_outcome(SimState& state, const Collision& collision, ReactionOutcome outcome);
void apply_outcome(std::vector<Particle>& alive, const Collision& collision, ReactionOutcome outcome);
void resolve_collision(SimState& state, const Collision& collision, InstructionStacks& stacks);
SimOutcome run_to_first_arrival(SimState& state, InstructionStacks& stacks);

struct Histogram {
    int prefix = 0;
    std::uint64_t samples = 0;
    std::uint64_t aborts = 0;
    std::vector<std::uint64_t> counts;  // counts[n] for 1 <= n <= prefix; counts[0] unused
    std::uint64_t beyond = 0;

    bool operator==(const Histogram&) const = default;
};

// Run i uses a generator keyed on (master_seed, i), so the histogram does not
// depend on the number of workers. threads <= 0 keeps the OpenMP default.
Histogram estimate_pn(const Params& params, const SpacingLaw& law, int N, std::uint64_t samples,
                      std::uint64_t master_seed, int threads = 0);

// Single-threaded reference used by tests and the benchmark.
Histogram estimate_pn_serial(const Params& params, const SpacingLaw& law, int N,
                             std::uint64_t samples, std::uint64_t master_seed);

// One run as estimate_pn performs it, including resampling after a
// simultaneous collision; aborts is incremented per resample.
int simulate_run(const Params& params, const SpacingLaw& law, int N, std::uint64_t master_seed,
                 std::uint64_t run_index, std::uint64_t& aborts);

}  // namespace tcba
