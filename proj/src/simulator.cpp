#include "tcba/simulator.hpp"

#include <omp.h>

#include <cmath>
#include <string>

namespace tcba {

namespace {

int stack_slot(ReactionKind kind) {
    switch (kind) {
        case ReactionKind::RightMeetsLeft: return 0;
        case ReactionKind::StillMeetsLeft: return 1;
        case ReactionKind::RightMeetsStill: return 2;
    }
    return 0;
}

Tick mpz_to_tick(const mpz_class& z) {
    if (mpz_sizeinbase(z.get_mpz_t(), 2) > 120)
        throw SimError(SimError::Code::BadState, "position does not fit the tick range");
    mpz_class m = abs(z);
    mpz_class lo = m & mpz_class("18446744073709551615");
    mpz_class hi = m >> 64;
    Tick t = (static_cast<Tick>(hi.get_ui()) << 64) | static_cast<Tick>(lo.get_ui());
    return z < 0 ? -t : t;
}

mpz_class tick_to_mpz(Tick t) {
    bool neg = t < 0;
    unsigned __int128 m = neg ? -static_cast<unsigned __int128>(t) : static_cast<unsigned __int128>(t);
    mpz_class hi(static_cast<unsigned long>(m >> 64));
    mpz_class lo(static_cast<unsigned long>(m & 0xffffffffffffffffULL));
    mpz_class z = (hi << 64) + lo;
    return neg ? mpz_class(-z) : z;
}

// Largest admissible gap in ticks; keeps positions of 10^4 particles and all
// collision times far from overflow.
constexpr double kMaxGapTicks = 0x1.0p100;

}  // namespace

InstructionStacks::InstructionStacks(const Params& params, std::uint64_t key, int n) {
    rekey(params, key, n);
}

void InstructionStacks::rekey(const Params& params, std::uint64_t key, int n) {
    hashed_ = true;
    a_ = params.ad();
    b_ = params.bd();
    c_ = params.cd();
    key_ = key;
    lists_.clear();
    cursor_.assign(n + 1, {0, 0, 0});
}

InstructionStacks InstructionStacks::explicit_stacks(
    std::vector<std::array<std::vector<ReactionOutcome>, 3>> lists) {
    InstructionStacks s;
    s.hashed_ = false;
    s.cursor_.assign(lists.size() + 1, {0, 0, 0});
    s.lists_.reserve(lists.size() + 1);
    s.lists_.emplace_back();
    for (auto& l : lists) s.lists_.push_back(std::move(l));
    return s;
}

ReactionOutcome InstructionStacks::pop(int owner, ReactionKind kind) {
    if (owner < 1 || owner >= static_cast<int>(cursor_.size()))
        throw SimError(SimError::Code::StackUnderflow, "no stack for particle " + std::to_string(owner));
    const int slot = stack_slot(kind);
    int& cur = cursor_[owner][slot];
    if (hashed_) {
        // A particle takes part in fewer than n collisions.
        if (cur >= static_cast<int>(cursor_.size()))
            throw SimError(SimError::Code::StackUnderflow, "stack exhausted");
        CounterRng rng(derive_key(key_, static_cast<std::uint64_t>(owner) * 3 + slot), cur++);
        return sample_outcome(a_, b_, c_, kind, rng.uniform());
    }
    const auto& list = lists_[owner][slot];
    if (cur >= static_cast<int>(list.size()))
        throw SimError(SimError::Code::StackUnderflow,
                       std::string("stack ") + to_string(kind) + " of particle " +
                           std::to_string(owner) + " exhausted");
    return list[cur++];
}

int InstructionStacks::consumed(int owner, ReactionKind kind) const {
    return cursor_.at(owner)[stack_slot(kind)];
}

void InstructionStacks::reset() {
    for (auto& c : cursor_) c = {0, 0, 0};
}

Rational SimState::to_rational(Tick x) const {
    Rational r(tick_to_mpz(x));
    r *= unit;
    r.canonicalize();
    return r;
}

SimState make_state(const std::vector<Rational>& positions, const std::vector<Velocity>& velocities) {
    if (positions.size() != velocities.size())
        throw SimError(SimError::Code::BadState, "positions and velocities differ in length");
    mpz_class l = 1;
    for (const auto& x : positions) {
        if (x <= 0) throw SimError(SimError::Code::BadState, "positions must be positive");
        mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), x.get_den_mpz_t());
    }
    SimState s;
    s.horizon = static_cast<int>(positions.size());
    s.unit = Rational(mpz_class(1), mpz_class(2 * l));
    s.unit.canonicalize();
    for (std::size_t i = 0; i < positions.size(); ++i) {
        Rational scaled = positions[i] * Rational(mpz_class(2 * l));
        scaled.canonicalize();
        Tick x = mpz_to_tick(scaled.get_num());
        if (i > 0 && x <= s.alive.back().x0)
            throw SimError(SimError::Code::BadState, "positions must be strictly increasing");
        s.alive.push_back({Label::single(static_cast<int>(i) + 1), velocities[i], x, true});
    }
    return s;
}

namespace {

Tick draw_gap(const SpacingLaw& law, CounterRng& rng, int& retries) {
    for (;;) {
        const double g = std::ldexp(sample_spacing(law, rng), 64);
        const double r = std::nearbyint(g);
        if (r >= 1 && r < kMaxGapTicks) return 2 * static_cast<Tick>(r);
        if (++retries > 100)
            throw SimError(SimError::Code::DegenerateSpacing,
                           "spacing law keeps producing gaps outside the tick range");
    }
}

void fill_positions(const SpacingLaw& law, int N, CounterRng& rng, std::vector<Tick>& xs) {
    xs.clear();
    Tick x = 0;
    int retries = 0;
    for (int k = 1; k <= N; ++k) {
        x += draw_gap(law, rng, retries);
        xs.push_back(x);
    }
}

// Everything build_initial does except the exact unit, which the Monte Carlo
// loop never needs. Gap and velocity of particle k are drawn before those of
// particle k+1, so a longer prefix extends a shorter one.
void fill_run(const Params& params, const SpacingLaw& law, int N, std::uint64_t seed, SimState& s,
              InstructionStacks& stacks) {
    CounterRng rng(seed);
    s.horizon = N;
    s.now = 0;
    s.collisions = 0;
    s.trace.clear();
    s.alive.clear();
    Tick x = 0;
    int retries = 0;
    for (int k = 1; k <= N; ++k) {
        x += draw_gap(law, rng, retries);
        s.alive.push_back({Label::single(k), sample_velocity(params, rng), x, true});
    }
    // Stack entries are keyed by owner, not by N, which keeps prefixes coupled.
    stacks.rekey(params, derive_key(seed, 0x57ac4ULL), N);
}

}  // namespace

std::vector<Tick> sample_positions(const SpacingLaw& law, int N, CounterRng& rng) {
    std::vector<Tick> xs;
    xs.reserve(N);
    fill_positions(law, N, rng, xs);
    return xs;
}

Rational sampled_unit() {
    Rational u(1);
    mpq_div_2exp(u.get_mpq_t(), u.get_mpq_t(), 65);
    return u;
}

std::pair<SimState, InstructionStacks> build_initial(const Params& params, const SpacingLaw& law,
                                                     int N, std::uint64_t seed) {
    if (N < 1) throw SimError(SimError::Code::BadState, "prefix must be >= 1");
    SimState s;
    InstructionStacks stacks;
    fill_run(params, law, N, seed, s, stacks);
    s.unit = sampled_unit();
    return {std::move(s), std::move(stacks)};
}

std::optional<Collision> next_collision(const SimState& state) { return next_collision(state.alive); }

std::optional<Collision> next_collision(const std::vector<Particle>& v) {
    std::optional<Collision> best;
    bool shared_tie = false;
    std::size_t last_min = static_cast<std::size_t>(-1);
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        const Particle& l = v[i];
        const Particle& r = v[i + 1];
        Collision c;
        c.left = i;
        if (l.velocity == Velocity::Right && r.velocity == Velocity::Left) {
            c.kind = ReactionKind::RightMeetsLeft;
            c.time = (r.x0 - l.x0) / 2;
            c.location = (r.x0 + l.x0) / 2;
        } else if (l.velocity == Velocity::Right && r.velocity == Velocity::Still) {
            c.kind = ReactionKind::RightMeetsStill;
            c.time = r.x0 - l.x0;
            c.location = r.x0;
        } else if (l.velocity == Velocity::Still && r.velocity == Velocity::Left) {
            c.kind = ReactionKind::StillMeetsLeft;
            c.time = r.x0 - l.x0;
            c.location = l.x0;
        } else {
            continue;
        }
        if (!best || c.time < best->time) {
            best = c;
            shared_tie = false;
            last_min = i;
        } else if (c.time == best->time) {
            if (i == last_min + 1) shared_tie = true;
            last_min = i;
        }
    }
    if (shared_tie)
        throw SimError(SimError::Code::SimultaneousCollision,
                       "two collisions sharing a particle happen at the same instant");
    return best;
}

void apply_outcome(SimState& state, const Collision& col, ReactionOutcome out) {
    apply_outcome(state.alive, col, out);
    state.now = col.time;
    ++state.collisions;
    state.trace.push_back(out);
}

void apply_outcome(std::vector<Particle>& v, const Collision& col, ReactionOutcome out) {
    if (col.left + 1 >= v.size()) throw SimError(SimError::Code::BadState, "collision index out of range");
    auto first = v.begin() + static_cast<std::ptrdiff_t>(col.left);
    switch (out) {
        case ReactionOutcome::LeftSurvives:
            v.erase(first);
            break;
        case ReactionOutcome::RightSurvives:
            v.erase(first + 1);
            break;
        case ReactionOutcome::BlockadeGenerated: {
            const Label lab = Label::pair(first->label.j, (first + 1)->label.j);
            *first = Particle{lab, Velocity::Still, col.location, true};
            v.erase(first + 1);
            break;
        }
        case ReactionOutcome::MutualAnnihilation:
            v.erase(first, first + 2);
            break;
    }
}

void resolve_collision(SimState& state, const Collision& col, InstructionStacks& stacks) {
    if (col.left + 1 >= state.alive.size())
        throw SimError(SimError::Code::BadState, "collision index out of range");
    // The left-mover owns the draw in Right-Left and Still-Left collisions.
    const int owner = col.kind == ReactionKind::RightMeetsStill ? state.alive[col.left].label.j
                                                                : state.alive[col.left + 1].label.j;
    apply_outcome(state, col, stacks.pop(owner, col.kind));
}

namespace {

// Returns A, or 0 when no particle of the prefix reaches the origin.
int run_core(SimState& state, InstructionStacks& stacks, Tick* arrival) {
    for (;;) {
        if (state.alive.empty()) return 0;
        const Particle& front = state.alive.front();
        if (front.velocity == Velocity::Left) {
            if (arrival) *arrival = front.x0;
            return front.label.j;
        }
        auto col = next_collision(state);
        if (!col) return 0;
        resolve_collision(state, *col, stacks);
    }
}

}  // namespace

SimOutcome run_to_first_arrival(SimState& state, InstructionStacks& stacks) {
    SimOutcome out;
    out.horizon = state.horizon;
    Tick t = 0;
    out.index = run_core(state, stacks, &t);
    out.arrived = out.index != 0;
    if (out.arrived) out.time = state.to_rational(t);
    return out;
}

int simulate_run(const Params& params, const SpacingLaw& law, int N, std::uint64_t master_seed,
                 std::uint64_t run_index, std::uint64_t& aborts) {
    thread_local SimState state;
    thread_local InstructionStacks stacks;
    const std::uint64_t key = derive_key(master_seed, run_index);
    for (std::uint64_t attempt = 0;; ++attempt) {
        const std::uint64_t seed = attempt == 0 ? key : derive_key(key, attempt);
        try {
            fill_run(params, law, N, seed, state, stacks);
            return run_core(state, stacks, nullptr);
        } catch (const SimError& e) {
            if (e.code != SimError::Code::SimultaneousCollision || attempt >= 1000)
                throw SimError(e.code, "run " + std::to_string(run_index) + ": " + e.what());
            ++aborts;
        }
    }
}

Histogram estimate_pn_serial(const Params& params, const SpacingLaw& law, int N,
                             std::uint64_t samples, std::uint64_t master_seed) {
    if (samples < 1) throw std::invalid_argument("samples must be >= 1");
    Histogram h;
    h.prefix = N;
    h.samples = samples;
    h.counts.assign(N + 1, 0);
    for (std::uint64_t i = 0; i < samples; ++i) {
        const int a = simulate_run(params, law, N, master_seed, i, h.aborts);
        if (a == 0)
            ++h.beyond;
        else
            ++h.counts[a];
    }
    return h;
}

Histogram estimate_pn(const Params& params, const SpacingLaw& law, int N, std::uint64_t samples,
                      std::uint64_t master_seed, int threads) {
    if (samples < 1) throw std::invalid_argument("samples must be >= 1");
    if (N < 1) throw std::invalid_argument("prefix must be >= 1");
    Histogram h;
    h.prefix = N;
    h.samples = samples;
    h.counts.assign(N + 1, 0);
    const int nthreads = threads > 0 ? threads : omp_get_max_threads();
    std::string err;
    const long long total = static_cast<long long>(samples);
#pragma omp parallel num_threads(nthreads)
    {
        std::vector<std::uint64_t> local(N + 2, 0);
        std::uint64_t local_aborts = 0;
#pragma omp for schedule(static)
        for (long long i = 0; i < total; ++i) {
            try {
                const int a = simulate_run(params, law, N, master_seed,
                                           static_cast<std::uint64_t>(i), local_aborts);
                ++local[a == 0 ? N + 1 : a];
            } catch (const std::exception& e) {
#pragma omp critical(tcba_sim_err)
                if (err.empty()) err = e.what();
            }
        }
#pragma omp critical(tcba_sim_merge)
        {
            for (int n = 1; n <= N; ++n) h.counts[n] += local[n];
            h.beyond += local[N + 1];
            h.aborts += local_aborts;
        }
    }
    if (!err.empty()) throw std::runtime_error(err);
    return h;
}

}  // namespace tcba
