#include "tcba/oracle.hpp"

#include <omp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>

namespace tcba {

namespace {

template <class S>
struct Tables {
    std::array<S, 3> vel;
    std::vector<Weighted<S>> rl, sl, rs;

    explicit Tables(const Params& params)
        : vel(velocity_weights<S>(params)),
          rl(reaction_distribution<S>(params, ReactionKind::RightMeetsLeft)),
          sl(reaction_distribution<S>(params, ReactionKind::StillMeetsLeft)),
          rs(reaction_distribution<S>(params, ReactionKind::RightMeetsStill)) {}

    const std::vector<Weighted<S>>& of(ReactionKind k) const {
        return k == ReactionKind::RightMeetsLeft ? rl : k == ReactionKind::StillMeetsLeft ? sl : rs;
    }
};

template <class S>
bool is_zero(const S& x) {
    return x == 0;
}

std::optional<Collision> next_or_tie(const std::vector<Particle>& st) {
    try {
        return next_collision(st);
    } catch (const SimError& e) {
        if (e.code == SimError::Code::SimultaneousCollision)
            throw OracleError(OracleError::Code::TieDetected, e.what());
        throw;
    }
}

template <class S>
void explore(const std::vector<Particle>& st, const S& w, const Tables<S>& tab, std::vector<S>& mass) {
    if (st.empty()) {
        mass[0] += w;
        return;
    }
    if (st.front().velocity == Velocity::Left) {
        mass[st.front().label.j] += w;
        return;
    }
    auto col = next_or_tie(st);
    if (!col) {
        mass[0] += w;
        return;
    }
    for (const auto& o : tab.of(col->kind)) {
        if (is_zero(o.weight)) continue;
        std::vector<Particle> next = st;
        apply_outcome(next, *col, o.outcome);
        explore(next, S(w * o.weight), tab, mass);
    }
}

// mass[0] collects P(A > n | x)
template <class S>
std::vector<S> enumerate_even_ticks(const Params& params, const std::vector<Tick>& xs) {
    const int n = static_cast<int>(xs.size());
    if (n > kOracleMaxN) throw OracleError(OracleError::Code::TooLarge, "oracle supports n <= 8");
    if (n < 1) throw OracleError(OracleError::Code::BadInput, "need at least one particle");
    for (int i = 0; i < n; ++i)
        if (xs[i] <= 0 || (i > 0 && xs[i] <= xs[i - 1]))
            throw OracleError(OracleError::Code::BadInput, "positions must be positive and increasing");
    Tables<S> tab(params);
    std::vector<S> mass(n + 1, scalar<S>(0));
    std::vector<Particle> st(n);
    for (int i = 0; i < n; ++i) st[i] = {Label::single(i + 1), Velocity::Left, xs[i], true};
    std::vector<int> digits(n, 0);
    const Velocity order[3] = {Velocity::Left, Velocity::Still, Velocity::Right};
    for (;;) {
        S w = scalar<S>(1);
        for (int i = 0; i < n; ++i) {
            st[i].velocity = order[digits[i]];
            w *= tab.vel[digits[i]];
        }
        explore(st, w, tab, mass);
        int i = n - 1;
        while (i >= 0 && ++digits[i] == 3) digits[i--] = 0;
        if (i < 0) break;
    }
    return mass;
}

}  // namespace

template <class S>
std::vector<S> enumerate_conditional_ticks(const Params& params, const std::vector<Tick>& positions) {
    std::vector<Tick> xs(positions);
    for (auto& x : xs) x *= 2;
    return enumerate_even_ticks<S>(params, xs);
}

template <class S>
ConditionalPmf<S> enumerate_conditional(const Params& params, const std::vector<Rational>& positions) {
    if (static_cast<int>(positions.size()) > kOracleMaxN)
        throw OracleError(OracleError::Code::TooLarge, "oracle supports n <= 8");
    std::vector<Velocity> dummy(positions.size(), Velocity::Still);
    SimState st;
    try {
        st = make_state(positions, dummy);
    } catch (const SimError& e) {
        throw OracleError(OracleError::Code::BadInput, e.what());
    }
    std::vector<Tick> xs;
    for (const auto& p : st.alive) xs.push_back(p.x0);
    auto mass = enumerate_even_ticks<S>(params, xs);
    ConditionalPmf<S> out;
    out.positions = positions;
    out.beyond = mass[0];
    mass[0] = scalar<S>(0);
    out.mass = std::move(mass);
    return out;
}

template ConditionalPmf<double> enumerate_conditional<double>(const Params&, const std::vector<Rational>&);
template ConditionalPmf<Rational> enumerate_conditional<Rational>(const Params&, const std::vector<Rational>&);
template std::vector<double> enumerate_conditional_ticks<double>(const Params&, const std::vector<Tick>&);
template std::vector<Rational> enumerate_conditional_ticks<Rational>(const Params&, const std::vector<Tick>&);

namespace {

struct LeafWalk {
    const Tables<Rational>& tab;
    std::vector<OracleLeaf>& out;
    std::vector<OracleEvent> events;

    void run(const std::vector<Particle>& st, const Rational& w) {
        int index = -1;
        std::optional<Collision> col;
        if (st.empty()) {
            index = 0;
        } else if (st.front().velocity == Velocity::Left) {
            index = st.front().label.j;
        } else {
            col = next_or_tie(st);
            if (!col) index = 0;
        }
        if (index >= 0) {
            out.push_back({events, index, w});
            return;
        }
        const int owner = col->kind == ReactionKind::RightMeetsStill ? st[col->left].label.j
                                                                     : st[col->left + 1].label.j;
        for (const auto& o : tab.of(col->kind)) {
            if (o.weight == 0) continue;
            std::vector<Particle> next = st;
            apply_outcome(next, *col, o.outcome);
            events.push_back({owner, col->kind, o.outcome});
            run(next, Rational(w * o.weight));
            events.pop_back();
        }
    }
};

}  // namespace

std::vector<OracleLeaf> enumerate_leaves(const Params& params, const std::vector<Rational>& positions,
                                         const std::vector<Velocity>& velocities) {
    if (static_cast<int>(positions.size()) > kOracleMaxN)
        throw OracleError(OracleError::Code::TooLarge, "oracle supports n <= 8");
    SimState st;
    try {
        st = make_state(positions, velocities);
    } catch (const SimError& e) {
        throw OracleError(OracleError::Code::BadInput, e.what());
    }
    Tables<Rational> tab(params);
    Rational w = 1;
    for (auto v : velocities) w *= tab.vel[static_cast<int>(v)];
    std::vector<OracleLeaf> out;
    LeafWalk walk{tab, out, {}};
    walk.run(st.alive, w);
    return out;
}

RaoBlackwell rao_blackwell_estimate(const Params& params, const SpacingLaw& law, int n,
                                   std::uint64_t spacing_samples, std::uint64_t seed, int threads) {
    if (n < 1 || n > kOracleMaxN) throw OracleError(OracleError::Code::TooLarge, "oracle supports 1 <= n <= 8");
    if (spacing_samples < 1) throw OracleError(OracleError::Code::BadInput, "need at least one spacing sample");
    const std::size_t width = static_cast<std::size_t>(n) + 1;
    std::vector<double> vals(spacing_samples * width, 0.0);
    std::vector<std::uint64_t> redraws(spacing_samples, 0);
    const long long total = static_cast<long long>(spacing_samples);
    const int nthreads = threads > 0 ? threads : omp_get_max_threads();
    std::string err;
#pragma omp parallel for schedule(dynamic, 16) num_threads(nthreads)
    for (long long i = 0; i < total; ++i) {
        try {
            const std::uint64_t key = derive_key(seed, static_cast<std::uint64_t>(i));
            for (std::uint64_t attempt = 0;; ++attempt) {
                CounterRng rng(attempt == 0 ? key : derive_key(key, attempt));
                const auto xs = sample_positions(law, n, rng);
                try {
                    double* row = &vals[static_cast<std::size_t>(i) * width];
                    for (int k = 1; k <= n; ++k) {
                        std::vector<Tick> prefix(xs.begin(), xs.begin() + k);
                        auto m = enumerate_conditional_ticks<double>(params, prefix);
                        row[k] = m[k];
                        if (k == n) row[0] = m[0];
                    }
                    break;
                } catch (const OracleError& e) {
                    if (e.code != OracleError::Code::TieDetected || attempt >= 100) throw;
                    ++redraws[i];
                }
            }
        } catch (const std::exception& e) {
#pragma omp critical(tcba_rb_err)
            if (err.empty()) err = e.what();
        }
    }
    if (!err.empty()) throw std::runtime_error(err);

    RaoBlackwell rb;
    rb.n = n;
    rb.samples = spacing_samples;
    rb.seed = seed;
    rb.resampled = std::accumulate(redraws.begin(), redraws.end(), std::uint64_t{0});
    rb.mean.assign(width, 0.0);
    rb.se.assign(width, 0.0);
    rb.constant.assign(width, true);
    for (std::size_t k = 0; k < width; ++k) {
        double lo = vals[k], hi = vals[k], sum = 0;
        for (std::uint64_t i = 0; i < spacing_samples; ++i) {
            const double v = vals[i * width + k];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
        }
        double mean, se = 0;
        if (lo == hi) {
            mean = lo;
        } else {
            rb.constant[k] = false;
            mean = sum / static_cast<double>(spacing_samples);
            double ss = 0;
            for (std::uint64_t i = 0; i < spacing_samples; ++i) {
                const double d = vals[i * width + k] - mean;
                ss += d * d;
            }
            if (spacing_samples > 1)
                se = std::sqrt(ss / static_cast<double>(spacing_samples - 1) /
                               static_cast<double>(spacing_samples));
        }
        if (k == 0) {
            rb.beyond_mean = mean;
            rb.beyond_se = se;
        } else {
            rb.mean[k] = mean;
            rb.se[k] = se;
        }
    }
    rb.constant[0] = true;
    return rb;
}

namespace {

using LeafKey = std::vector<long long>;

struct Event {
    Tick time;
    int kind, left, right, outcome;
};

int encode(const Label& l) { return l.j * 64 + l.k; }

Label mirror_label(const Label& l, int n) {
    if (!l.is_pair()) return Label::single(n + 1 - l.j);
    return Label::pair(n + 1 - l.k, n + 1 - l.j);
}

LeafKey make_key(const std::vector<Velocity>& vel, std::vector<Event> ev) {
    std::sort(ev.begin(), ev.end(), [](const Event& x, const Event& y) {
        if (x.time != y.time) return x.time < y.time;
        return x.left < y.left;
    });
    LeafKey key;
    for (auto v : vel) key.push_back(static_cast<int>(v));
    for (const auto& e : ev) {
        key.push_back(static_cast<long long>(e.time >> 64));
        key.push_back(static_cast<long long>(static_cast<std::uint64_t>(e.time)));
        key.push_back(e.kind);
        key.push_back(e.left);
        key.push_back(e.right);
        key.push_back(e.outcome);
    }
    return key;
}

struct FullEnum {
    const Tables<Rational>& tab;
    std::map<LeafKey, Rational>& leaves;
    std::vector<Velocity> vel;
    std::vector<Event> events;

    void run(const std::vector<Particle>& st, const Rational& w) {
        auto col = next_or_tie(st);
        if (!col) {
            leaves[make_key(vel, events)] += w;
            return;
        }
        const Particle& l = st[col->left];
        const Particle& r = st[col->left + 1];
        for (const auto& o : tab.of(col->kind)) {
            if (o.weight == 0) continue;
            std::vector<Particle> next = st;
            apply_outcome(next, *col, o.outcome);
            events.push_back({col->time, static_cast<int>(col->kind), encode(l.label),
                              encode(r.label), static_cast<int>(o.outcome)});
            run(next, Rational(w * o.weight));
            events.pop_back();
        }
    }
};

std::map<LeafKey, Rational> full_leaves(const Params& params, const std::vector<Tick>& xs) {
    const int n = static_cast<int>(xs.size());
    Tables<Rational> tab(params);
    std::map<LeafKey, Rational> leaves;
    FullEnum fe{tab, leaves, std::vector<Velocity>(n), {}};
    std::vector<int> digits(n, 0);
    const Velocity order[3] = {Velocity::Left, Velocity::Still, Velocity::Right};
    for (;;) {
        std::vector<Particle> st;
        Rational w = 1;
        for (int i = 0; i < n; ++i) {
            fe.vel[i] = order[digits[i]];
            st.push_back({Label::single(i + 1), fe.vel[i], xs[i], true});
            w *= tab.vel[digits[i]];
        }
        fe.run(st, w);
        int i = n - 1;
        while (i >= 0 && ++digits[i] == 3) digits[i--] = 0;
        if (i < 0) break;
    }
    return leaves;
}

LeafKey mirror_key(const LeafKey& key, int n) {
    std::vector<Velocity> vel(n);
    for (int i = 0; i < n; ++i) vel[n - 1 - i] = mirror(static_cast<Velocity>(key[i]));
    std::vector<Event> ev;
    for (std::size_t p = n; p < key.size(); p += 6) {
        Event e;
        e.time = (static_cast<Tick>(key[p]) << 64) | static_cast<Tick>(static_cast<std::uint64_t>(key[p + 1]));
        e.kind = static_cast<int>(mirror(static_cast<ReactionKind>(key[p + 2])));
        const Label left{static_cast<int>(key[p + 3] / 64), static_cast<int>(key[p + 3] % 64)};
        const Label right{static_cast<int>(key[p + 4] / 64), static_cast<int>(key[p + 4] % 64)};
        e.left = encode(mirror_label(right, n));
        e.right = encode(mirror_label(left, n));
        e.outcome = static_cast<int>(mirror(static_cast<ReactionOutcome>(key[p + 5])));
        ev.push_back(e);
    }
    return make_key(vel, std::move(ev));
}

}  // namespace

ReversalReport check_reversal(const Params& params, const std::vector<Rational>& positions) {
    const int n = static_cast<int>(positions.size());
    if (n > 6) throw OracleError(OracleError::Code::TooLarge, "reversal check supports n <= 6");
    if (n < 1) throw OracleError(OracleError::Code::BadInput, "need at least one particle");
    SimState st;
    try {
        st = make_state(positions, std::vector<Velocity>(n, Velocity::Still));
    } catch (const SimError& e) {
        throw OracleError(OracleError::Code::BadInput, e.what());
    }
    std::vector<Tick> xs, rev;
    for (const auto& p : st.alive) xs.push_back(p.x0);
    // x'_i = x_1 + x_n - x_{n+1-i}; doubling keeps midpoints of the reversed
    // configuration integral as well.
    for (auto& x : xs) x *= 2;
    for (int i = 0; i < n; ++i) rev.push_back(xs[0] + xs[n - 1] - xs[n - 1 - i]);

    const auto fwd = full_leaves(params, xs);
    const auto bwd = full_leaves(params, rev);
    ReversalReport rep;
    rep.n = n;
    rep.leaves = fwd.size();
    for (const auto& [key, w] : fwd) {
        auto it = bwd.find(mirror_key(key, n));
        if (it != bwd.end() && it->second == w) ++rep.matched;
    }
    // mirror_key is injective, so unmatched leaves on either side are mismatches
    rep.mismatches = (fwd.size() - rep.matched) + (bwd.size() - rep.matched);
    return rep;
}

std::vector<Rational> hierarchical_pmf(const Params& params, int n) {
    if (n < 1 || n > kOracleMaxN) throw OracleError(OracleError::Code::TooLarge, "oracle supports 1 <= n <= 8");
    const Tick M = 64;
    std::vector<int> ranks(n - 1);
    std::iota(ranks.begin(), ranks.end(), 0);
    std::vector<Rational> total(n + 1, Rational(0));
    long long count = 0;
    do {
        std::vector<Tick> xs{1};
        for (int r : ranks) {
            Tick g = 1;
            for (int i = 0; i < r; ++i) g *= M;
            xs.push_back(xs.back() + g);
        }
        auto m = enumerate_conditional_ticks<Rational>(params, xs);
        for (int k = 0; k <= n; ++k) total[k] += m[k];
        ++count;
    } while (std::next_permutation(ranks.begin(), ranks.end()));
    for (auto& t : total) {
        t /= Rational(static_cast<long>(count));
        t.canonicalize();
    }
    return total;
}

}  // namespace tcba
