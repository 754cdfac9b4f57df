#include "helpers.hpp"
#include "tcba/oracle.hpp"
#include "tcba/recursion.hpp"

#include <doctest.h>

#include <cmath>

using namespace tcba;
using testutil::P;
using testutil::R;

namespace {

std::vector<Rational> random_positions(std::mt19937_64& g, int n) {
    std::uniform_int_distribution<long> gap(1, 1L << 30);
    std::vector<Rational> x;
    Rational cur = 0;
    for (int k = 0; k < n; ++k) {
        cur += Rational(gap(g), 1L << 20);
        cur.canonicalize();
        x.push_back(cur);
    }
    return x;
}

Rational total(const ConditionalPmf<Rational>& m) {
    Rational s = m.beyond;
    for (const auto& v : m.mass) s += v;
    return s;
}

}  // namespace

TEST_CASE("one particle arrives with probability (1-p)/2") {
    for (const char* x : {"1", "7/3", "100"}) {
        auto m = enumerate_conditional<Rational>(P("1/3", "1/2", "1/4", "1/4"), {R(x)});
        CHECK(m.mass[1] == R("1/3"));
        CHECK(m.beyond == R("2/3"));
    }
}

TEST_CASE("P(A = 2 | x) does not depend on x") {
    std::mt19937_64 g(1);
    for (int i = 0; i < 20; ++i) {
        auto params = testutil::random_params(g);
        const Rational q = (1 - params.p) / 2;
        const Rational want = params.c * params.p * q + params.a / 2 * q * q;
        for (auto x : {std::vector<Rational>{R("1"), R("2")}, std::vector<Rational>{R("1/5"), R("9")}}) {
            auto m = enumerate_conditional<Rational>(params, x);
            CHECK(m.mass[2] == want);
        }
    }
    auto ba = enumerate_conditional<Rational>(P("1/4", "0", "0", "0"), {R("1"), R("3")});
    CHECK(ba.mass[2] == 0);
}

TEST_CASE("conditional masses are nonnegative and sum to one") {
    std::mt19937_64 g(2);
    for (int i = 0; i < 40; ++i) {
        auto params = testutil::random_params(g);
        auto x = random_positions(g, 2 + i % 5);
        auto m = enumerate_conditional<Rational>(params, x);
        CHECK(total(m) == 1);
        CHECK(m.beyond >= 0);
        for (const auto& v : m.mass) CHECK(v >= 0);
    }
}

TEST_CASE("oracle input errors") {
    auto params = P("1/3", "1/2", "1/4", "1/4");
    std::vector<Rational> nine;
    for (int k = 1; k <= 9; ++k) nine.push_back(k);
    try {
        enumerate_conditional<Rational>(params, nine);
        FAIL("expected TooLarge");
    } catch (const OracleError& e) {
        CHECK(e.code == OracleError::Code::TooLarge);
    }
    try {
        enumerate_conditional<Rational>(params, {R("1"), R("2"), R("3")});
        FAIL("expected TieDetected");
    } catch (const OracleError& e) {
        CHECK(e.code == OracleError::Code::TieDetected);
    }
    CHECK_THROWS_AS(enumerate_conditional<Rational>(params, {R("2"), R("1")}), OracleError);
}

TEST_CASE("Rao-Blackwell estimates") {
    auto params = P("1/3", "1/2", "1/4", "1/4");
    auto rb = rao_blackwell_estimate(params, SpacingLaw::exponential(1), 2, 500, 3);
    const double q = 1.0 / 3;
    CHECK(rb.mean[1] == doctest::Approx(q).epsilon(1e-15));
    CHECK(rb.se[1] == 0);
    CHECK(rb.constant[1]);
    const double p2 = 0.25 * (1.0 / 3) * q + 0.25 * q * q;
    CHECK(rb.mean[2] == doctest::Approx(p2).epsilon(1e-15));
    CHECK(rb.se[2] == 0);
    CHECK(rb.constant[2]);

    auto ba = rao_blackwell_estimate(P("1/4", "0", "0", "0"), SpacingLaw::exponential(1), 3, 10000, 4);
    CHECK(std::fabs(ba.mean[3] - 27.0 / 256) <= 4 * ba.se[3] + 1e-12);

    auto again = rao_blackwell_estimate(P("1/4", "0", "0", "0"), SpacingLaw::exponential(1), 3, 10000, 4, 1);
    CHECK(again.mean == ba.mean);
    CHECK(again.se == ba.se);
}

TEST_CASE("reversal symmetry") {
    auto params = P("1/3", "1/2", "1/4", "1/4");
    auto r1 = check_reversal(params, {R("5")});
    CHECK(r1.mismatches == 0);
    CHECK(r1.matched == r1.leaves);

    auto r2 = check_reversal(params, {R("1"), R("5/2")});
    CHECK(r2.mismatches == 0);
    CHECK(r2.leaves > 9);
    CHECK(r2.matched == r2.leaves);

    std::mt19937_64 g(7);
    for (int i = 0; i < 50; ++i) {
        auto rep = check_reversal(params, random_positions(g, 4));
        CHECK(rep.mismatches == 0);
        CHECK(rep.matched == rep.leaves);
    }
}

TEST_CASE("simulator and oracle agree on every coupled draw") {
    auto params = P("1/3", "1/2", "1/4", "1/4", Mode::Float);
    std::mt19937_64 g(13);
    std::uniform_int_distribution<int> vel(0, 2);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + trial % 5;
        auto x = random_positions(g, n);
        std::vector<Velocity> v(n);
        for (auto& e : v) e = static_cast<Velocity>(vel(g));
        std::vector<std::array<std::vector<ReactionOutcome>, 3>> lists(n);
        for (auto& l : lists) {
            for (int k = 0; k < 3; ++k)
                for (int d = 0; d < n; ++d)
                    l[k].push_back(sample_outcome(params, static_cast<ReactionKind>(k), u(g)));
        }
        auto state = make_state(x, v);
        auto stacks = InstructionStacks::explicit_stacks(lists);
        SimOutcome sim;
        try {
            sim = run_to_first_arrival(state, stacks);
        } catch (const SimError&) {
            continue;
        }
        int selected = 0, index = -1;
        for (const auto& leaf : enumerate_leaves(params, x, v)) {
            std::vector<std::array<int, 3>> depth(n + 1, {0, 0, 0});
            bool match = true;
            for (const auto& e : leaf.events) {
                const int k = static_cast<int>(e.kind);
                if (lists[e.owner - 1][k][depth[e.owner][k]++] != e.outcome) {
                    match = false;
                    break;
                }
            }
            if (match) {
                ++selected;
                index = leaf.index;
            }
        }
        CHECK(selected == 1);
        CHECK(index == sim.index);
    }
}

TEST_CASE("hierarchical law") {
    auto params = P("1/3", "1/2", "1/4", "1/4");
    auto h1 = hierarchical_pmf(params, 1);
    CHECK(h1[1] == R("1/3"));
    auto h4 = hierarchical_pmf(params, 4);
    CHECK(h4[1] == R("1/3"));
    CHECK(h4[2] == R("1/18"));
    Rational s = 0;
    for (const auto& m : h4) s += m;
    CHECK(s == 1);
    // Agrees with the Monte Carlo integral over an ordinary spacing law.
    auto rb = rao_blackwell_estimate(params, SpacingLaw::uniform(0, 1), 4, 4000, 11);
    for (int k = 3; k <= 4; ++k)
        CHECK(std::fabs(rb.mean[k] - h4[k].get_d()) <= 4 * rb.se[k] + 1e-12);
}
