#include "helpers.hpp"
#include "tcba/harness.hpp"
#include "tcba/io.hpp"

#include <doctest.h>

#include <cmath>

using namespace tcba;
using testutil::P;

namespace {

// Direct evaluation of the Wilson score formula with a hard-coded quantile.
Interval wilson_direct(double s, double n, double z) {
    const double ph = s / n, z2 = z * z;
    const double center = (ph + z2 / (2 * n)) / (1 + z2 / n);
    const double half = z / (1 + z2 / n) * std::sqrt(ph * (1 - ph) / n + z2 / (4 * n * n));
    return {center - half, center + half};
}

}  // namespace

TEST_CASE("Wilson intervals") {
    CHECK(wilson_ci(0, 100).lo == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(wilson_ci(100, 100).hi == doctest::Approx(1.0).epsilon(1e-15));
    auto w = wilson_ci(50, 100);
    CHECK(w.lo + w.hi == doctest::Approx(1.0).epsilon(1e-14));
    const double z95 = 1.959963984540054;
    for (auto [s, n] : {std::pair{50, 100}, {3, 17}, {999, 1000}, {0, 5}}) {
        auto a = wilson_ci(s, n), b = wilson_direct(s, n, z95);
        CHECK(a.lo == doctest::Approx(b.lo).epsilon(1e-12));
        CHECK(a.hi == doctest::Approx(b.hi).epsilon(1e-12));
    }
    auto w99 = wilson_ci(30, 80, 0.99), d99 = wilson_direct(30, 80, 2.5758293035489004);
    CHECK(w99.lo == doctest::Approx(d99.lo).epsilon(1e-12));
    CHECK_THROWS_AS(wilson_ci(1, 10, 1.0), HarnessError);
    CHECK_THROWS_AS(wilson_ci(1, 10, 0.0), HarnessError);
    CHECK_THROWS_AS(wilson_ci(11, 10), HarnessError);
    CHECK_THROWS_AS(wilson_ci(0, 0), HarnessError);
}

TEST_CASE("compare_to_recursion under the null and against a shifted bin") {
    auto params = P("1/3", "1/2", "1/4", "1/4", Mode::Float);
    auto table = compute_table<double>(params, 64);
    int failures = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto h = sample_from_pmf(table.p, 64, 1000000, seed);
        if (!compare_to_recursion(h, table.p, 10).pass) ++failures;
    }
    CHECK(failures <= 1);

    auto shifted = table.p;
    shifted[1] += 0.05;
    shifted[3] -= 0.05;
    auto h = sample_from_pmf(shifted, 64, 1000000, 99);
    auto cmp = compare_to_recursion(h, table.p, 10);
    CHECK_FALSE(cmp.pass);
    CHECK(cmp.z[1] > 4);

    CHECK_THROWS_AS(compare_to_recursion(sample_from_pmf(table.p, 64, 9999, 1), table.p, 10), HarnessError);
}

TEST_CASE("chi-square homogeneity merges sparse bins") {
    std::vector<double> pmf = {0, 0.5, 0.3, 0.1999, 0.0001};
    auto x = sample_from_pmf(pmf, 4, 10000, 1), y = sample_from_pmf(pmf, 4, 10000, 2);
    auto chi = chi_square_homogeneity(x, y, 4);
    CHECK(chi.merged == std::vector<int>{4});
    CHECK(chi.bins == 4);
    CHECK(chi.df == 3);
    CHECK(chi.p_value > 0);
    CHECK(chi.p_value <= 1);
}

TEST_CASE("chi-square rejection rate under the null") {
    auto params = P("0.3", "0.2", "0.1", "0.25", Mode::Float);
    const auto law = SpacingLaw::exponential(1);
    int rejections = 0;
    for (std::uint64_t r = 0; r < 100; ++r) {
        auto x = estimate_pn(params, law, 32, 10000, 1000 + 2 * r);
        auto y = estimate_pn(params, law, 32, 10000, 1001 + 2 * r);
        if (chi_square_homogeneity(x, y, 10).p_value < 0.001) ++rejections;
    }
    CHECK(rejections <= 2);
}

TEST_CASE("verify_universality") {
    const auto exp1 = SpacingLaw::exponential(1);
    SUBCASE("same law twice") {
        auto rep = verify_universality(P("1/4", "0", "0", "0", Mode::Float), {exp1, exp1}, 10, 100000, 5);
        CHECK(rep.universality_pass);
        CHECK(rep.pass);
        CHECK(rep.runs[0].seed != rep.runs[1].seed);
        CHECK(rep.pairs.size() == 1);
    }
    SUBCASE("three laws, simple BA") {
        auto rep = verify_universality(P("1/4", "0", "0", "0", Mode::Float),
                                       {exp1, SpacingLaw::uniform(0, 1), SpacingLaw::pareto(2.5, 1)}, 10,
                                       1000000, 6);
        CHECK(rep.pairs.size() == 3);
        CHECK(rep.universality_pass);
        CHECK(rep.recursion_pass);
        CHECK(rep.pass);
    }
    SUBCASE("perturbed reaction weights are caught") {
        VerifyOptions o;
        o.perturb_last = true;
        auto rep = verify_universality(P("1/3", "1/2", "1/4", "1/4", Mode::Float), {exp1, exp1}, 10, 100000,
                                       7, o);
        CHECK(rep.runs[1].perturbed);
        CHECK_FALSE(rep.universality_pass);
        CHECK_FALSE(rep.pass);
    }
    SUBCASE("preconditions") {
        auto ba = P("1/4", "0", "0", "0", Mode::Float);
        CHECK_THROWS_AS(verify_universality(ba, {exp1}, 10, 100000, 1), HarnessError);
        CHECK_THROWS_AS(verify_universality(ba, {exp1, exp1}, 10, 99999, 1), HarnessError);
    }
}

TEST_CASE("reports are byte-identical across reruns and worker counts") {
    auto params = P("0.3", "0.2", "0.1", "0.25", Mode::Float);
    const std::vector<SpacingLaw> laws = {SpacingLaw::exponential(1), SpacingLaw::uniform(0, 1)};
    VerifyOptions o1, o8;
    o1.threads = 1;
    o8.threads = 8;
    auto a = report_to_json(verify_universality(params, laws, 10, 100000, 21, o1)).dump();
    auto b = report_to_json(verify_universality(params, laws, 10, 100000, 21, o1)).dump();
    auto c = report_to_json(verify_universality(params, laws, 10, 100000, 21, o8)).dump();
    CHECK(a == b);
    CHECK(a == c);
}

TEST_CASE("perturb_params stays valid") {
    auto p = perturb_params(P("1/3", "1/2", "1/4", "1/4"));
    CHECK(p.a == P("1/3", "1/2", "1/4", "1/4").a + dyadic(0.1));
    auto q = perturb_params(P("1/3", "1/2", "1/2", "1"));
    CHECK(q.a < P("1/3", "1/2", "1/2", "1").a);
    CHECK(q.c < 1);
}
