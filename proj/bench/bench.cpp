#include "tcba/recursion.hpp"
#include "tcba/simulator.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <omp.h>

using namespace tcba;

namespace {

template <class F>
double seconds(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    const std::uint64_t samples = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 200000;
    const int N = argc > 2 ? std::atoi(argv[2]) : 100;
    const auto params = validate_params(parse_rational("0.3"), parse_rational("0.2"), parse_rational("0.1"),
                                        parse_rational("0.25"), Mode::Float);
    const auto law = SpacingLaw::exponential(1);

    Histogram serial, parallel;
    const double ts = seconds([&] { serial = estimate_pn_serial(params, law, 64, samples, 1); });
    const double tp = seconds([&] { parallel = estimate_pn(params, law, 64, samples, 1); });
    std::printf("estimate_pn  %llu runs, prefix 64\n", static_cast<unsigned long long>(samples));
    std::printf("  serial     %8.3f s\n", ts);
    std::printf("  openmp x%-2d %8.3f s  (speedup %.2f, identical: %s)\n", omp_get_max_threads(), tp, ts / tp,
                serial == parallel ? "yes" : "no");

    const auto exact = validate_params(parse_rational("1/3"), parse_rational("1/2"), parse_rational("1/4"),
                                       parse_rational("1/4"), Mode::Exact);
    RecursionOptions naive{.strategy = Strategy::Naive, .allow_negative = true};
    RecursionOptions inc{.strategy = Strategy::Incremental, .allow_negative = true};
    RecursionTable<Rational> a, b;
    const double tn = seconds([&] { a = compute_table<Rational>(exact, N, naive); });
    const double ti = seconds([&] { b = compute_table<Rational>(exact, N, inc); });
    std::printf("compute_table exact, N = %d\n", N);
    std::printf("  naive       %8.3f s\n", tn);
    std::printf("  incremental %8.3f s  (identical: %s)\n", ti, a.p == b.p ? "yes" : "no");

    const auto fl = validate_params(exact.p, exact.a, exact.b, exact.c, Mode::Float);
    const double fn = seconds([&] { compute_table<double>(fl, 20 * N, naive); });
    const double fi = seconds([&] { compute_table<double>(fl, 20 * N, inc); });
    std::printf("compute_table float, N = %d\n", 20 * N);
    std::printf("  naive       %8.3f s\n", fn);
    std::printf("  incremental %8.3f s\n", fi);
    return 0;
}
