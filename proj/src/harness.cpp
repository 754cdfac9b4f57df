#include "tcba/harness.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <limits>

namespace tcba {

Interval wilson_ci(std::uint64_t successes, std::uint64_t trials, double level) {
    if (!(level > 0 && level < 1)) throw HarnessError(HarnessError::Code::BadLevel, "level must lie in (0,1)");
    if (trials < 1 || successes > trials)
        throw HarnessError(HarnessError::Code::BadArgument, "need 0 <= successes <= trials, trials >= 1");
    const double z = boost::math::quantile(boost::math::normal(), 0.5 + level / 2);
    const double n = static_cast<double>(trials);
    const double ph = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1 + z2 / n;
    const double center = (ph + z2 / (2 * n)) / denom;
    const double half = z / denom * std::sqrt(ph * (1 - ph) / n + z2 / (4 * n * n));
    Interval ci{center - half, center + half};
    if (successes == 0) ci.lo = 0;
    if (successes == trials) ci.hi = 1;
    ci.lo = std::max(0.0, ci.lo);
    ci.hi = std::min(1.0, ci.hi);
    return ci;
}

RecursionComparison compare_to_recursion(const Histogram& h, const std::vector<double>& pn, int n_max) {
    if (h.samples < 10000)
        throw HarnessError(HarnessError::Code::InsufficientSamples, "comparison needs at least 10^4 samples");
    if (n_max < 1 || n_max > h.prefix || n_max >= static_cast<int>(pn.size()))
        throw HarnessError(HarnessError::Code::BadArgument, "n_max exceeds histogram or table");
    RecursionComparison c;
    c.n_max = n_max;
    c.p_hat.assign(n_max + 1, 0);
    c.p_ref.assign(n_max + 1, 0);
    c.se.assign(n_max + 1, 0);
    c.z.assign(n_max + 1, 0);
    const double S = static_cast<double>(h.samples);
    c.pass = true;
    for (int n = 1; n <= n_max; ++n) {
        const double ph = static_cast<double>(h.counts[n]) / S;
        const double p = pn[n];
        const double var = p * (1 - p);
        const double se = var > 0 ? std::sqrt(var / S) : 0.0;
        double z = 0;
        if (se > 0)
            z = (ph - p) / se;
        else if (ph != p)
            z = std::numeric_limits<double>::infinity();
        c.p_hat[n] = ph;
        c.p_ref[n] = p;
        c.se[n] = se;
        c.z[n] = z;
        if (!(std::fabs(z) <= c.threshold)) c.pass = false;
    }
    return c;
}

namespace {

std::vector<std::uint64_t> binned(const Histogram& h, int n_max) {
    std::vector<std::uint64_t> b(n_max + 2, 0);  // b[0] is "beyond"
    for (int n = 1; n <= h.prefix; ++n) {
        if (n <= n_max)
            b[n] = h.counts[n];
        else
            b[0] += h.counts[n];
    }
    b[0] += h.beyond;
    return b;
}

}  // namespace

ChiSquare chi_square_homogeneity(const Histogram& x, const Histogram& y, int n_max) {
    if (n_max < 1) throw HarnessError(HarnessError::Code::BadArgument, "n_max must be >= 1");
    auto bx = binned(x, n_max), by = binned(y, n_max);
    const double rx = static_cast<double>(x.samples), ry = static_cast<double>(y.samples);
    const double total = rx + ry;
    ChiSquare out;
    std::vector<std::pair<double, double>> cells;
    double beyond_x = static_cast<double>(bx[0]), beyond_y = static_cast<double>(by[0]);
    for (int n = 1; n <= n_max; ++n) {
        const double col = static_cast<double>(bx[n] + by[n]);
        if (col * std::min(rx, ry) / total < 5) {
            out.merged.push_back(n);
            beyond_x += static_cast<double>(bx[n]);
            beyond_y += static_cast<double>(by[n]);
        } else {
            cells.emplace_back(static_cast<double>(bx[n]), static_cast<double>(by[n]));
        }
    }
    if (beyond_x + beyond_y > 0) cells.emplace_back(beyond_x, beyond_y);
    for (const auto& [ox, oy] : cells) {
        const double col = ox + oy;
        const double ex = col * rx / total, ey = col * ry / total;
        out.statistic += (ox - ex) * (ox - ex) / ex + (oy - ey) * (oy - ey) / ey;
    }
    out.bins = static_cast<int>(cells.size());
    out.df = out.bins - 1;
    if (out.df >= 1)
        out.p_value = boost::math::cdf(boost::math::complement(
            boost::math::chi_squared(static_cast<double>(out.df)), out.statistic));
    return out;
}

Histogram sample_from_pmf(const std::vector<double>& pmf, int prefix, std::uint64_t samples,
                          std::uint64_t seed) {
    Histogram h;
    h.prefix = prefix;
    h.samples = samples;
    h.counts.assign(prefix + 1, 0);
    std::vector<double> cdf(prefix + 1, 0);
    for (int n = 1; n <= prefix; ++n) cdf[n] = cdf[n - 1] + (n < static_cast<int>(pmf.size()) ? pmf[n] : 0);
    CounterRng rng(seed);
    for (std::uint64_t s = 0; s < samples; ++s) {
        const double u = rng.uniform();
        auto it = std::upper_bound(cdf.begin() + 1, cdf.end(), u);
        if (it == cdf.end())
            ++h.beyond;
        else
            ++h.counts[it - cdf.begin()];
    }
    return h;
}

Params perturb_params(const Params& params, double delta) {
    Params out = params;
    const Rational d = dyadic(delta);
    out.a = params.a + d + params.b <= 1 ? Rational(params.a + d) : Rational(params.a - d);
    out.c = params.c + d <= 1 ? Rational(params.c + d) : Rational(params.c - d);
    return validate_params(out.p, out.a, out.b, out.c, out.mode);
}

VerificationReport verify_universality(const Params& params, const std::vector<SpacingLaw>& laws,
                                       int n_max, std::uint64_t samples, std::uint64_t seed,
                                       const VerifyOptions& options) {
    if (laws.size() < 2) throw HarnessError(HarnessError::Code::BadArgument, "need at least two spacing laws");
    if (samples < 100000)
        throw HarnessError(HarnessError::Code::InsufficientSamples, "need at least 10^5 samples per law");
    if (n_max < 1 || n_max > options.prefix)
        throw HarnessError(HarnessError::Code::BadArgument, "n_max must lie in [1, prefix]");
    VerificationReport rep;
    rep.params = params;
    rep.n_max = n_max;
    rep.samples = samples;
    rep.seed = seed;
    rep.options = options;

    const auto table = compute_table<double>(params, n_max, options.recursion);
    rep.recursion_pn = table.p;

    rep.recursion_pass = true;
    for (std::size_t i = 0; i < laws.size(); ++i) {
        LawRun run;
        run.law = laws[i];
        run.seed = derive_key(seed, i);
        run.perturbed = options.perturb_last && i + 1 == laws.size();
        run.params = run.perturbed ? perturb_params(params) : params;
        run.histogram = estimate_pn(run.params, run.law, options.prefix, samples, run.seed, options.threads);
        run.vs_recursion = compare_to_recursion(run.histogram, rep.recursion_pn, n_max);
        if (!run.vs_recursion.pass) rep.recursion_pass = false;
        rep.runs.push_back(std::move(run));
    }
    rep.universality_pass = true;
    for (std::size_t i = 0; i < rep.runs.size(); ++i)
        for (std::size_t j = i + 1; j < rep.runs.size(); ++j) {
            PairTest t;
            t.i = static_cast<int>(i);
            t.j = static_cast<int>(j);
            t.chi = chi_square_homogeneity(rep.runs[i].histogram, rep.runs[j].histogram, n_max);
            t.reject = t.chi.p_value < options.alpha;
            if (t.reject) rep.universality_pass = false;
            rep.pairs.push_back(t);
        }
    rep.pass = rep.universality_pass && rep.recursion_pass;
    return rep;
}

}  // namespace tcba
