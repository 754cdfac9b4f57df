#include "tcba/io.hpp"

#include <cstdio>

namespace tcba {

json params_to_json(const Params& p) {
    json j;
    if (p.mode == Mode::Exact) {
        j["p"] = format_rational(p.p);
        j["a"] = format_rational(p.a);
        j["b"] = format_rational(p.b);
        j["c"] = format_rational(p.c);
        j["mode"] = "exact";
    } else {
        j["p"] = p.pd();
        j["a"] = p.ad();
        j["b"] = p.bd();
        j["c"] = p.cd();
        j["mode"] = "float";
    }
    return j;
}

namespace {

Rational read_number(const json& j, const char* key) {
    if (!j.contains(key)) throw std::invalid_argument(std::string("params: missing '") + key + "'");
    const auto& v = j.at(key);
    if (v.is_string()) return parse_rational(v.get<std::string>());
    if (v.is_number_integer()) return Rational(v.get<long>());
    if (v.is_number()) return dyadic(v.get<double>());
    throw std::invalid_argument(std::string("params: '") + key + "' must be a string or number");
}

}  // namespace

Params params_from_json(const json& j) {
    Mode mode = Mode::Exact;
    if (j.contains("mode")) {
        const auto m = j.at("mode").get<std::string>();
        if (m == "float")
            mode = Mode::Float;
        else if (m != "exact")
            throw std::invalid_argument("params: mode must be 'exact' or 'float'");
    }
    return validate_params(read_number(j, "p"), read_number(j, "a"), read_number(j, "b"),
                           read_number(j, "c"), mode);
}

json histogram_to_json(const Histogram& h, const Params& params, const SpacingLaw& law, std::uint64_t seed) {
    json j;
    j["params"] = params_to_json(params);
    j["law"] = law.to_string();
    j["prefix"] = h.prefix;
    j["samples"] = h.samples;
    j["seed"] = seed;
    j["aborts"] = h.aborts;
    json bins = json::array();
    for (int n = 1; n <= h.prefix; ++n) {
        auto ci = wilson_ci(h.counts[n], h.samples);
        bins.push_back({{"n", n}, {"count", h.counts[n]}, {"ci_lo", ci.lo}, {"ci_hi", ci.hi}});
    }
    auto ci = wilson_ci(h.beyond, h.samples);
    bins.push_back({{"n", "beyond"}, {"count", h.beyond}, {"ci_lo", ci.lo}, {"ci_hi", ci.hi}});
    j["bins"] = bins;
    return j;
}

json comparison_to_json(const RecursionComparison& c) {
    json rows = json::array();
    for (int n = 1; n <= c.n_max; ++n)
        rows.push_back({{"n", n}, {"p_hat", c.p_hat[n]}, {"p", c.p_ref[n]}, {"se", c.se[n]}, {"z", c.z[n]}});
    return {{"threshold", c.threshold}, {"rows", rows}, {"verdict", c.pass ? "PASS" : "FAIL"}};
}

json report_to_json(const VerificationReport& r) {
    json j;
    j["schema"] = "tcba-report/1";
    j["params"] = params_to_json(r.params);
    j["n_max"] = r.n_max;
    j["prefix"] = r.options.prefix;
    j["samples_per_law"] = r.samples;
    j["seed"] = r.seed;
    j["alpha"] = r.options.alpha;
    j["z_threshold"] = r.options.z_threshold;
    json laws = json::array();
    for (const auto& run : r.runs) laws.push_back(run.law.to_string());
    j["laws"] = laws;
    json rec = json::array();
    for (int n = 1; n <= r.n_max; ++n) rec.push_back({{"n", n}, {"p", r.recursion_pn[n]}});
    j["recursion"] = rec;
    json runs = json::array();
    for (const auto& run : r.runs) {
        json x;
        x["law"] = run.law.to_string();
        x["seed"] = run.seed;
        x["perturbed"] = run.perturbed;
        if (run.perturbed) x["simulated_params"] = params_to_json(run.params);
        x["histogram"] = histogram_to_json(run.histogram, run.params, run.law, run.seed);
        x["vs_recursion"] = comparison_to_json(run.vs_recursion);
        runs.push_back(x);
    }
    j["runs"] = runs;
    json pairs = json::array();
    for (const auto& t : r.pairs) {
        pairs.push_back({{"laws", {r.runs[t.i].law.to_string(), r.runs[t.j].law.to_string()}},
                         {"chi2", t.chi.statistic},
                         {"df", t.chi.df},
                         {"p_value", t.chi.p_value},
                         {"merged_into_beyond", t.chi.merged},
                         {"reject", t.reject}});
    }
    j["pairwise_chi_square"] = pairs;
    j["multiple_testing"] = {{"tests", r.pairs.size()},
                             {"note", "each pairwise test is run at alpha; no correction applied"}};
    j["verdicts"] = {{"universality", r.universality_pass ? "PASS" : "FAIL"},
                     {"recursion", r.recursion_pass ? "PASS" : "FAIL"},
                     {"overall", r.pass ? "PASS" : "FAIL"}};
    return j;
}

json rao_blackwell_to_json(const RaoBlackwell& rb) {
    json rows = json::array();
    for (int k = 1; k <= rb.n; ++k)
        rows.push_back({{"n", k}, {"mean", rb.mean[k]}, {"se", rb.se[k]}, {"constant", static_cast<bool>(rb.constant[k])}});
    rows.push_back({{"n", "beyond"}, {"mean", rb.beyond_mean}, {"se", rb.beyond_se}});
    return {{"n", rb.n}, {"spacing_samples", rb.samples}, {"seed", rb.seed}, {"resampled", rb.resampled}, {"pmf", rows}};
}

json reversal_to_json(const ReversalReport& r) {
    return {{"n", r.n}, {"leaves", r.leaves}, {"matched", r.matched}, {"mismatches", r.mismatches}};
}

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

template <class S>
void write_table_csv(std::ostream& os, const RecursionTable<S>& t) {
    constexpr bool exact = std::is_same_v<S, Rational>;
    os << "n,";
    if (exact) os << "p_num,p_den,";
    os << "p_float,alpha,beta_dot,beta_hat,gamma,gamma_hat,gamma_cev,delta_bar,delta,delta_hat\n";
    for (int n = 1; n <= t.computed; ++n) {
        os << n << ',';
        if constexpr (exact) os << t.p[n].get_num().get_str() << ',' << t.p[n].get_den().get_str() << ',';
        for (const auto* v : {&t.p, &t.alpha, &t.beta_dot, &t.beta_hat, &t.gamma, &t.gamma_hat,
                              &t.gamma_cev, &t.delta_bar, &t.delta, &t.delta_hat}) {
            os << format_double(to_double((*v)[n]));
            os << (v == &t.delta_hat ? '\n' : ',');
        }
    }
}

template void write_table_csv<double>(std::ostream&, const RecursionTable<double>&);
template void write_table_csv<Rational>(std::ostream&, const RecursionTable<Rational>&);

}  // namespace tcba
