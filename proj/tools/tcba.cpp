#include "tcba/harness.hpp"
#include "tcba/io.hpp"
#include "tcba/oracle.hpp"
#include "tcba/recursion.hpp"
#include "tcba/simulator.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

using namespace tcba;

namespace {

constexpr std::uint64_t kDefaultSeed = 20240607;

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct VerifyFailed {};

// Every field is optional so that a config file and flags can be layered;
// flags win.
struct RunConfig {
    std::optional<std::string> p, a, b, c, mode, strategy, gamma_hat, formulas, seed, grid, oracle_mode;
    std::optional<bool> allow_negative, perturb;
    std::optional<int> n, prefix, n_max, vectors;
    std::optional<std::uint64_t> samples;
    std::optional<double> alpha;
    std::optional<std::vector<std::string>> laws, t, positions;
    std::optional<int> threads;
    std::optional<std::string> out;
};

template <class T>
void take(std::optional<T>& dst, const json& j, const char* key) {
    if (!j.contains(key)) return;
    try {
        dst = j.at(key).get<T>();
    } catch (const std::exception&) {
        throw UsageError(std::string("config: field '") + key + "' has the wrong type");
    }
}

std::string number_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return format_double(v.get<double>());
    throw UsageError("config: parameter values must be strings or numbers");
}

RunConfig load_config(const std::string& path, const std::string& command) {
    std::ifstream in(path);
    if (!in) throw UsageError("--config: cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const std::exception& e) {
        throw UsageError("--config: " + std::string(e.what()));
    }
    if (!j.is_object()) throw UsageError("--config: expected a JSON object");
    if (j.value("schema", std::string()) != "tcba-config/1")
        throw UsageError("--config: schema must be \"tcba-config/1\"");
    if (j.contains("command") && j["command"].get<std::string>() != command)
        throw UsageError("--config: file is for command '" + j["command"].get<std::string>() + "'");
    RunConfig rc;
    if (j.contains("params")) {
        const auto& pj = j["params"];
        for (auto [key, dst] : {std::pair{"p", &rc.p}, {"a", &rc.a}, {"b", &rc.b}, {"c", &rc.c}})
            if (pj.contains(key)) *dst = number_string(pj[key]);
        if (pj.contains("mode")) rc.mode = pj["mode"].get<std::string>();
    }
    take(rc.mode, j, "mode");
    take(rc.strategy, j, "strategy");
    take(rc.gamma_hat, j, "gamma_hat");
    take(rc.formulas, j, "formulas");
    take(rc.grid, j, "grid");
    take(rc.oracle_mode, j, "oracle_mode");
    take(rc.allow_negative, j, "allow_negative");
    take(rc.perturb, j, "perturb");
    take(rc.n, j, "n");
    take(rc.prefix, j, "prefix");
    take(rc.n_max, j, "n_max");
    take(rc.vectors, j, "vectors");
    take(rc.samples, j, "samples");
    take(rc.alpha, j, "alpha");
    take(rc.laws, j, "laws");
    take(rc.positions, j, "positions");
    take(rc.threads, j, "threads");
    take(rc.out, j, "out");
    if (j.contains("seed")) rc.seed = number_string(j["seed"]);
    if (j.contains("t")) {
        if (j["t"].is_array()) {
            std::vector<std::string> ts;
            for (const auto& v : j["t"]) ts.push_back(number_string(v));
            rc.t = ts;
        } else {
            rc.t = std::vector<std::string>{number_string(j["t"])};
        }
    }
    return rc;
}

template <class T>
void overlay(std::optional<T>& base, const std::optional<T>& top) {
    if (top) base = top;
}

RunConfig merge(RunConfig base, const RunConfig& f) {
    overlay(base.p, f.p);
    overlay(base.a, f.a);
    overlay(base.b, f.b);
    overlay(base.c, f.c);
    overlay(base.mode, f.mode);
    overlay(base.strategy, f.strategy);
    overlay(base.gamma_hat, f.gamma_hat);
    overlay(base.formulas, f.formulas);
    overlay(base.seed, f.seed);
    overlay(base.grid, f.grid);
    overlay(base.oracle_mode, f.oracle_mode);
    overlay(base.allow_negative, f.allow_negative);
    overlay(base.perturb, f.perturb);
    overlay(base.n, f.n);
    overlay(base.prefix, f.prefix);
    overlay(base.n_max, f.n_max);
    overlay(base.vectors, f.vectors);
    overlay(base.samples, f.samples);
    overlay(base.alpha, f.alpha);
    overlay(base.laws, f.laws);
    overlay(base.t, f.t);
    overlay(base.positions, f.positions);
    overlay(base.threads, f.threads);
    overlay(base.out, f.out);
    return base;
}

// Flag values as typed, held separately so "given" can be told from "default".
struct Flags {
    std::string config;
    std::string p, a, b, c, strategy, gamma_hat, formulas, seed, grid, oracle_mode, out;
    bool exact = false, flt = false, allow_negative = false, perturb = false;
    int n = 0, prefix = 0, n_max = 0, vectors = 0, threads = 0;
    std::uint64_t samples = 0;
    double alpha = 0;
    std::vector<std::string> laws, t, positions;
    std::map<std::string, CLI::Option*> opt;

    bool given(const std::string& name) const {
        auto it = opt.find(name);
        return it != opt.end() && it->second->count() > 0;
    }

    RunConfig to_config() const {
        RunConfig rc;
        auto s = [&](const char* name, std::optional<std::string>& dst, const std::string& v) {
            if (given(name)) dst = v;
        };
        s("--p", rc.p, p);
        s("--a", rc.a, a);
        s("--b", rc.b, b);
        s("--c", rc.c, c);
        s("--strategy", rc.strategy, strategy);
        s("--gamma-hat", rc.gamma_hat, gamma_hat);
        s("--formulas", rc.formulas, formulas);
        s("--seed", rc.seed, seed);
        s("--grid", rc.grid, grid);
        s("--mode", rc.oracle_mode, oracle_mode);
        s("--out", rc.out, out);
        if (given("--exact")) rc.mode = "exact";
        if (given("--float")) rc.mode = "float";
        if (given("--allow-negative")) rc.allow_negative = allow_negative;
        if (given("--perturb")) rc.perturb = perturb;
        if (given("--n")) rc.n = n;
        if (given("--prefix")) rc.prefix = prefix;
        if (given("--n-max")) rc.n_max = n_max;
        if (given("--vectors")) rc.vectors = vectors;
        if (given("--threads")) rc.threads = threads;
        if (given("--samples")) rc.samples = samples;
        if (given("--alpha")) rc.alpha = alpha;
        if (given("--spacing")) rc.laws = laws;
        if (given("--t")) rc.t = t;
        if (given("--positions")) rc.positions = positions;
        return rc;
    }
};

void add_params(CLI::App* sub, Flags& f) {
    f.opt["--p"] = sub->add_option("--p", f.p, "blockade weight p, e.g. 1/4 or 0.3");
    f.opt["--a"] = sub->add_option("--a", f.a, "survivor weight a");
    f.opt["--b"] = sub->add_option("--b", f.b, "blockade-generation weight b");
    f.opt["--c"] = sub->add_option("--c", f.c, "pass-through weight c");
    f.opt["--exact"] = sub->add_flag("--exact", f.exact, "exact rational arithmetic");
    f.opt["--float"] = sub->add_flag("--float", f.flt, "double precision arithmetic");
    f.opt["--exact"]->excludes(f.opt["--float"]);
}

void add_common(CLI::App* sub, Flags& f) {
    f.opt["--config"] = sub->add_option("--config", f.config, "JSON config (schema tcba-config/1)");
    f.opt["--out"] = sub->add_option("--out", f.out, "output path, '-' for stdout");
    f.opt["--threads"] = sub->add_option("--threads", f.threads, "worker cap (default: TCBA_THREADS)");
    f.opt["--seed"] = sub->add_option("--seed", f.seed, "master seed, or 'random'");
}

void add_recursion_opts(CLI::App* sub, Flags& f) {
    f.opt["--strategy"] = sub->add_option("--strategy", f.strategy, "naive | incremental");
    f.opt["--gamma-hat"] = sub->add_option("--gamma-hat", f.gamma_hat, "displayed | proof (diagnostic)");
    f.opt["--formulas"] = sub->add_option("--formulas", f.formulas, "published | amended");
    f.opt["--allow-negative"] = sub->add_flag("--allow-negative", f.allow_negative,
                                              "keep negative entries instead of failing");
}

Params resolve_params(const RunConfig& rc, Mode default_mode) {
    for (auto [name, v] : {std::pair{"p", &rc.p}, {"a", &rc.a}, {"b", &rc.b}, {"c", &rc.c}})
        if (!*v) throw UsageError(std::string("--") + name + " is required");
    Mode mode = default_mode;
    if (rc.mode) {
        if (*rc.mode == "exact")
            mode = Mode::Exact;
        else if (*rc.mode == "float")
            mode = Mode::Float;
        else
            throw UsageError("mode must be 'exact' or 'float'");
    }
    Rational vals[4];
    const char* names[4] = {"p", "a", "b", "c"};
    const std::optional<std::string>* src[4] = {&rc.p, &rc.a, &rc.b, &rc.c};
    for (int i = 0; i < 4; ++i) {
        try {
            vals[i] = parse_rational(**src[i]);
        } catch (const std::exception& e) {
            throw UsageError(std::string("--") + names[i] + ": " + e.what());
        }
    }
    try {
        return validate_params(vals[0], vals[1], vals[2], vals[3], mode);
    } catch (const ParamError& e) {
        std::string flag = e.field == "a+b" ? "--a/--b" : "--" + e.field;
        throw UsageError(flag + ": " + e.what());
    }
}

RecursionOptions resolve_recursion(const RunConfig& rc) {
    RecursionOptions o;
    const std::string s = rc.strategy.value_or("incremental");
    if (s == "naive")
        o.strategy = Strategy::Naive;
    else if (s != "incremental")
        throw UsageError("--strategy must be 'naive' or 'incremental'");
    const std::string g = rc.gamma_hat.value_or("displayed");
    if (g == "proof")
        o.gamma_hat = GammaHatVariant::ProofText;
    else if (g != "displayed")
        throw UsageError("--gamma-hat must be 'displayed' or 'proof'");
    const std::string f = rc.formulas.value_or("published");
    if (f == "amended")
        o.formulas = FormulaSet::Amended;
    else if (f != "published")
        throw UsageError("--formulas must be 'published' or 'amended'");
    o.allow_negative = rc.allow_negative.value_or(false);
    return o;
}

std::uint64_t resolve_seed(RunConfig& rc) {
    if (!rc.seed) {
        rc.seed = std::to_string(kDefaultSeed);
        return kDefaultSeed;
    }
    if (*rc.seed == "random") {
        std::random_device rd;
        const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
        rc.seed = std::to_string(s);
        return s;
    }
    try {
        std::size_t used = 0;
        const auto s = std::stoull(*rc.seed, &used);
        if (used != rc.seed->size()) throw std::invalid_argument("trailing characters");
        return s;
    } catch (const std::exception&) {
        throw UsageError("--seed must be a non-negative integer or 'random'");
    }
}

std::vector<SpacingLaw> resolve_laws(const RunConfig& rc, std::vector<std::string> dflt) {
    std::vector<SpacingLaw> laws;
    for (const auto& s : rc.laws.value_or(dflt)) {
        try {
            laws.push_back(SpacingLaw::parse(s));
        } catch (const std::exception& e) {
            throw UsageError(std::string("--spacing: ") + e.what());
        }
    }
    if (laws.empty()) throw UsageError("--spacing: at least one law is required");
    return laws;
}

int positive(const std::optional<int>& v, int dflt, const char* flag) {
    const int x = v.value_or(dflt);
    if (x < 1) throw UsageError(std::string(flag) + " must be >= 1");
    return x;
}

// The echoed config holds everything that determines the result; thread
// count and output path do not, and are left out so outputs stay
// byte-identical across worker counts.
json echo(const std::string& command, const RunConfig& rc, const Params* params) {
    json j;
    j["schema"] = "tcba-config/1";
    j["command"] = command;
    if (params) j["params"] = params_to_json(*params);
    auto put = [&](const char* k, const auto& v) {
        if (v) j[k] = *v;
    };
    put("strategy", rc.strategy);
    put("gamma_hat", rc.gamma_hat);
    put("formulas", rc.formulas);
    put("allow_negative", rc.allow_negative);
    put("n", rc.n);
    put("prefix", rc.prefix);
    put("n_max", rc.n_max);
    put("samples", rc.samples);
    put("laws", rc.laws);
    put("seed", rc.seed);
    put("grid", rc.grid);
    put("t", rc.t);
    put("oracle_mode", rc.oracle_mode);
    put("positions", rc.positions);
    put("vectors", rc.vectors);
    put("alpha", rc.alpha);
    put("perturb", rc.perturb);
    return j;
}

class Output {
public:
    explicit Output(const std::optional<std::string>& path) {
        if (path && *path != "-") {
            file_.open(*path);
            if (!file_) throw std::runtime_error("cannot open output '" + *path + "'");
            os_ = &file_;
        }
    }
    std::ostream& os() { return *os_; }

private:
    std::ofstream file_;
    std::ostream* os_ = &std::cout;
};

void log_stage(const std::string& msg) { std::cerr << "[tcba] " << msg << "\n"; }

void apply_threads(const RunConfig& rc) {
    int threads = 0;
    if (rc.threads) {
        threads = *rc.threads;
    } else if (const char* env = std::getenv("TCBA_THREADS")) {
        try {
            threads = std::stoi(env);
        } catch (const std::exception&) {
            throw UsageError("TCBA_THREADS must be an integer");
        }
    }
    if (threads < 0) throw UsageError("--threads must be >= 0");
    if (threads > 0) omp_set_num_threads(threads);
}

void write_csv_header_comment(std::ostream& os, const json& cfg) { os << "# " << cfg.dump() << "\n"; }

int cmd_recur(RunConfig rc) {
    const Params params = resolve_params(rc, Mode::Float);
    const auto opts = resolve_recursion(rc);
    const int N = positive(rc.n, 20, "--n");
    rc.n = N;
    Output out(rc.out);
    log_stage("recur: N=" + std::to_string(N));
    write_csv_header_comment(out.os(), echo("recur", rc, &params));
    if (params.mode == Mode::Exact)
        write_table_csv(out.os(), compute_table<Rational>(params, N, opts));
    else
        write_table_csv(out.os(), compute_table<double>(params, N, opts));
    return 0;
}

int cmd_sim(RunConfig rc) {
    const Params params = resolve_params(rc, Mode::Float);
    const auto laws = resolve_laws(rc, {"exp:1"});
    if (laws.size() != 1) throw UsageError("--spacing: sim takes exactly one law");
    rc.laws = std::vector<std::string>{laws[0].to_string()};
    const int prefix = positive(rc.prefix, 64, "--prefix");
    rc.prefix = prefix;
    const std::uint64_t samples = rc.samples.value_or(100000);
    if (samples < 1) throw UsageError("--samples must be >= 1");
    rc.samples = samples;
    const std::uint64_t seed = resolve_seed(rc);
    Output out(rc.out);
    log_stage("sim: " + std::to_string(samples) + " runs, prefix " + std::to_string(prefix));
    const auto h = estimate_pn(params, laws[0], prefix, samples, seed);
    json j = histogram_to_json(h, params, laws[0], seed);
    j["config"] = echo("sim", rc, &params);
    out.os() << j.dump(2) << "\n";
    return 0;
}

std::vector<Rational> parse_positions(const std::vector<std::string>& xs) {
    std::vector<Rational> out;
    for (const auto& s : xs) {
        try {
            out.push_back(parse_rational(s));
        } catch (const std::exception& e) {
            throw UsageError(std::string("--positions: ") + e.what());
        }
    }
    return out;
}

int cmd_oracle(RunConfig rc) {
    const Params params = resolve_params(rc, Mode::Exact);
    const std::string mode = rc.oracle_mode.value_or("estimate");
    rc.oracle_mode = mode;
    Output out(rc.out);
    json j;
    if (mode == "estimate") {
        const auto laws = resolve_laws(rc, {"exp:1"});
        if (laws.size() != 1) throw UsageError("--spacing: oracle takes exactly one law");
        rc.laws = std::vector<std::string>{laws[0].to_string()};
        const int n = positive(rc.n, 5, "--n");
        if (n > kOracleMaxN) throw UsageError("--n must be <= 8 for the oracle");
        rc.n = n;
        const std::uint64_t samples = rc.samples.value_or(10000);
        rc.samples = samples;
        const std::uint64_t seed = resolve_seed(rc);
        log_stage("oracle: Rao-Blackwell over " + std::to_string(samples) + " spacing vectors");
        j["estimate"] = rao_blackwell_to_json(rao_blackwell_estimate(params, laws[0], n, samples, seed));
    } else if (mode == "reversal") {
        json reports = json::array();
        if (rc.positions) {
            reports.push_back(reversal_to_json(check_reversal(params, parse_positions(*rc.positions))));
        } else {
            const auto laws = resolve_laws(rc, {"exp:1"});
            rc.laws = std::vector<std::string>{laws[0].to_string()};
            const int n = positive(rc.n, 5, "--n");
            if (n > 6) throw UsageError("--n must be <= 6 for the reversal check");
            rc.n = n;
            const int vectors = positive(rc.vectors, 50, "--vectors");
            rc.vectors = vectors;
            const std::uint64_t seed = resolve_seed(rc);
            const Rational unit = sampled_unit();
            for (int v = 0; v < vectors; ++v) {
                CounterRng rng(derive_key(seed, static_cast<std::uint64_t>(v)));
                std::vector<Rational> xs;
                SimState tmp;
                tmp.unit = unit;
                for (Tick x : sample_positions(laws[0], n, rng)) xs.push_back(tmp.to_rational(x));
                reports.push_back(reversal_to_json(check_reversal(params, xs)));
            }
        }
        std::size_t mism = 0;
        for (const auto& r : reports) mism += r["mismatches"].get<std::size_t>();
        j["reversal"] = reports;
        j["total_mismatches"] = mism;
    } else if (mode == "exact") {
        const int n = positive(rc.n, 5, "--n");
        if (n > 7) throw UsageError("--n must be <= 7 for the hierarchical oracle");
        rc.n = n;
        if (rc.positions) {
            auto pmf = enumerate_conditional<Rational>(params, parse_positions(*rc.positions));
            json rows = json::array();
            for (std::size_t k = 1; k < pmf.mass.size(); ++k)
                rows.push_back({{"n", k}, {"p", format_rational(pmf.mass[k])}});
            rows.push_back({{"n", "beyond"}, {"p", format_rational(pmf.beyond)}});
            j["conditional"] = rows;
        } else {
            auto pmf = hierarchical_pmf(params, n);
            json rows = json::array();
            for (int k = 1; k <= n; ++k)
                rows.push_back({{"n", k}, {"p", format_rational(pmf[k])}, {"p_float", pmf[k].get_d()}});
            j["pmf"] = rows;
        }
    } else {
        throw UsageError("--mode must be 'estimate', 'reversal' or 'exact'");
    }
    json full;
    full["config"] = echo("oracle", rc, &params);
    full.update(j);
    out.os() << full.dump(2) << "\n";
    return 0;
}

int cmd_verify(RunConfig rc) {
    const Params params = resolve_params(rc, Mode::Float);
    const auto laws = resolve_laws(rc, {"exp:1", "uniform:0:1", "pareto:2.5:1"});
    std::vector<std::string> names;
    for (const auto& l : laws) names.push_back(l.to_string());
    rc.laws = names;
    VerifyOptions vo;
    vo.prefix = positive(rc.prefix, 64, "--prefix");
    rc.prefix = vo.prefix;
    vo.alpha = rc.alpha.value_or(0.001);
    rc.alpha = vo.alpha;
    vo.perturb_last = rc.perturb.value_or(false);
    rc.perturb = vo.perturb_last;
    vo.recursion = resolve_recursion(rc);
    const int n_max = positive(rc.n_max, 10, "--n-max");
    rc.n_max = n_max;
    const std::uint64_t samples = rc.samples.value_or(1000000);
    rc.samples = samples;
    const std::uint64_t seed = resolve_seed(rc);
    Output out(rc.out);
    log_stage("verify: " + std::to_string(laws.size()) + " laws x " + std::to_string(samples) + " runs");
    const auto rep = verify_universality(params, laws, n_max, samples, seed, vo);
    json j = report_to_json(rep);
    j["config"] = echo("verify", rc, &params);
    out.os() << j.dump(2) << "\n";
    log_stage(std::string("verify: ") + (rep.pass ? "PASS" : "FAIL"));
    return rep.pass ? 0 : 1;
}

Rational parse_flag_rational(const std::string& s, const char* flag) {
    try {
        return parse_rational(s);
    } catch (const std::exception& e) {
        throw UsageError(std::string(flag) + ": " + e.what());
    }
}

int cmd_genfunc(RunConfig rc) {
    const Params params = resolve_params(rc, Mode::Float);
    const auto opts = resolve_recursion(rc);
    const int N = positive(rc.n, 50, "--n");
    rc.n = N;
    const auto ts = rc.t.value_or(std::vector<std::string>{"1/2", "1"});
    rc.t = ts;
    Output out(rc.out);
    write_csv_header_comment(out.os(), echo("genfunc", rc, &params));
    out.os() << "t,N,f,A,B,C,Dbar,D,Dhat,residual,q_lower,certified\n";
    auto emit = [&](const auto& table, const auto& t) {
        auto e = eval_f_partial(table, t);
        auto q = estimate_q(table);
        out.os() << format_double(to_double(e.t)) << ',' << e.N;
        for (const auto* v : {&e.f, &e.A, &e.B, &e.C, &e.Dbar, &e.D, &e.Dhat, &e.residual})
            out.os() << ',' << format_double(to_double(*v));
        out.os() << ',' << format_double(to_double(q.lower)) << ',' << (q.certified ? 1 : 0) << '\n';
    };
    try {
        if (params.mode == Mode::Exact) {
            const auto table = compute_table<Rational>(params, N, opts);
            for (const auto& s : ts) emit(table, parse_flag_rational(s, "--t"));
        } else {
            const auto table = compute_table<double>(params, N, opts);
            for (const auto& s : ts) emit(table, parse_flag_rational(s, "--t").get_d());
        }
    } catch (const RecursionError& e) {
        if (e.code == RecursionError::Code::BadArgument) throw UsageError(std::string("--t: ") + e.what());
        throw;
    }
    return 0;
}

std::vector<Rational> parse_grid(const std::string& g) {
    std::vector<Rational> out;
    if (g.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(g);
        for (std::string tok; std::getline(ss, tok, ':');) parts.push_back(tok);
        if (parts.size() != 3) throw UsageError("--grid: expected lo:hi:step");
        const Rational lo = parse_flag_rational(parts[0], "--grid"), hi = parse_flag_rational(parts[1], "--grid"),
                       step = parse_flag_rational(parts[2], "--grid");
        if (step <= 0) throw UsageError("--grid: step must be > 0");
        for (Rational x = lo; x <= hi; x += step) out.push_back(x);
    } else {
        std::stringstream ss(g);
        for (std::string tok; std::getline(ss, tok, ',');) out.push_back(parse_flag_rational(tok, "--grid"));
    }
    if (out.empty()) throw UsageError("--grid: empty grid");
    return out;
}

int cmd_phase(RunConfig rc) {
    if (!rc.p) rc.p = "1/2";  // placeholder so validation of a, b, c runs
    const Params base = resolve_params(rc, Mode::Float);
    rc.p.reset();
    const auto opts = resolve_recursion(rc);
    const int N = positive(rc.n, 200, "--n");
    rc.n = N;
    const std::string g = rc.grid.value_or("0.05:0.95:0.05");
    rc.grid = g;
    const auto grid = parse_grid(g);
    for (const auto& p : grid)
        if (p <= 0 || p >= 1) throw UsageError("--grid: every p must lie in (0,1)");
    Output out(rc.out);
    json cfg = echo("phase", rc, nullptr);
    cfg["params"] = {{"a", format_rational(base.a)}, {"b", format_rational(base.b)},
                     {"c", format_rational(base.c)}, {"mode", base.mode == Mode::Exact ? "exact" : "float"}};
    write_csv_header_comment(out.os(), cfg);
    out.os() << "p,q_lower,certified\n";
    for (const auto& pt : scan_phase(base.a, base.b, base.c, grid, N, base.mode, opts))
        out.os() << format_double(pt.p.get_d()) << ',' << format_double(pt.q_lower) << ','
                 << (pt.certified ? 1 : 0) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Three-parameter coalescing ballistic annihilation"};
    app.require_subcommand(1);
    std::map<std::string, Flags> flags;
    std::map<std::string, std::function<int(RunConfig)>> handlers = {
        {"recur", cmd_recur}, {"sim", cmd_sim}, {"oracle", cmd_oracle},
        {"verify", cmd_verify}, {"genfunc", cmd_genfunc}, {"phase", cmd_phase}};
    const std::map<std::string, std::string> help = {
        {"recur", "compute the recursion table (CSV)"},
        {"sim", "Monte Carlo histogram of A (JSON)"},
        {"oracle", "exact enumeration: estimate | reversal | exact (JSON)"},
        {"verify", "spacing-law invariance report (JSON)"},
        {"genfunc", "truncated generating functions and q bound (CSV)"},
        {"phase", "q lower bounds over a grid of p (CSV)"}};
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, _] : handlers) {
        auto* sub = app.add_subcommand(name, help.at(name));
        auto& f = flags[name];
        add_common(sub, f);
        add_params(sub, f);
        if (name == "recur" || name == "genfunc" || name == "phase" || name == "verify") add_recursion_opts(sub, f);
        if (name == "recur" || name == "genfunc" || name == "phase" || name == "oracle")
            f.opt["--n"] = sub->add_option("--n", f.n, "largest index");
        if (name == "sim" || name == "verify" || name == "oracle")
            f.opt["--spacing"] = sub->add_option("--spacing", f.laws, "spacing law(s), e.g. exp:1");
        if (name == "sim" || name == "verify") f.opt["--prefix"] = sub->add_option("--prefix", f.prefix, "particles simulated");
        if (name == "sim" || name == "verify" || name == "oracle")
            f.opt["--samples"] = sub->add_option("--samples", f.samples, "runs (or spacing vectors)");
        if (name == "verify") {
            f.opt["--n-max"] = sub->add_option("--n-max", f.n_max, "bins 1..n-max plus beyond");
            f.opt["--alpha"] = sub->add_option("--alpha", f.alpha, "chi-square level");
            f.opt["--perturb"] = sub->add_flag("--perturb", f.perturb, "negative control on the last law");
        }
        if (name == "oracle") {
            f.opt["--mode"] = sub->add_option("--mode", f.oracle_mode, "estimate | reversal | exact");
            f.opt["--positions"] = sub->add_option("--positions", f.positions, "explicit positions");
            f.opt["--vectors"] = sub->add_option("--vectors", f.vectors, "random spacing vectors");
        }
        if (name == "genfunc") f.opt["--t"] = sub->add_option("--t", f.t, "evaluation points in [0,1]");
        if (name == "phase") f.opt["--grid"] = sub->add_option("--grid", f.grid, "lo:hi:step or a comma list");
        subs[name] = sub;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    for (const auto& [name, sub] : subs) {
        if (!sub->parsed()) continue;
        const Flags& f = flags[name];
        try {
            RunConfig rc;
            if (f.given("--config")) rc = load_config(f.config, name);
            rc = merge(rc, f.to_config());
            apply_threads(rc);
            return handlers[name](rc);
        } catch (const UsageError& e) {
            std::cerr << "tcba " << name << ": " << e.what() << "\n";
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "tcba " << name << ": error: " << e.what() << "\n";
            return 3;
        }
    }
    return 2;
}
