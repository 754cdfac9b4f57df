#include "tcba/recursion.hpp"

#include <omp.h>

#include <string>

namespace tcba {

namespace {

template <class S>
bool is_negative(const S& x) {
    return x < 0;
}

template <class S>
S abs_value(const S& x) {
    return x < 0 ? S(-x) : x;
}

}  // namespace

template <class S>
RecursionBuilder<S>::RecursionBuilder(const Params& params, int N, RecursionOptions options) {
    if (N < 1) throw RecursionError(RecursionError::Code::BadArgument, N, "N must be >= 1");
    t_.N = N;
    t_.params = params;
    t_.options = options;
    const S zero = scalar<S>(0);
    for (auto* v : {&t_.alpha, &t_.beta_dot, &t_.beta_hat, &t_.gamma, &t_.gamma_hat,
                    &t_.gamma_cev, &t_.delta_bar, &t_.delta, &t_.delta_hat, &t_.p})
        v->assign(N + 1, zero);
    w_.assign(N + 1, zero);
    v_.assign(N + 1, zero);

    p_ = from_rational<S>(params.p);
    a_ = from_rational<S>(params.a);
    b_ = from_rational<S>(params.b);
    c_ = from_rational<S>(params.c);
    q_ = (scalar<S>(1) - p_) * scalar<S>(1, 2);
    if (options.formulas == FormulaSet::Published) {
        beta_coef_ = (scalar<S>(1) - (a_ + b_)) * scalar<S>(1, 2);
        dbar_pfactor_ = scalar<S>(1);
    } else {
        beta_coef_ = (scalar<S>(1) - c_) * scalar<S>(1, 2);
        dbar_pfactor_ = p_;
    }
    t_.p[1] = q_;
    t_.computed = 1;
    running_sum_ = q_;
    pending_double_ = zero;
}

template <class S>
void RecursionBuilder<S>::expect(int n, Stage stage) {
    if (n != next_ || stage != stage_ || n > t_.N)
        throw RecursionError(RecursionError::Code::IndexOrder, n,
                             "recursion step for n=" + std::to_string(n) +
                                 " called out of order (next index " + std::to_string(next_) +
                                 ")");
}

template <class S>
void RecursionBuilder<S>::check_nonneg(const S& x, int n, const char* name) {
    if (!is_negative(x)) return;
    if (t_.negative_at.empty() || t_.negative_at.back() != n) t_.negative_at.push_back(n);
    if (std::is_same_v<S, Rational> && !t_.options.allow_negative)
        throw RecursionError(RecursionError::Code::NegativeProbability, n,
                             std::string(name) + " is negative at n=" + std::to_string(n));
}

// sum_{lo<=k<n} u[k] p[n-k]
template <class S>
S RecursionBuilder<S>::conv_p(const std::vector<S>& u, int n, int lo) const {
    S s = scalar<S>(0);
    for (int k = lo; k < n; ++k) s += u[k] * t_.p[n - k];
    return s;
}

template <class S>
LocalTerms<S> RecursionBuilder<S>::step_local_terms(int n) {
    expect(n, Stage::Local);
    auto& t = t_;
    const int shift = t.options.gamma_hat == GammaHatVariant::Displayed ? 0 : 1;

    if (t.options.strategy == Strategy::Incremental) {
        S w = scalar<S>(0), v = scalar<S>(0);
        for (int k = 2; k < n; ++k) {
            w += t.delta_hat[n - k + 1] * t.p[k - 1];
            v += t.delta_hat[k] * t.p[n - k + shift];
        }
        w_[n] = w;
        v_[n] = v;
    }

    S s1 = scalar<S>(0);
    for (int k = 2; k < n; ++k) s1 += t.p[k - 1] * t.p[n - k];

    LocalTerms<S> out;
    out.alpha = c_ * p_ * t.p[n - 1] + (scalar<S>(1) - c_) * p_ * s1;
    out.beta_dot = beta_coef_ * p_ * s1;
    out.gamma = conv_p(t.delta, n, 2);

    S second = scalar<S>(0);
    if (t.options.strategy == Strategy::Incremental) {
        for (int l = 3; l < n; ++l) second += v_[l] * t.p[n - l];
    } else {
        for (int k = 2; k < n; ++k)
            for (int l = k + 1; l < n; ++l)
                second += t.delta_hat[k] * t.p[l - k + shift] * t.p[n - l];
    }
    out.gamma_hat = c_ * conv_p(t.delta_hat, n, 2) + (scalar<S>(1) - c_) * second;

    t.alpha[n] = out.alpha;
    t.beta_dot[n] = out.beta_dot;
    t.gamma[n] = out.gamma;
    t.gamma_hat[n] = out.gamma_hat;
    check_nonneg(out.alpha, n, "alpha");
    check_nonneg(out.beta_dot, n, "beta_dot");
    check_nonneg(out.gamma, n, "gamma");
    check_nonneg(out.gamma_hat, n, "gamma_hat");
    stage_ = Stage::Double;
    return out;
}

template <class S>
DoubleTerms<S> RecursionBuilder<S>::step_double_terms(int n) {
    expect(n, Stage::Double);
    auto& t = t_;
    S ds = scalar<S>(0);
    if (t.options.strategy == Strategy::Incremental) {
        for (int l = 3; l < n; ++l) ds += w_[l] * t.p[n - l];
    } else {
        for (int k = 2; k < n; ++k)
            for (int l = k + 1; l < n; ++l)
                ds += t.delta_hat[l - k + 1] * t.p[k - 1] * t.p[n - l];
    }
    DoubleTerms<S> out;
    out.beta_hat = beta_coef_ * ds;
    out.delta_bar_double = scalar<S>(1, 2) * (scalar<S>(1) - c_) * c_ * ds;
    t.beta_hat[n] = out.beta_hat;
    pending_double_ = out.delta_bar_double;
    check_nonneg(out.beta_hat, n, "beta_hat");
    stage_ = Stage::Delta;
    return out;
}

template <class S>
DeltaFamily<S> RecursionBuilder<S>::step_delta_family(int n) {
    expect(n, Stage::Delta);
    auto& t = t_;
    S bracket = scalar<S>(0);
    const S half_c = scalar<S>(1, 2) * c_ * dbar_pfactor_;
    for (int k = 2; k < n; ++k)
        bracket += (t.beta_dot[k] + t.beta_hat[k] + half_c * t.p[k - 1]) * t.p[n - k];

    DeltaFamily<S> out;
    out.delta_bar = q_ * t.p[n - 1] - (scalar<S>(1) - c_) * bracket - pending_double_;
    out.delta = (scalar<S>(1) - (a_ + b_)) * out.delta_bar;
    out.delta_hat = b_ * out.delta_bar;
    out.gamma_cev = a_ * scalar<S>(1, 2) * out.delta_bar;
    t.delta_bar[n] = out.delta_bar;
    t.delta[n] = out.delta;
    t.delta_hat[n] = out.delta_hat;
    t.gamma_cev[n] = out.gamma_cev;
    check_nonneg(out.delta_bar, n, "delta_bar");
    stage_ = Stage::Assemble;
    return out;
}

template <class S>
S RecursionBuilder<S>::assemble_pn(int n) {
    expect(n, Stage::Assemble);
    auto& t = t_;
    S pn = t.alpha[n] + t.beta_dot[n] + t.beta_hat[n] + t.gamma[n] + t.gamma_hat[n] +
           t.gamma_cev[n];
    t.p[n] = pn;
    check_nonneg(pn, n, "p");
    running_sum_ += pn;
    if (std::is_same_v<S, Rational> && running_sum_ > 1 && !t.options.allow_negative)
        throw RecursionError(RecursionError::Code::ExceedsOne, n,
                             "partial sum of p exceeds 1 at n=" + std::to_string(n));
    t.computed = n;
    ++next_;
    stage_ = Stage::Local;
    return pn;
}

template <class S>
void RecursionBuilder<S>::step(int n) {
    step_local_terms(n);
    step_double_terms(n);
    step_delta_family(n);
    assemble_pn(n);
}

template <class S>
RecursionTable<S> compute_table(const Params& params, int N, RecursionOptions options) {
    RecursionBuilder<S> builder(params, N, options);
    for (int n = 2; n <= N; ++n) builder.step(n);
    return builder.release();
}

template <class S>
SeriesEval<S> eval_f_partial(const RecursionTable<S>& table, const S& t) {
    if (t < 0 || t > 1)
        throw RecursionError(RecursionError::Code::BadArgument, 0, "t must lie in [0,1]");
    SeriesEval<S> e;
    e.t = t;
    e.N = table.computed;
    const S zero = scalar<S>(0);
    e.f = e.A = e.B = e.C = e.Dbar = e.D = e.Dhat = zero;
    S tn = scalar<S>(1);
    S p1t = zero;
    for (int n = 0; n <= table.computed; ++n) {
        e.f += table.p[n] * tn;
        e.A += table.alpha[n] * tn;
        e.B += (table.beta_dot[n] + table.beta_hat[n]) * tn;
        e.C += (table.gamma[n] + table.gamma_hat[n] + table.gamma_cev[n]) * tn;
        e.Dbar += table.delta_bar[n] * tn;
        e.D += table.delta[n] * tn;
        e.Dhat += table.delta_hat[n] * tn;
        if (n == 1) p1t = table.p[1] * tn;
        tn *= t;
    }
    e.residual = abs_value(S(e.f - (table.p[0] + p1t + e.A + e.B + e.C)));
    return e;
}

template <class S>
QBound<S> estimate_q(const RecursionTable<S>& table) {
    QBound<S> out{scalar<S>(0), table.negative_at.empty()};
    for (int n = 1; n <= table.computed; ++n) out.lower += table.p[n];
    return out;
}

std::vector<PhasePoint> scan_phase(const Rational& a, const Rational& b, const Rational& c,
                                   const std::vector<Rational>& grid, int N, Mode mode,
                                   RecursionOptions options) {
    std::vector<Params> params;
    params.reserve(grid.size());
    for (const auto& p : grid) params.push_back(validate_params(p, a, b, c, mode));
    std::vector<PhasePoint> out(grid.size());
    const long m = static_cast<long>(grid.size());
    std::string err;
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < m; ++i) {
        try {
            if (mode == Mode::Exact) {
                auto tab = compute_table<Rational>(params[i], N, options);
                auto q = estimate_q(tab);
                out[i] = {grid[i], q.lower.get_d(), q.certified};
            } else {
                auto tab = compute_table<double>(params[i], N, options);
                auto q = estimate_q(tab);
                out[i] = {grid[i], q.lower, q.certified};
            }
        } catch (const std::exception& e) {
#pragma omp critical
            if (err.empty()) err = e.what();
        }
    }
    if (!err.empty()) throw std::runtime_error(err);
    return out;
}

template class RecursionBuilder<double>;
template class RecursionBuilder<Rational>;
template RecursionTable<double> compute_table<double>(const Params&, int, RecursionOptions);
template RecursionTable<Rational> compute_table<Rational>(const Params&, int, RecursionOptions);
template SeriesEval<double> eval_f_partial<double>(const RecursionTable<double>&, const double&);
template SeriesEval<Rational> eval_f_partial<Rational>(const RecursionTable<Rational>&,
                                                       const Rational&);
template QBound<double> estimate_q<double>(const RecursionTable<double>&);
template QBound<Rational> estimate_q<Rational>(const RecursionTable<Rational>&);

}  // namespace tcba
