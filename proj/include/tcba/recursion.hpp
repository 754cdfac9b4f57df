#pragma once

#include "tcba/model.hpp"

#include <stdexcept>
#include <vector>

namespace tcba {

enum class Strategy { Naive, Incremental };

// Factor in the second term of gamma_hat: p_{l-k} (as displayed with the
// equation) or p_{l-k+1} (as worded in the argument that follows it).
enum class GammaHatVariant { Displayed, ProofText };

// Published: every coefficient as printed.
// Amended: beta terms use (1-c)/2 and the c/2 term inside delta_bar carries
// the missing factor p. See README for why neither is exact when a or c > 0.
enum class FormulaSet { Published, Amended };

struct RecursionOptions {
    Strategy strategy = Strategy::Incremental;
    GammaHatVariant gamma_hat = GammaHatVariant::Displayed;
    FormulaSet formulas = FormulaSet::Published;
    // Exact mode throws on a negative entry unless this is set; the entry is
    // then kept and its index recorded.
    bool allow_negative = false;
};

class RecursionError : public std::runtime_error {
public:
    enum class Code { IndexOrder, NegativeProbability, ExceedsOne, BadArgument };
    RecursionError(Code code, int n, const std::string& what)
        : std::runtime_error(what), code(code), n(n) {}
    Code code;
    int n;
};

template <class S>
struct RecursionTable {
    int N = 0;
    Params params;
    RecursionOptions options;
    std::vector<S> alpha, beta_dot, beta_hat, gamma, gamma_hat, gamma_cev;
    std::vector<S> delta_bar, delta, delta_hat, p;
    std::vector<int> negative_at;  // indices n where some entry went below 0
    int computed = 0;              // highest n filled in
};

template <class S>
struct LocalTerms {
    S alpha, beta_dot, gamma, gamma_hat;
};

template <class S>
struct DoubleTerms {
    S beta_hat, delta_bar_double;
};

template <class S>
struct DeltaFamily {
    S delta_bar, delta, delta_hat, gamma_cev;
};

// Fills one index at a time, in the fixed order local -> double -> delta ->
// assemble. Calling a step out of order throws IndexOrder.
template <class S>
class RecursionBuilder {
public:
    RecursionBuilder(const Params& params, int N, RecursionOptions options = {});

    LocalTerms<S> step_local_terms(int n);
    DoubleTerms<S> step_double_terms(int n);
    DeltaFamily<S> step_delta_family(int n);
    S assemble_pn(int n);

    void step(int n);
    const RecursionTable<S>& table() const { return t_; }
    RecursionTable<S> release() { return std::move(t_); }

private:
    enum class Stage { Local, Double, Delta, Assemble };
    void expect(int n, Stage stage);
    void check_nonneg(const S& x, int n, const char* name);
    S conv_p(const std::vector<S>& u, int n, int lo) const;

    RecursionTable<S> t_;
    S p_, q_, a_, b_, c_, beta_coef_, dbar_pfactor_;
    int next_ = 2;
    Stage stage_ = Stage::Local;
    S running_sum_;
    // Incremental inner convolutions, indexed by l:
    // w[l] = sum_{1<k<l} delta_hat[l-k+1] p[k-1]
    // v[l] = sum_{1<k<l} delta_hat[k] p[l-k+shift]
    std::vector<S> w_, v_;
    S pending_double_;
};

template <class S>
RecursionTable<S> compute_table(const Params& params, int N, RecursionOptions options = {});

template <class S>
struct SeriesEval {
    S t;
    int N;
    S f, A, B, C, Dbar, D, Dhat;
    S residual;  // |f - (p0 + p1 t + A + B + C)|
};

template <class S>
SeriesEval<S> eval_f_partial(const RecursionTable<S>& table, const S& t);

template <class S>
struct QBound {
    S lower;
    bool certified;  // every summand nonnegative, so the partial sum is a lower bound
};

template <class S>
QBound<S> estimate_q(const RecursionTable<S>& table);

struct PhasePoint {
    Rational p;
    double q_lower;
    bool certified;
};

std::vector<PhasePoint> scan_phase(const Rational& a, const Rational& b, const Rational& c,
                                   const std::vector<Rational>& grid, int N, Mode mode,
                                   RecursionOptions options = {});

}  // namespace tcba
