#pragma once

#include "tcba/model.hpp"
#include "tcba/recursion.hpp"
#include "tcba/simulator.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace tcba {

class HarnessError : public std::runtime_error {
public:
    enum class Code { BadLevel, InsufficientSamples, BadArgument };
    HarnessError(Code code, const std::string& what) : std::runtime_error(what), code(code) {}
    Code code;
};

struct Interval {
    double lo, hi;
};

Interval wilson_ci(std::uint64_t successes, std::uint64_t trials, double level = 0.95);

struct RecursionComparison {
    int n_max = 0;
    std::vector<double> p_hat, p_ref, se, z;  // index n = 1..n_max
    double threshold = 4.0;
    bool pass = false;
};

// z_n = (phat_n - p_n) / sqrt(p_n (1 - p_n) / S): the standard error under
// the hypothesis that the table is the true law.
RecursionComparison compare_to_recursion(const Histogram& h, const std::vector<double>& pn, int n_max);

struct ChiSquare {
    double statistic = 0;
    int df = 0;
    double p_value = 1;
    int bins = 0;  // after merging
    std::vector<int> merged;  // indices n folded into "beyond"
};

// Homogeneity of two histograms over bins {1..n_max, beyond}. Bins with an
// expected count below 5 in either row are folded into "beyond".
ChiSquare chi_square_homogeneity(const Histogram& x, const Histogram& y, int n_max);

// Draws a histogram from a given law of A (pmf[n], n = 1..prefix; the rest is
// "beyond") with one categorical draw per sample.
Histogram sample_from_pmf(const std::vector<double>& pmf, int prefix, std::uint64_t samples,
                          std::uint64_t seed);

struct LawRun {
    SpacingLaw law;
    std::uint64_t seed = 0;
    Params params;  // the parameters the simulator actually used
    bool perturbed = false;
    Histogram histogram;
    RecursionComparison vs_recursion;
};

struct PairTest {
    int i = 0, j = 0;
    ChiSquare chi;
    bool reject = false;
};

struct VerifyOptions {
    int prefix = 64;
    int threads = 0;
    double alpha = 0.001;
    double z_threshold = 4.0;
    // Negative control: the last law is simulated with a and c moved by 0.1.
    bool perturb_last = false;
    RecursionOptions recursion;
};

struct VerificationReport {
    Params params;
    int n_max = 0;
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
    VerifyOptions options;
    std::vector<double> recursion_pn;  // float table, n = 1..n_max
    std::vector<LawRun> runs;
    std::vector<PairTest> pairs;
    bool universality_pass = false;
    bool recursion_pass = false;
    bool pass = false;
};

Params perturb_params(const Params& params, double delta = 0.1);

VerificationReport verify_universality(const Params& params, const std::vector<SpacingLaw>& laws,
                                       int n_max, std::uint64_t samples, std::uint64_t seed,
                                       const VerifyOptions& options = {});

}  // namespace tcba
