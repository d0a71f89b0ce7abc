#pragma once

#include <cstddef>
#include <span>

namespace alignaudit::metrics {

/// Group summary as reported in significance tables. Construct through the
/// factories so that sem == sd / sqrt(n) holds.
struct TwoSampleSummary {
    double mean = 0.0;
    double sd = 0.0;
    double sem = 0.0;
    std::size_t n = 0;

    static TwoSampleSummary from_sd(double mean, double sd, std::size_t n);
    static TwoSampleSummary from_sem(double mean, double sem, std::size_t n);
    static TwoSampleSummary from_sample(std::span<const double> values);
};

struct TTestResult {
    double t = 0.0;
    int df = 0;
    double sed = 0.0;  // standard error of the difference
};

/// t = (mean_a - mean_b) / sqrt(sem_a^2 + sem_b^2) with df = n_a + n_b - 2.
/// Throws DegenerateInputError when either n < 2 or the SED is zero.
TTestResult two_sample_t(const TwoSampleSummary& a, const TwoSampleSummary& b);

struct WilcoxonResult {
    double statistic = 0.0;  // min(W+, W-)
    double w_plus = 0.0;
    double w_minus = 0.0;
    std::size_t n = 0;       // non-zero differences
    double p_value = 1.0;    // two-sided
    bool exact = false;
};

/// Differences up to this count are tested against the exact null
/// distribution (ties included); beyond it the tie-corrected normal
/// approximation with continuity correction is used.
inline constexpr std::size_t kWilcoxonExactMaxN = 25;

/// Wilcoxon signed-rank test on paired differences. Zero differences are
/// dropped; tied magnitudes receive average ranks. Throws
/// DegenerateInputError when every difference is zero.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> paired_diffs);

}  // namespace alignaudit::metrics
