#include "alignaudit/metrics/hypothesis.hpp"

#include "alignaudit/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace alignaudit::metrics {

TwoSampleSummary TwoSampleSummary::from_sd(double mean, double sd, std::size_t n) {
    if (n == 0) throw DegenerateInputError("TwoSampleSummary: n must be positive");
    if (sd < 0.0) throw StructuralError("TwoSampleSummary: sd must be >= 0");
    return {mean, sd, sd / std::sqrt(static_cast<double>(n)), n};
}

TwoSampleSummary TwoSampleSummary::from_sem(double mean, double sem, std::size_t n) {
    if (n == 0) throw DegenerateInputError("TwoSampleSummary: n must be positive");
    if (sem < 0.0) throw StructuralError("TwoSampleSummary: sem must be >= 0");
    return {mean, sem * std::sqrt(static_cast<double>(n)), sem, n};
}

TwoSampleSummary TwoSampleSummary::from_sample(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) throw DegenerateInputError("TwoSampleSummary: need at least two values");
    double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return from_sd(mean, std::sqrt(ss / static_cast<double>(n - 1)), n);
}

TTestResult two_sample_t(const TwoSampleSummary& a, const TwoSampleSummary& b) {
    if (a.n < 2 || b.n < 2) throw DegenerateInputError("two_sample_t: each group needs n >= 2");
    TTestResult r;
    r.sed = std::sqrt(a.sem * a.sem + b.sem * b.sem);
    if (r.sed == 0.0) throw DegenerateInputError("two_sample_t: standard error of difference is zero");
    r.t = (a.mean - b.mean) / r.sed;
    r.df = static_cast<int>(a.n + b.n - 2);
    return r;
}

namespace {

double normal_two_sided(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

// Exact two-sided p-value under the sign-flip null, given doubled ranks
// (integers because average ranks are multiples of one half).
double exact_p(const std::vector<int>& doubled_ranks, int doubled_w_plus) {
    const int total = std::accumulate(doubled_ranks.begin(), doubled_ranks.end(), 0);
    std::vector<double> ways(static_cast<std::size_t>(total) + 1, 0.0);
    ways[0] = 1.0;
    int reach = 0;
    for (int r : doubled_ranks) {
        for (int s = reach; s >= 0; --s) ways[static_cast<std::size_t>(s + r)] += ways[static_cast<std::size_t>(s)];
        reach += r;
    }
    const double all = std::pow(2.0, static_cast<double>(doubled_ranks.size()));
    double lower = 0.0, upper = 0.0;
    for (int s = 0; s <= total; ++s) {
        if (s <= doubled_w_plus) lower += ways[static_cast<std::size_t>(s)];
        if (s >= doubled_w_plus) upper += ways[static_cast<std::size_t>(s)];
    }
    return std::min(1.0, 2.0 * std::min(lower, upper) / all);
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> paired_diffs) {
    std::vector<double> diffs;
    for (double d : paired_diffs) {
        if (!std::isfinite(d)) throw StructuralError("wilcoxon_signed_rank: non-finite difference");
        if (d != 0.0) diffs.push_back(d);
    }
    if (diffs.empty()) throw DegenerateInputError("wilcoxon_signed_rank: all differences are zero");

    const std::size_t n = diffs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return std::abs(diffs[a]) < std::abs(diffs[b]); });

    std::vector<int> doubled(n);  // 2 * average rank
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) ++j;
        const int doubled_rank = static_cast<int>(i + 1 + j + 1);  // 2 * (i+1 + j+1) / 2
        for (std::size_t k = i; k <= j; ++k) doubled[order[k]] = doubled_rank;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }

    WilcoxonResult r;
    r.n = n;
    int doubled_plus = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (diffs[i] > 0) doubled_plus += doubled[i];
    }
    const int doubled_total = std::accumulate(doubled.begin(), doubled.end(), 0);
    r.w_plus = doubled_plus / 2.0;
    r.w_minus = (doubled_total - doubled_plus) / 2.0;
    r.statistic = std::min(r.w_plus, r.w_minus);

    if (n <= kWilcoxonExactMaxN) {
        r.exact = true;
        r.p_value = exact_p(doubled, doubled_plus);
        return r;
    }
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    if (var <= 0.0) {
        r.p_value = 1.0;
        return r;
    }
    const double z = std::max(0.0, std::abs(r.statistic - mean) - 0.5) / std::sqrt(var);
    r.p_value = std::min(1.0, normal_two_sided(z));
    return r;
}

}  // namespace alignaudit::metrics
