#pragma once

#include "alignaudit/metrics/prob_dist.hpp"

namespace alignaudit::metrics {

inline constexpr double kDefaultKlEpsilon = 1e-9;

/// KL(p || q) in nats.
///
/// When some bin has p_i > 0 but q_i == 0 the divergence is infinite; in that
/// case q is floored at `epsilon` bin-wise and renormalized before summing.
/// Otherwise q is used as given, so KL(p, p) is exactly zero.
double kl_divergence(const ProbDist& p, const ProbDist& q, double epsilon = kDefaultKlEpsilon);

/// Jensen-Shannon divergence with base-2 logarithms; lies in [0, 1] and is
/// exactly symmetric in its arguments.
double jensen_shannon(const ProbDist& p, const ProbDist& q);

/// Earth mover's distance between two distributions on the same ordinal
/// scale: the L1 distance between CDFs divided by (K - 1), so a full shift
/// from the first to the last option scores 1.
double emd_ordinal(const ProbDist& p, const ProbDist& q);

struct DivergenceReport {
    double kl = 0.0;             // nats, KL(p || q)
    double jsd = 0.0;            // base 2
    double one_minus_jsd = 1.0;  // 1 - jsd
    double emd = 0.0;            // normalized
};

DivergenceReport compare(const ProbDist& p, const ProbDist& q, double epsilon = kDefaultKlEpsilon);

}  // namespace alignaudit::metrics
