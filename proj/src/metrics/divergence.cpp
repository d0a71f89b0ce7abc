#include "alignaudit/metrics/divergence.hpp"

#include "alignaudit/common/error.hpp"

#include <algorithm>
#include <cmath>

namespace alignaudit::metrics {

double kl_divergence(const ProbDist& p, const ProbDist& q, double epsilon) {
    require_same_labels(p, q, "kl_divergence");
    if (!(epsilon > 0.0)) throw StructuralError("kl_divergence: epsilon must be > 0");

    const std::size_t k = p.size();
    bool needs_floor = false;
    for (std::size_t i = 0; i < k; ++i) needs_floor |= (p[i] > 0.0 && q[i] == 0.0);

    std::vector<double> qs(q.mass());
    if (needs_floor) {
        double total = 0.0;
        for (double& v : qs) {
            v = std::max(v, epsilon);
            total += v;
        }
        for (double& v : qs) v /= total;
    }

    double kl = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (p[i] > 0.0) kl += p[i] * std::log(p[i] / qs[i]);
    }
    // Rounding can leave a tiny negative residue when p and q nearly coincide.
    return std::max(kl, 0.0);
}

double jensen_shannon(const ProbDist& p, const ProbDist& q) {
    require_same_labels(p, q, "jensen_shannon");
    auto term = [](double a, double m) { return a > 0.0 ? a * std::log2(a / m) : 0.0; };
    double js = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double m = 0.5 * (p[i] + q[i]);
        if (m > 0.0) js += 0.5 * (term(p[i], m) + term(q[i], m));
    }
    return std::clamp(js, 0.0, 1.0);
}

double emd_ordinal(const ProbDist& p, const ProbDist& q) {
    require_same_labels(p, q, "emd_ordinal");
    const std::size_t k = p.size();
    if (k < 2) throw StructuralError("emd_ordinal: need at least two options");
    double cdf_p = 0.0, cdf_q = 0.0, total = 0.0;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        cdf_p += p[i];
        cdf_q += q[i];
        total += std::abs(cdf_p - cdf_q);
    }
    return std::clamp(total / static_cast<double>(k - 1), 0.0, 1.0);
}

DivergenceReport compare(const ProbDist& p, const ProbDist& q, double epsilon) {
    DivergenceReport r;
    r.kl = kl_divergence(p, q, epsilon);
    r.jsd = jensen_shannon(p, q);
    r.one_minus_jsd = 1.0 - r.jsd;
    r.emd = p.size() >= 2 ? emd_ordinal(p, q) : 0.0;
    return r;
}

}  // namespace alignaudit::metrics
