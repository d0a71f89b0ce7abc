#include "alignaudit/metrics/prob_dist.hpp"

#include "alignaudit/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace alignaudit::metrics {

ProbDist::ProbDist(std::vector<std::string> labels, std::vector<double> mass)
    : labels_(std::move(labels)), mass_(std::move(mass)) {
    if (labels_.size() != mass_.size()) {
        throw StructuralError("ProbDist: " + std::to_string(labels_.size()) + " labels but " +
                              std::to_string(mass_.size()) + " mass entries");
    }
    if (labels_.empty()) throw StructuralError("ProbDist: empty label list");
    if (std::set<std::string>(labels_.begin(), labels_.end()).size() != labels_.size()) {
        throw StructuralError("ProbDist: duplicate labels");
    }
    double total = 0.0;
    for (double m : mass_) {
        if (!std::isfinite(m) || m < 0.0) throw StructuralError("ProbDist: mass entries must be finite and >= 0");
        total += m;
    }
    if (total <= 0.0) throw DegenerateInputError("ProbDist: total mass is zero");
    for (double& m : mass_) m /= total;
}

ProbDist ProbDist::from_normalized(std::vector<std::string> labels, std::vector<double> mass) {
    ProbDist d(labels, mass);  // validation
    double total = std::accumulate(mass.begin(), mass.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9) throw StructuralError("ProbDist::from_normalized: mass does not sum to 1");
    d.mass_ = std::move(mass);
    return d;
}

ProbDist ProbDist::uniform(std::vector<std::string> labels) {
    std::vector<double> mass(labels.size(), 1.0);
    return ProbDist(std::move(labels), std::move(mass));
}

ProbDist ProbDist::delta(std::vector<std::string> labels, std::size_t index) {
    if (index >= labels.size()) throw StructuralError("ProbDist::delta: index out of range");
    std::vector<double> mass(labels.size(), 0.0);
    mass[index] = 1.0;
    return ProbDist(std::move(labels), std::move(mass));
}

ProbDist ProbDist::from_counts(std::vector<std::string> labels, std::span<const double> counts) {
    return ProbDist(std::move(labels), std::vector<double>(counts.begin(), counts.end()));
}

ProbDist ProbDist::softmax(std::vector<std::string> labels, std::span<const double> logits) {
    if (logits.empty()) throw StructuralError("ProbDist::softmax: no logits");
    double hi = *std::max_element(logits.begin(), logits.end());
    if (!std::isfinite(hi)) throw StructuralError("ProbDist::softmax: non-finite logits");
    std::vector<double> mass(logits.size());
    std::transform(logits.begin(), logits.end(), mass.begin(),
                   [hi](double z) { return std::exp(z - hi); });
    return ProbDist(std::move(labels), std::move(mass));
}

std::size_t ProbDist::index_of(const std::string& label) const {
    return static_cast<std::size_t>(std::find(labels_.begin(), labels_.end(), label) - labels_.begin());
}

std::size_t ProbDist::argmax() const {
    return static_cast<std::size_t>(std::max_element(mass_.begin(), mass_.end()) - mass_.begin());
}

ProbDist average(std::span<const ProbDist> dists) {
    if (dists.empty()) throw DegenerateInputError("average: no distributions");
    std::vector<double> acc(dists.front().size(), 0.0);
    for (const auto& d : dists) {
        require_same_labels(dists.front(), d, "average");
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += d[i];
    }
    return ProbDist(dists.front().labels(), std::move(acc));
}

void require_same_labels(const ProbDist& p, const ProbDist& q, const char* op) {
    if (!p.same_labels(q)) throw StructuralError(std::string(op) + ": label lists differ");
}

std::vector<std::string> letter_labels(std::size_t k) {
    if (k > 26) throw StructuralError("letter_labels: at most 26 options");
    std::vector<std::string> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.emplace_back(1, static_cast<char>('A' + i));
    return out;
}

}  // namespace alignaudit::metrics
