#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace alignaudit::metrics {

/// Probability vector over an ordered set of answer options.
///
/// Labels are unique and their order is meaningful: ordinal metrics such as
/// emd_ordinal() read option i as scale point i. Mass is normalized on
/// construction so it sums to one within 1e-9.
class ProbDist {
public:
    ProbDist() = default;

    /// Normalizes `mass`. Throws StructuralError on length mismatch, duplicate
    /// labels, negative or non-finite entries, or zero total mass.
    ProbDist(std::vector<std::string> labels, std::vector<double> mass);

    /// Adopts mass that is already normalized (sum within 1e-9 of one)
    /// without rescaling, so serialized distributions restore bit-exactly.
    static ProbDist from_normalized(std::vector<std::string> labels, std::vector<double> mass);
    /// Uniform mass over `labels`.
    static ProbDist uniform(std::vector<std::string> labels);
    /// All mass on `labels[index]`.
    static ProbDist delta(std::vector<std::string> labels, std::size_t index);
    /// Normalized counts; throws DegenerateInputError when all counts are zero.
    static ProbDist from_counts(std::vector<std::string> labels, std::span<const double> counts);
    /// softmax(logits) over labels, computed with a max shift.
    static ProbDist softmax(std::vector<std::string> labels, std::span<const double> logits);

    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const std::vector<double>& mass() const noexcept { return mass_; }
    std::size_t size() const noexcept { return mass_.size(); }
    double operator[](std::size_t i) const { return mass_[i]; }

    /// Index of `label`, or size() when absent.
    std::size_t index_of(const std::string& label) const;
    /// Lowest index attaining the maximum mass.
    std::size_t argmax() const;

    bool same_labels(const ProbDist& other) const noexcept { return labels_ == other.labels_; }

    friend bool operator==(const ProbDist&, const ProbDist&) = default;

private:
    std::vector<std::string> labels_;
    std::vector<double> mass_;
};

/// Equal-weight mixture of distributions sharing a label list.
ProbDist average(std::span<const ProbDist> dists);

/// Throws StructuralError unless p and q carry identical label lists.
void require_same_labels(const ProbDist& p, const ProbDist& q, const char* op);

/// Default option labels "A", "B", ... for k options (k <= 26).
std::vector<std::string> letter_labels(std::size_t k);

}  // namespace alignaudit::metrics
