#pragma once

#include <cstddef>
#include <vector>

namespace alignaudit::metrics {

/// Square contingency table; rows are rater 1 (e.g. simulated), columns rater 2.
using ConfusionMatrix = std::vector<std::vector<double>>;

struct KappaResult {
    double kappa = 0.0;
    // Set when chance agreement is 1 (both raters used a single shared
    // category); kappa is then reported as 0 rather than NaN.
    bool degenerate = false;
    double observed_agreement = 0.0;
    double chance_agreement = 0.0;
};

/// Cohen's kappa with marginal chance agreement. Throws StructuralError for an
/// empty or non-square matrix or negative counts, DegenerateInputError when
/// the total count is zero.
KappaResult cohens_kappa(const ConfusionMatrix& confusion);

/// Builds a k x k confusion matrix from paired category indices.
ConfusionMatrix confusion_from_pairs(const std::vector<std::size_t>& rows,
                                     const std::vector<std::size_t>& cols, std::size_t k);

}  // namespace alignaudit::metrics
