#include "alignaudit/metrics/agreement.hpp"

#include "alignaudit/common/error.hpp"

#include <cmath>

namespace alignaudit::metrics {

KappaResult cohens_kappa(const ConfusionMatrix& confusion) {
    const std::size_t k = confusion.size();
    if (k == 0) throw StructuralError("cohens_kappa: empty matrix");
    std::vector<double> row_sum(k, 0.0), col_sum(k, 0.0);
    double total = 0.0, diagonal = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (confusion[i].size() != k) throw StructuralError("cohens_kappa: matrix is not square");
        for (std::size_t j = 0; j < k; ++j) {
            double c = confusion[i][j];
            if (!std::isfinite(c) || c < 0.0) throw StructuralError("cohens_kappa: counts must be >= 0");
            row_sum[i] += c;
            col_sum[j] += c;
            total += c;
            if (i == j) diagonal += c;
        }
    }
    if (total <= 0.0) throw DegenerateInputError("cohens_kappa: total count is zero");

    KappaResult r;
    r.observed_agreement = diagonal / total;
    for (std::size_t i = 0; i < k; ++i) r.chance_agreement += (row_sum[i] / total) * (col_sum[i] / total);
    if (std::abs(1.0 - r.chance_agreement) < 1e-12) {
        r.degenerate = true;
        r.kappa = 0.0;
        return r;
    }
    r.kappa = (r.observed_agreement - r.chance_agreement) / (1.0 - r.chance_agreement);
    return r;
}

ConfusionMatrix confusion_from_pairs(const std::vector<std::size_t>& rows,
                                     const std::vector<std::size_t>& cols, std::size_t k) {
    if (rows.size() != cols.size()) throw StructuralError("confusion_from_pairs: length mismatch");
    ConfusionMatrix m(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= k || cols[i] >= k) throw StructuralError("confusion_from_pairs: category out of range");
        m[rows[i]][cols[i]] += 1.0;
    }
    return m;
}

}  // namespace alignaudit::metrics
