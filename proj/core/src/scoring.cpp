#include "spamwatch/scoring.hpp"

#include <algorithm>

namespace spamwatch {

void compute_features(const std::array<WindowSignalOutcome, kSignalCount>& outcomes,
                      ProductScore& out) {
    int labeled = 0;
    double score_sum = 0.0;
    double score_max = 0.0;
    double weighted = 0.0;
    for (const auto& o : outcomes) {
        if (!o.labeled) continue;
        ++labeled;
        const double s = o.score.value_or(0.0);
        score_sum += s;
        score_max = std::max(score_max, s);
        const double weight =
            o.historical_labels > 0 ? 1.0 / static_cast<double>(o.historical_labels) : 1.0;
        weighted += weight * s;
    }
    out.f1 = static_cast<double>(labeled) / static_cast<double>(kSignalCount);
    out.f2 = labeled > 0 ? score_sum / static_cast<double>(labeled) : 0.0;
    out.f3 = score_max;
    out.f4 = weighted;
}

void EcdfStore::insert_batch(std::vector<double> values) {
    if (values.empty()) return;
    std::sort(values.begin(), values.end());
    const std::size_t old = sorted_.size();
    sorted_.insert(sorted_.end(), values.begin(), values.end());
    std::inplace_merge(sorted_.begin(), sorted_.begin() + static_cast<std::ptrdiff_t>(old),
                       sorted_.end());
}

double EcdfStore::query(double x) const {
    const auto leq = std::upper_bound(sorted_.begin(), sorted_.end(), x) - sorted_.begin();
    return static_cast<double>(leq) / static_cast<double>(sorted_.size());
}

void product_rank(std::vector<ProductScore>& scores) {
    std::sort(scores.begin(), scores.end(), [](const ProductScore& a, const ProductScore& b) {
        if (a.A != b.A) return a.A > b.A;
        if (a.f3 != b.f3) return a.f3 > b.f3;
        return a.product_id < b.product_id;
    });
}

}  // namespace spamwatch
