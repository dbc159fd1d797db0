#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spamwatch/signals.hpp"

namespace spamwatch {

// Per-(product, window) suspiciousness features and final score.
//   f1: fraction of the nine signals labeled anomalous this window
//   f2: mean score over the labeled signals (0 when none)
//   f3: max score over the labeled signals (0 when none)
//   f4: sum of labeled scores, each weighted by 1 / (product's historical
//       label count for that signal, current window included)
// F1..F4 are the empirical-CDF normalizations; A is their mean.
struct ProductScore {
    std::string product_id;
    std::int64_t window = 0;
    double f1 = 0.0, f2 = 0.0, f3 = 0.0, f4 = 0.0;
    double F1 = 0.0, F2 = 0.0, F3 = 0.0, F4 = 0.0;
    double A = 0.0;

    double raw(int g) const { return g == 0 ? f1 : g == 1 ? f2 : g == 2 ? f3 : f4; }
    void set_normalized(int g, double v) {
        (g == 0 ? F1 : g == 1 ? F2 : g == 2 ? F3 : F4) = v;
    }
};

// Signal-level inputs to the feature computation for one (product, window).
struct WindowSignalOutcome {
    std::optional<double> score;  // absent = not computed this window
    bool labeled = false;
    std::int64_t historical_labels = 0;  // labels on this signal so far, incl. now
};

void compute_features(const std::array<WindowSignalOutcome, kSignalCount>& outcomes,
                      ProductScore& out);

// Exact empirical CDF over all historical feature values (all products, all
// windows). Inserts are batched per window: the whole window's batch is
// inserted first, then queried, so F covers strictly-prior history plus the
// current batch and every value is <= itself.
class EcdfStore {
public:
    void insert_batch(std::vector<double> values);
    // Fraction of stored values <= x. Store must be nonempty.
    double query(double x) const;
    std::size_t size() const { return sorted_.size(); }
    const std::vector<double>& sorted_values() const { return sorted_; }
    void restore(std::vector<double> sorted) { sorted_ = std::move(sorted); }

private:
    std::vector<double> sorted_;
};

// Descending by A; ties broken by (f3 desc, product_id asc) so replays rank
// identically.
void product_rank(std::vector<ProductScore>& scores);

}  // namespace spamwatch
