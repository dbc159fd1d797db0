#pragma once

#include <cmath>
#include <optional>

#include "spamwatch/running_stats.hpp"

namespace spamwatch {

// Pooled distribution of anomaly scores for one signal, shared across
// products and time. Drives the distribution-free alert threshold.
class ScoreDistribution {
public:
    void add(double score) { stats_.add(score); }
    void merge(const ScoreDistribution& staged) { stats_.merge(staged.stats_); }

    std::int64_t count() const { return stats_.count(); }
    double mean() const { return stats_.mean(); }
    double stdev() const { return stats_.stdev(); }

    RunningStats& raw() { return stats_; }
    const RunningStats& raw() const { return stats_; }

private:
    RunningStats stats_;
};

// Cantelli (one-sided Chebyshev) threshold: delta = mean + stdev *
// sqrt((1-eta)/eta) guarantees P(S >= delta) <= eta with no distributional
// assumptions. Returns nothing until the distribution has >= 2 samples.
inline std::optional<double> cantelli_threshold(const ScoreDistribution& dist, double eta) {
    if (eta <= 0.0 || eta >= 1.0) return std::nullopt;
    if (dist.count() < 2) return std::nullopt;
    return dist.mean() + dist.stdev() * std::sqrt((1.0 - eta) / eta);
}

}  // namespace spamwatch
