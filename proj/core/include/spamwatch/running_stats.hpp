#pragma once

#include <cmath>
#include <cstdint>

namespace spamwatch {

// Welford running mean / variance.
class RunningStats {
public:
    void add(double x) {
        n_ += 1;
        const double d1 = x - mean_;
        mean_ += d1 / static_cast<double>(n_);
        m2_ += d1 * (x - mean_);
    }

    void merge(const RunningStats& other) {
        if (other.n_ == 0) return;
        if (n_ == 0) {
            *this = other;
            return;
        }
        const double na = static_cast<double>(n_);
        const double nb = static_cast<double>(other.n_);
        const double delta = other.mean_ - mean_;
        const double nt = na + nb;
        m2_ += other.m2_ + delta * delta * na * nb / nt;
        mean_ += delta * nb / nt;
        n_ += other.n_;
    }

    void reset() { *this = RunningStats{}; }

    std::int64_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ >= 2 ? m2_ / static_cast<double>(n_) : 0.0; }
    double stdev() const { return std::sqrt(variance()); }

    double raw_m2() const { return m2_; }
    void restore(std::int64_t n, double mean, double m2) {
        n_ = n;
        mean_ = mean;
        m2_ = m2;
    }

private:
    std::int64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

}  // namespace spamwatch
