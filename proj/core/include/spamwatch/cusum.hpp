#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>

#include "spamwatch/running_stats.hpp"

namespace spamwatch {

// Two-sided CUSUM change detector for the cumulative average rating lead.
// The reference mean is an exponentially weighted average so a slow drift is
// absorbed (together with the allowance) while an abrupt shift accumulates;
// kappa = kappa_factor * running stdev of the series increments. The decision
// interval comes from the shared Cantelli threshold, so one thresholding
// mechanism governs every detector.
class CusumDetector {
public:
    explicit CusumDetector(double kappa_factor = 0.5, double reference_beta = 0.2)
        : kappa_factor_(kappa_factor), beta_(reference_beta) {}

    struct Result {
        double score = 0.0;
        bool valid = false;  // false for the very first value (no reference yet)
        bool flagged = false;
    };

    // `threshold` absent means warm-up: the statistics advance, nothing flags.
    Result step(double v, std::optional<double> threshold) {
        if (has_prev_) increments_.add(v - prev_);
        prev_ = v;
        has_prev_ = true;

        Result out;
        if (!has_ref_) {
            ref_ = v;
            has_ref_ = true;
            return out;
        }
        out.valid = true;
        const double kappa = kappa_factor_ * increments_.stdev();
        const double dev = v - ref_;
        g_pos_ = std::max(0.0, g_pos_ + dev - kappa);
        g_neg_ = std::max(0.0, g_neg_ - dev - kappa);
        out.score = std::max(g_pos_, g_neg_);
        ref_ = (1.0 - beta_) * ref_ + beta_ * v;
        if (threshold && out.score > *threshold) {
            out.flagged = true;
            // Reset to post-change values: the current level becomes the
            // new reference mean.
            g_pos_ = 0.0;
            g_neg_ = 0.0;
            ref_ = v;
        }
        return out;
    }

    double positive_sum() const { return g_pos_; }
    double negative_sum() const { return g_neg_; }
    double reference_mean() const { return ref_; }

    struct State {
        double kappa_factor = 0.5;
        double beta = 0.2;
        double g_pos = 0.0;
        double g_neg = 0.0;
        bool has_prev = false;
        double prev = 0.0;
        bool has_ref = false;
        double ref = 0.0;
        std::int64_t inc_n = 0;
        double inc_mean = 0.0;
        double inc_m2 = 0.0;
    };
    State state() const {
        State s;
        s.kappa_factor = kappa_factor_;
        s.beta = beta_;
        s.g_pos = g_pos_;
        s.g_neg = g_neg_;
        s.has_prev = has_prev_;
        s.prev = prev_;
        s.has_ref = has_ref_;
        s.ref = ref_;
        s.inc_n = increments_.count();
        s.inc_mean = increments_.mean();
        s.inc_m2 = increments_.raw_m2();
        return s;
    }
    static CusumDetector from_state(const State& s) {
        CusumDetector d(s.kappa_factor, s.beta);
        d.g_pos_ = s.g_pos;
        d.g_neg_ = s.g_neg;
        d.has_prev_ = s.has_prev;
        d.prev_ = s.prev;
        d.has_ref_ = s.has_ref;
        d.ref_ = s.ref;
        d.increments_.restore(s.inc_n, s.inc_mean, s.inc_m2);
        return d;
    }

private:
    double kappa_factor_;
    double beta_;
    double g_pos_ = 0.0;
    double g_neg_ = 0.0;
    bool has_prev_ = false;
    double prev_ = 0.0;
    bool has_ref_ = false;
    double ref_ = 0.0;  // EWMA of the series since the last detected change
    RunningStats increments_;  // never reset; scale for the allowance
};

}  // namespace spamwatch
