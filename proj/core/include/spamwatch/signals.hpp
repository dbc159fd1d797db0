#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spamwatch/review.hpp"
#include "spamwatch/user_registry.hpp"

namespace spamwatch {

// The nine per-(product, window) indicative signals, in fixed order.
enum class SignalId : int {
    avg_rating = 0,
    review_count = 1,
    pos_count = 2,
    neg_count = 3,
    rating_entropy = 4,
    singleton_ratio = 5,
    first_timer_ratio = 6,
    youth_score = 7,
    gap_entropy = 8,
};
inline constexpr int kSignalCount = 9;

const char* signal_name(SignalId id);
SignalId signal_from_name(const std::string& name);

// Direction of movement that counts as suspicious for each signal.
enum class SuspiciousDirection { increase, decrease, any_change };
SuspiciousDirection suspicious_direction(SignalId id);

// One window's signal values. Ratio/entropy fields are absent (not zero)
// when their denominator is undefined: no reviews in the window, or fewer
// than two reviews for the gap entropy. avg_rating is cumulative and absent
// only before the product's first review.
struct SignalVector {
    std::optional<double> avg_rating;        // [1,5]
    std::int64_t review_count = 0;           // >= 0
    std::int64_t pos_count = 0;              // ratings {4,5}
    std::int64_t neg_count = 0;              // ratings {1,2}
    std::optional<double> rating_entropy;    // [0, log2 5]
    std::optional<double> singleton_ratio;   // [0,1]
    std::optional<double> first_timer_ratio; // [0,1]
    std::optional<double> youth_score;       // [0,1]
    std::optional<double> gap_entropy;       // [0, log2(bin count)]

    std::optional<double> value(SignalId id) const;
};

// Running whole-history state behind the cumulative average rating.
struct ProductCumulativeState {
    double rating_sum = 0.0;
    std::int64_t review_count = 0;

    std::optional<double> average() const {
        if (review_count == 0) return std::nullopt;
        return rating_sum / static_cast<double>(review_count);
    }
};

// Window-local accumulation for one (product, window). Timestamps arrive
// nondecreasing by the ingest contract.
struct WindowAccumulator {
    std::array<std::int64_t, 5> rating_counts{};  // index 0 = rating 1
    std::vector<std::int64_t> timestamps;
    std::vector<std::int64_t> reviewer_ages;  // seconds at post time

    void add(const ReviewUnit& review, std::int64_t reviewer_age_seconds);
    std::int64_t total() const;
    bool empty() const { return timestamps.empty(); }
    void clear();
};

// Shannon entropy (base 2) of the rating distribution; total must be > 0.
double rating_entropy(const std::array<std::int64_t, 5>& counts);

// Mean of 2*(1 - sigmoid(age/delta_t)) over the window's reviews; ages are
// in seconds and normalized to window units so the sigmoid has usable range.
double youth_score(std::span<const std::int64_t> ages_seconds, std::int64_t delta_t);

// Number of logarithmic gap-histogram bins for a window of `delta_t`
// seconds: ceil(log2(days)) + 1, with bin 0 = same-day gaps and bin b
// covering [2^(b-1), 2^b) whole days.
int gap_bin_count(std::int64_t delta_t);
int gap_bin_for_days(std::int64_t gap_days);

// Entropy (base 2) of log-binned day-gaps between consecutive reviews;
// requires >= 2 reviews. Timestamps must be sorted (nondecreasing).
double gap_entropy(std::span<const std::int64_t> sorted_timestamps, std::int64_t delta_t);

// Closes one (product, window): produces the nine signal values and folds
// the window's ratings into the cumulative state.
SignalVector close_window(ProductCumulativeState& state, const WindowAccumulator& window,
                          const WindowUserStats& user_stats, std::int64_t delta_t);

}  // namespace spamwatch
