#include "spamwatch/signals.hpp"

#include <cmath>
#include <stdexcept>

#include "spamwatch/errors.hpp"

namespace spamwatch {

namespace {
constexpr std::int64_t kSecondsPerDay = 86400;
}

const char* signal_name(SignalId id) {
    switch (id) {
        case SignalId::avg_rating: return "avg_rating";
        case SignalId::review_count: return "review_count";
        case SignalId::pos_count: return "pos_count";
        case SignalId::neg_count: return "neg_count";
        case SignalId::rating_entropy: return "rating_entropy";
        case SignalId::singleton_ratio: return "singleton_ratio";
        case SignalId::first_timer_ratio: return "first_timer_ratio";
        case SignalId::youth_score: return "youth_score";
        case SignalId::gap_entropy: return "gap_entropy";
    }
    return "?";
}

SignalId signal_from_name(const std::string& name) {
    for (int i = 0; i < kSignalCount; ++i) {
        auto id = static_cast<SignalId>(i);
        if (name == signal_name(id)) return id;
    }
    throw ConfigError("unknown signal name '" + name + "'");
}

SuspiciousDirection suspicious_direction(SignalId id) {
    switch (id) {
        case SignalId::avg_rating: return SuspiciousDirection::any_change;
        case SignalId::review_count:
        case SignalId::pos_count:
        case SignalId::neg_count:
        case SignalId::singleton_ratio:
        case SignalId::first_timer_ratio:
        case SignalId::youth_score: return SuspiciousDirection::increase;
        case SignalId::rating_entropy:
        case SignalId::gap_entropy: return SuspiciousDirection::decrease;
    }
    return SuspiciousDirection::any_change;
}

std::optional<double> SignalVector::value(SignalId id) const {
    switch (id) {
        case SignalId::avg_rating: return avg_rating;
        case SignalId::review_count: return static_cast<double>(review_count);
        case SignalId::pos_count: return static_cast<double>(pos_count);
        case SignalId::neg_count: return static_cast<double>(neg_count);
        case SignalId::rating_entropy: return rating_entropy;
        case SignalId::singleton_ratio: return singleton_ratio;
        case SignalId::first_timer_ratio: return first_timer_ratio;
        case SignalId::youth_score: return youth_score;
        case SignalId::gap_entropy: return gap_entropy;
    }
    return std::nullopt;
}

void WindowAccumulator::add(const ReviewUnit& review, std::int64_t reviewer_age_seconds) {
    rating_counts[static_cast<std::size_t>(review.rating - 1)] += 1;
    timestamps.push_back(review.timestamp);
    reviewer_ages.push_back(reviewer_age_seconds);
}

std::int64_t WindowAccumulator::total() const {
    std::int64_t n = 0;
    for (auto c : rating_counts) n += c;
    return n;
}

void WindowAccumulator::clear() {
    rating_counts = {};
    timestamps.clear();
    reviewer_ages.clear();
}

double rating_entropy(const std::array<std::int64_t, 5>& counts) {
    std::int64_t total = 0;
    for (auto c : counts) total += c;
    if (total <= 0) throw std::invalid_argument("rating entropy of an empty window");
    double h = 0.0;
    for (auto c : counts) {
        if (c == 0) continue;  // 0*log 0 == 0
        const double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h < 0.0 ? 0.0 : h;
}

double youth_score(std::span<const std::int64_t> ages_seconds, std::int64_t delta_t) {
    if (ages_seconds.empty()) throw std::invalid_argument("youth score of an empty window");
    double sum = 0.0;
    for (auto age : ages_seconds) {
        const double a = static_cast<double>(age) / static_cast<double>(delta_t);
        sum += 2.0 * (1.0 - 1.0 / (1.0 + std::exp(-a)));
    }
    return sum / static_cast<double>(ages_seconds.size());
}

int gap_bin_count(std::int64_t delta_t) {
    std::int64_t days = (delta_t + kSecondsPerDay - 1) / kSecondsPerDay;
    if (days < 1) days = 1;
    int bins = 1;
    // ceil(log2(days)) via doubling keeps this exact for integer day counts.
    std::int64_t reach = 1;
    while (reach < days) {
        reach *= 2;
        ++bins;
    }
    return bins;
}

int gap_bin_for_days(std::int64_t gap_days) {
    if (gap_days <= 0) return 0;
    int b = 1;
    std::int64_t upper = 2;  // bin b covers [2^(b-1), 2^b)
    while (gap_days >= upper) {
        upper *= 2;
        ++b;
    }
    return b;
}

double gap_entropy(std::span<const std::int64_t> sorted_timestamps, std::int64_t delta_t) {
    if (sorted_timestamps.size() < 2) {
        throw std::invalid_argument("gap entropy needs at least two reviews");
    }
    const int bins = gap_bin_count(delta_t);
    std::vector<std::int64_t> histogram(static_cast<std::size_t>(bins), 0);
    for (std::size_t i = 1; i < sorted_timestamps.size(); ++i) {
        const std::int64_t gap = sorted_timestamps[i] - sorted_timestamps[i - 1];
        const std::int64_t gap_days = gap / kSecondsPerDay;
        int b = gap_bin_for_days(gap_days);
        if (b >= bins) b = bins - 1;  // cannot happen for in-window gaps; clamp anyway
        histogram[static_cast<std::size_t>(b)] += 1;
    }
    const double total = static_cast<double>(sorted_timestamps.size() - 1);
    double h = 0.0;
    for (auto c : histogram) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / total;
        h -= p * std::log2(p);
    }
    return h < 0.0 ? 0.0 : h;
}

SignalVector close_window(ProductCumulativeState& state, const WindowAccumulator& window,
                          const WindowUserStats& user_stats, std::int64_t delta_t) {
    SignalVector out;
    const std::int64_t n = window.total();
    out.review_count = n;
    out.pos_count = window.rating_counts[3] + window.rating_counts[4];
    out.neg_count = window.rating_counts[0] + window.rating_counts[1];

    for (int r = 0; r < 5; ++r) {
        state.rating_sum += static_cast<double>(window.rating_counts[static_cast<std::size_t>(r)]) *
                            static_cast<double>(r + 1);
    }
    state.review_count += n;
    out.avg_rating = state.average();

    if (n > 0) {
        out.rating_entropy = rating_entropy(window.rating_counts);
        out.singleton_ratio =
            static_cast<double>(user_stats.singleton_count) / static_cast<double>(n);
        out.first_timer_ratio =
            static_cast<double>(user_stats.first_timer_count) / static_cast<double>(n);
        out.youth_score = youth_score(window.reviewer_ages, delta_t);
        if (n >= 2) {
            out.gap_entropy = gap_entropy(window.timestamps, delta_t);
        }
    }
    return out;
}

}  // namespace spamwatch
