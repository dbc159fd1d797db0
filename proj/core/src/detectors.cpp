#include "spamwatch/detectors.hpp"

#include <algorithm>
#include <cmath>

#include "spamwatch/errors.hpp"

namespace spamwatch {

const char* detector_name(DetectorKind k) {
    switch (k) {
        case DetectorKind::cusum: return "cusum";
        case DetectorKind::global_ar: return "global_ar";
        case DetectorKind::local_ar: return "local_ar";
    }
    return "?";
}

const char* lead_name(LeadKind k) {
    switch (k) {
        case LeadKind::avg_rating_cusum: return "avg_rating_cusum";
        case LeadKind::total_count_ar: return "total_count_ar";
        case LeadKind::pos_count_ar: return "pos_count_ar";
        case LeadKind::neg_count_ar: return "neg_count_ar";
    }
    return "?";
}

LeadKind lead_from_name(const std::string& name) {
    if (name == "avg_rating_cusum") return LeadKind::avg_rating_cusum;
    if (name == "total_count_ar") return LeadKind::total_count_ar;
    if (name == "pos_count_ar") return LeadKind::pos_count_ar;
    if (name == "neg_count_ar") return LeadKind::neg_count_ar;
    throw ConfigError("unknown lead kind '" + name + "'");
}

SignalId lead_signal(LeadKind k) {
    switch (k) {
        case LeadKind::avg_rating_cusum: return SignalId::avg_rating;
        case LeadKind::total_count_ar: return SignalId::review_count;
        case LeadKind::pos_count_ar: return SignalId::pos_count;
        case LeadKind::neg_count_ar: return SignalId::neg_count;
    }
    return SignalId::avg_rating;
}

const char* mode_name(DetectorMode m) {
    return m == DetectorMode::global_ar ? "global_ar" : "local_ar";
}

DetectorMode mode_from_name(const std::string& name) {
    if (name == "global_ar") return DetectorMode::global_ar;
    if (name == "local_ar") return DetectorMode::local_ar;
    throw ConfigError("unknown detector mode '" + name + "'");
}

bool sem_sus(SignalId signal, double value, double previous) {
    switch (suspicious_direction(signal)) {
        case SuspiciousDirection::increase: return value > previous;
        case SuspiciousDirection::decrease: return value < previous;
        case SuspiciousDirection::any_change: return value != previous;
    }
    return false;
}

void SignalSeries::append(std::int64_t window, double value) {
    windows_.push_back(window);
    values_.push_back(value);
    scores_.push_back(std::numeric_limits<double>::quiet_NaN());
    labels_.push_back(0);
}

bool SignalSeries::has_score(std::size_t i) const {
    return !std::isnan(scores_[i]);
}

std::size_t SignalSeries::lower_bound(std::int64_t w) const {
    return static_cast<std::size_t>(
        std::lower_bound(windows_.begin(), windows_.end(), w) - windows_.begin());
}

std::optional<std::size_t> SignalSeries::index_of(std::int64_t w) const {
    const std::size_t i = lower_bound(w);
    if (i < windows_.size() && windows_[i] == w) return i;
    return std::nullopt;
}

void SignalSeries::restore(std::vector<std::int64_t> w, std::vector<double> v,
                           std::vector<double> s, std::vector<std::uint8_t> l) {
    windows_ = std::move(w);
    values_ = std::move(v);
    scores_ = std::move(s);
    labels_ = std::move(l);
}

void label_lag_window(SignalSeries& series, std::int64_t t_i, DetectorKind kind,
                      const SupportContext& ctx) {
    if (ctx.last_alarm == kNoAlarm) return;
    if (t_i - ctx.last_alarm > ctx.config->lag_radius) return;
    if (!ctx.threshold) return;
    if (series.size() < static_cast<std::size_t>(ctx.config->min_series_length())) return;

    const std::int64_t from = ctx.last_alarm - ctx.config->lag_radius;
    for (std::size_t i = series.lower_bound(from);
         i < series.size() && series.window_at(i) <= t_i; ++i) {
        if (series.labeled(i) || !series.has_score(i)) continue;
        if (series.score_at(i) <= *ctx.threshold) continue;
        if (i == 0) continue;  // no predecessor to judge the direction
        if (!sem_sus(ctx.signal, series.value_at(i), series.value_at(i - 1))) continue;
        series.set_label(i);
        ctx.records->push_back(AnomalyRecord{*ctx.product_id, ctx.signal,
                                             series.window_at(i), series.score_at(i), 1,
                                             kind, *ctx.threshold});
    }
}

void GlobalArSupport::step(SignalSeries& series, std::int64_t window,
                           const SupportContext& ctx) {
    if (!series.empty() && series.window_at(series.size() - 1) == window) {
        if (ctx.fit_counter) ++*ctx.fit_counter;
        const auto score = model_.step(series.value_at(series.size() - 1));
        if (score) {
            series.set_score(series.size() - 1, *score);
            // Warm-up scores stay out of the pooled distribution so early
            // series turbulence cannot inflate the threshold for good.
            if (ctx.staged_scores &&
                series.size() >= static_cast<std::size_t>(ctx.config->min_series_length())) {
                ctx.staged_scores->push_back(*score);
            }
        }
    }
    label_lag_window(series, window, DetectorKind::global_ar, ctx);
}

namespace {

// Order selection (candidate orders 1..5): sum of one-step squared errors
// over the trailing validation tasks, each fitted on the candidate-order
// values right before the target.
int select_local_order(const SignalSeries& series, std::size_t end_idx,
                       const SupportContext& ctx) {
    constexpr int kMaxOrder = 5;
    const int requested = ctx.config->local_search_window;
    const auto available = static_cast<std::int64_t>(end_idx);  // points before end_idx
    const std::int64_t tasks = std::min<std::int64_t>(requested, available - kMaxOrder);
    if (tasks < kMaxOrder + 1) {
        if (ctx.skip_warnings) ++*ctx.skip_warnings;
        return 0;  // not enough history even for the reduced window
    }
    const auto& values = series.values();
    double best = std::numeric_limits<double>::infinity();
    int best_order = 1;
    for (int order = 1; order <= kMaxOrder; ++order) {
        double total = 0.0;
        for (std::int64_t j = 1; j <= tasks; ++j) {
            const std::size_t target = end_idx - static_cast<std::size_t>(j);
            const std::size_t lo = target - static_cast<std::size_t>(order);
            const std::span<const double> fit_window(values.data() + lo,
                                                     static_cast<std::size_t>(order));
            const auto fit = fit_ar_window(fit_window, order, ctx.config->local_ridge);
            if (ctx.fit_counter) ++*ctx.fit_counter;
            const double vhat = fit.predict(fit_window);
            const double err = values[target] - vhat;
            total += err * err;
        }
        if (total < best) {
            best = total;
            best_order = order;
        }
    }
    return best_order;
}

}  // namespace

void LocalArSupport::step(SignalSeries& series, std::int64_t window,
                          const SupportContext& ctx) {
    if (ctx.last_alarm == kNoAlarm || window - ctx.last_alarm > ctx.config->lag_radius) {
        return;  // no recent alarm in the lead: exit before any arithmetic
    }
    if (series.empty()) return;

    if (selection_alarm != ctx.last_alarm) {
        const int order = select_local_order(series, series.size() - 1, ctx);
        if (order == 0) return;
        selection_alarm = ctx.last_alarm;
        selected_order = order;
    }
    const int k = selected_order;
    if (k <= 0) return;

    // Score the unscored points around the alarm, each from a fit on the k
    // values immediately before it. Cached scores are never recomputed.
    const std::int64_t from = ctx.last_alarm - ctx.config->lag_radius;
    const auto& values = series.values();
    for (std::size_t i = series.lower_bound(from);
         i < series.size() && series.window_at(i) <= window; ++i) {
        if (series.has_score(i)) continue;
        if (i < static_cast<std::size_t>(k)) {
            if (ctx.skip_warnings) ++*ctx.skip_warnings;
            continue;
        }
        const std::span<const double> fit_window(values.data() + i - static_cast<std::size_t>(k),
                                                 static_cast<std::size_t>(k));
        const auto fit = fit_ar_window(fit_window, k, ctx.config->local_ridge);
        if (ctx.fit_counter) ++*ctx.fit_counter;
        const double vhat = fit.predict(fit_window);
        const double err = values[i] - vhat;
        const double score = err * err;
        series.set_score(i, score);
        if (ctx.staged_scores &&
            series.size() >= static_cast<std::size_t>(ctx.config->min_series_length())) {
            ctx.staged_scores->push_back(score);
        }
    }

    label_lag_window(series, window, DetectorKind::local_ar, ctx);
}

}  // namespace spamwatch
