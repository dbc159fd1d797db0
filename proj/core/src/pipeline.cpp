#include "spamwatch/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "spamwatch/errors.hpp"

namespace spamwatch {

namespace {
constexpr std::int64_t kSecondsPerDay = 86400;
}

std::string PipelineConfig::echo_json() const {
    nlohmann::json leads = nlohmann::json::array();
    for (auto k : detector.leads) leads.push_back(lead_name(k));
    nlohmann::json j{{"input", input_path},
                     {"format", format_name(format)},
                     {"delta_t", delta_t},
                     {"origin", origin ? nlohmann::json(*origin) : nlohmann::json("auto")},
                     {"mode", mode_name(mode)},
                     {"leads", std::move(leads)},
                     {"eta", detector.eta},
                     {"r", detector.discount_r},
                     {"k", detector.global_order},
                     {"L", detector.local_search_window},
                     {"lag_radius", detector.lag_radius},
                     {"kappa_factor", detector.cusum_kappa_factor},
                     {"warmup_min_scores", detector.warmup_min_scores},
                     {"min_support_labels", min_support_labels},
                     {"top_n", top_n}};
    return j.dump();
}

void PipelineConfig::validate() const {
    if (delta_t <= 0) throw ConfigError("delta_t must be positive");
    if (detector.discount_r < 0.0 || detector.discount_r >= 1.0) {
        throw ConfigError("discount r must lie in [0, 1)");
    }
    if (detector.global_order < 1) throw ConfigError("AR order k must be >= 1");
    if (detector.local_search_window < 1) throw ConfigError("search window L must be >= 1");
    if (detector.eta <= 0.0 || detector.eta >= 1.0) throw ConfigError("eta must lie in (0, 1)");
    if (detector.lag_radius < 0) throw ConfigError("lag radius must be >= 0");
    if (detector.leads.empty()) throw ConfigError("at least one lead signal is required");
    if (top_n < 1) throw ConfigError("top_n must be >= 1");
    if (min_support_labels < 1) throw ConfigError("min_support_labels must be >= 1");
    if (snapshot_every < 0) throw ConfigError("snapshot interval must be >= 0");
    if (snapshot_every > 0 && snapshot_path.empty()) {
        throw ConfigError("snapshot interval set but no snapshot path given");
    }
}

ProductState::ProductState(const DetectorConfig& cfg) {
    for (auto kind : cfg.leads) {
        if (kind == LeadKind::avg_rating_cusum) {
            cusum.emplace(cfg.cusum_kappa_factor);
        } else {
            lead_models.emplace_back(kind, SdarModel(cfg.global_order, cfg.discount_r));
        }
    }
    for (auto& g : global_supports) {
        g = GlobalArSupport(cfg.global_order, cfg.discount_r);
    }
}

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {
    config_.validate();
    for (auto kind : config_.detector.leads) {
        lead_dists_.emplace_back(kind, ScoreDistribution{});
    }
    if (!config_.out_dir.empty()) {
        report_ = std::make_unique<ReportWriter>(config_.out_dir, config_.echo_json());
    }
}

Pipeline::~Pipeline() = default;
Pipeline::Pipeline(Pipeline&&) noexcept = default;
Pipeline& Pipeline::operator=(Pipeline&&) noexcept = default;

bool Pipeline::is_lead_signal(SignalId id) const {
    for (auto kind : config_.detector.leads) {
        if (lead_signal(kind) == id) return true;
    }
    return false;
}

void Pipeline::ensure_origin(std::int64_t timestamp) {
    if (origin_set_) return;
    origin_ = config_.origin ? *config_.origin : truncate_to_utc_midnight(timestamp);
    origin_set_ = true;
    registry_.set_windowing(origin_, config_.delta_t);
}

ProductState& Pipeline::product(const std::string& id) {
    auto it = products_.find(id);
    if (it == products_.end()) {
        it = products_.try_emplace(id, config_.detector).first;
    }
    return it->second;
}

void Pipeline::feed(const ReviewUnit& r) {
    if (finished_) throw std::logic_error("pipeline already finished");
    order_.check(r);
    ensure_origin(r.timestamp);
    const std::int64_t w = assign_window(r.timestamp, origin_, config_.delta_t).index;
    if (w <= resume_through_) return;  // replayed input from before the snapshot

    if (current_window_ < 0) {
        current_window_ = w;
    } else if (w > current_window_) {
        close_windows_through(w);
    }

    const UserObservation obs = registry_.observe_review(r);
    ProductState& ps = product(r.product_id);
    if (ps.first_window < 0) ps.first_window = w;
    ps.pending.add(r, obs.account_age_at_post);
    ps.daily_counts[(r.timestamp - origin_) / kSecondsPerDay]
                   [static_cast<std::size_t>(r.rating - 1)] += 1;
    ++counters_.reviews;
}

void Pipeline::close_windows_through(std::int64_t window) {
    for (std::int64_t w = current_window_; w < window; ++w) {
        close_window(w);
    }
    current_window_ = window;
}

void Pipeline::run_lead_detectors(const std::string& id, ProductState& ps, std::int64_t window,
                                  const SignalVector& sv,
                                  const std::vector<std::optional<double>>& lead_thresholds,
                                  std::vector<AnomalyRecord>& new_records) {
    const auto min_len = static_cast<std::size_t>(config_.detector.min_series_length());
    for (std::size_t li = 0; li < config_.detector.leads.size(); ++li) {
        const LeadKind kind = config_.detector.leads[li];
        const SignalId sig = lead_signal(kind);
        SignalSeries& series = ps.series[static_cast<std::size_t>(sig)];
        const auto value = sv.value(sig);
        if (!value) continue;  // cannot happen for active products; stay safe
        const std::size_t idx = series.size() - 1;
        const std::optional<double>& delta = lead_thresholds[li];
        const bool eligible = series.size() >= min_len && delta.has_value();

        bool flagged = false;
        std::optional<double> score;
        DetectorKind det = DetectorKind::cusum;
        if (kind == LeadKind::avg_rating_cusum) {
            const auto res = ps.cusum->step(
                *value, eligible ? delta : std::optional<double>{});
            if (res.valid) score = res.score;
            flagged = res.flagged;
        } else {
            det = DetectorKind::global_ar;
            SdarModel* model = nullptr;
            for (auto& [k, m] : ps.lead_models) {
                if (k == kind) model = &m;
            }
            ++counters_.lead_model_updates;
            score = model->step(*value);
            flagged = eligible && score && *score > *delta && idx >= 1 &&
                      sem_sus(sig, *value, series.value_at(idx - 1));
        }
        if (score) {
            series.set_score(idx, *score);
            if (series.size() >= min_len) {
                for (auto& [k, dist] : lead_staging_) {
                    if (k == kind) dist.push_back(*score);
                }
            }
        }
        if (flagged) {
            ps.last_alarm = window;
            ++counters_.lead_alarms;
            if (!series.labeled(idx)) {
                series.set_label(idx);
                new_records.push_back(
                    AnomalyRecord{id, sig, window, score.value_or(0.0), 1, det, *delta});
            }
            pending_alarm_exports_.emplace_back(id, window);
        }
    }
}

void Pipeline::run_support_detectors(
    const std::string& id, ProductState& ps, std::int64_t window, const SignalVector& sv,
    const std::array<std::optional<double>, kSignalCount>& thresholds,
    std::vector<AnomalyRecord>& new_records) {
    for (int s = 0; s < kSignalCount; ++s) {
        const auto sig = static_cast<SignalId>(s);
        if (is_lead_signal(sig)) continue;
        SupportContext ctx;
        ctx.signal = sig;
        ctx.product_id = &id;
        ctx.last_alarm = ps.last_alarm;
        ctx.threshold = thresholds[static_cast<std::size_t>(s)];
        ctx.config = &config_.detector;
        ctx.records = &new_records;
        ctx.staged_scores = &support_staging_[static_cast<std::size_t>(s)];
        ctx.skip_warnings = &counters_.skip_warnings;
        SignalSeries& series = ps.series[static_cast<std::size_t>(s)];
        const auto value = sv.value(sig);
        if (config_.mode == DetectorMode::global_ar) {
            ctx.fit_counter = &counters_.support_model_updates;
            ps.global_supports[static_cast<std::size_t>(s)].step(series, window, value, ctx);
        } else {
            ctx.fit_counter = &counters_.local_ar_fits;
            if (value) series.append(window, *value);
            ps.local_supports[static_cast<std::size_t>(s)].step(series, window, ctx);
        }
    }
}

void Pipeline::close_window(std::int64_t window) {
    ++counters_.windows_closed;

    // Thresholds are read once per barrier from the pooled distributions as
    // of the previous barrier, so per-product processing order cannot leak
    // into results.
    std::array<std::optional<double>, kSignalCount> support_thresholds;
    for (int s = 0; s < kSignalCount; ++s) {
        const auto& dist = support_dists_[static_cast<std::size_t>(s)];
        if (dist.count() >= config_.detector.warmup_min_scores) {
            support_thresholds[static_cast<std::size_t>(s)] =
                cantelli_threshold(dist, config_.detector.eta);
        }
    }
    std::vector<std::optional<double>> lead_thresholds(config_.detector.leads.size());
    for (std::size_t li = 0; li < lead_dists_.size(); ++li) {
        const auto& dist = lead_dists_[li].second;
        if (dist.count() >= config_.detector.warmup_min_scores) {
            lead_thresholds[li] = cantelli_threshold(dist, config_.detector.eta);
        }
    }

    for (auto& v : support_staging_) v.clear();
    lead_staging_.clear();
    for (auto kind : config_.detector.leads) {
        lead_staging_.emplace_back(kind, std::vector<double>{});
    }

    std::vector<AnomalyRecord> new_records;
    std::vector<std::pair<const std::string*, const SignalVector*>> closed;
    std::vector<SignalVector> vectors;
    vectors.reserve(products_.size());

    for (auto& [id, ps] : products_) {
        const WindowUserStats stats = registry_.close_window_user_stats(
            id, WindowIndex{window, config_.delta_t, origin_});
        vectors.push_back(spamwatch::close_window(ps.cumulative, ps.pending, stats,
                                                  config_.delta_t));
        ps.pending.clear();
        if (report_) report_->signal_row(id, window, vectors.back());
        // The signal pass owns series bookkeeping; detectors only analyze.
        for (int s = 0; s < kSignalCount; ++s) {
            if (const auto value = vectors.back().value(static_cast<SignalId>(s))) {
                ps.series[static_cast<std::size_t>(s)].append(window, *value);
            }
        }
    }

    std::size_t i = 0;
    for (auto& [id, ps] : products_) {
        run_lead_detectors(id, ps, window, vectors[i], lead_thresholds, new_records);
        ++i;
    }

    const auto t0 = std::chrono::steady_clock::now();
    i = 0;
    for (auto& [id, ps] : products_) {
        run_support_detectors(id, ps, window, vectors[i], support_thresholds, new_records);
        ++i;
    }
    counters_.support_stage_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    // Label bookkeeping: history counts feed f4's weights, support tallies
    // feed the detected-cell export.
    for (const auto& rec : new_records) {
        records_.push_back(rec);
        ++counters_.labels;
        ProductState& ps = products_.at(rec.product_id);
        ps.label_counts[static_cast<std::size_t>(rec.signal)] += 1;
        if (!is_lead_signal(rec.signal)) {
            const auto key = std::make_pair(rec.product_id, rec.window);
            const int count = ++support_label_tally_[key];
            if (count == config_.min_support_labels) {
                cells_.push_back({rec.product_id, rec.window});
                if (report_) {
                    const auto& lead_series = products_.at(rec.product_id)
                        .series[static_cast<std::size_t>(lead_signal(config_.detector.leads[0]))];
                    const auto idx = lead_series.index_of(rec.window);
                    const bool lead_alarm = idx && lead_series.labeled(*idx);
                    report_->detected_cell(rec.product_id, rec.window, count, lead_alarm);
                }
            }
        }
    }
    if (report_) {
        for (const auto& rec : new_records) report_->anomaly(rec);
    }

    score_window(window);

    for (int s = 0; s < kSignalCount; ++s) {
        auto& staged = support_staging_[static_cast<std::size_t>(s)];
        counters_.support_scored_points += staged.size();
        for (double v : staged) support_dists_[static_cast<std::size_t>(s)].add(v);
    }
    for (auto& [kind, staged] : lead_staging_) {
        for (auto& [dk, dist] : lead_dists_) {
            if (dk == kind) {
                for (double v : staged) dist.add(v);
            }
        }
    }

    if (report_) {
        flush_score_rows(window - 5);
        emit_daily_counts(window, false);
        report_->flush();
    }

    last_closed_window_ = window;

    if (config_.snapshot_every > 0 && !config_.snapshot_path.empty() &&
        (window + 1) % config_.snapshot_every == 0) {
        std::ofstream out(config_.snapshot_path, std::ios::app);
        if (!out) throw ConfigError("cannot open snapshot file '" + config_.snapshot_path + "'");
        save_state(out);
    }
}

void Pipeline::score_window(std::int64_t window) {
    RankedWindow ranked;
    ranked.window = window;
    ranked.ordered.reserve(products_.size());
    for (const auto& [id, ps] : products_) {
        std::array<WindowSignalOutcome, kSignalCount> outcomes;
        for (int s = 0; s < kSignalCount; ++s) {
            const SignalSeries& series = ps.series[static_cast<std::size_t>(s)];
            auto& o = outcomes[static_cast<std::size_t>(s)];
            if (const auto idx = series.index_of(window)) {
                if (series.has_score(*idx)) o.score = series.score_at(*idx);
                o.labeled = series.labeled(*idx);
            }
            o.historical_labels = ps.label_counts[static_cast<std::size_t>(s)];
        }
        ProductScore score;
        score.product_id = id;
        score.window = window;
        compute_features(outcomes, score);
        ranked.ordered.push_back(std::move(score));
    }

    for (int g = 0; g < 4; ++g) {
        std::vector<double> batch;
        batch.reserve(ranked.ordered.size());
        for (const auto& s : ranked.ordered) batch.push_back(s.raw(g));
        ecdf_[static_cast<std::size_t>(g)].insert_batch(std::move(batch));
        for (auto& s : ranked.ordered) {
            s.set_normalized(g, ecdf_[static_cast<std::size_t>(g)].query(s.raw(g)));
        }
    }
    for (auto& s : ranked.ordered) s.A = (s.F1 + s.F2 + s.F3 + s.F4) / 4.0;
    product_rank(ranked.ordered);

    if (report_) {
        const int limit = std::min<int>(config_.top_n, static_cast<int>(ranked.ordered.size()));
        for (int r = 0; r < limit; ++r) {
            report_->ranking_row(window, r + 1, ranked.ordered[static_cast<std::size_t>(r)]);
        }
        report_->ranking_summary(
            window, std::vector<ProductScore>(ranked.ordered.begin(),
                                              ranked.ordered.begin() + limit));
    }
    rankings_.push_back(std::move(ranked));
}

void Pipeline::flush_score_rows(std::int64_t through_window) {
    if (!report_) return;
    for (std::int64_t w = scores_flushed_through_ + 1; w <= through_window; ++w) {
        if (w < 0) continue;
        for (const auto& [id, ps] : products_) {
            if (ps.first_window < 0 || ps.first_window > w) continue;
            std::array<std::optional<double>, kSignalCount> scores;
            for (int s = 0; s < kSignalCount; ++s) {
                const SignalSeries& series = ps.series[static_cast<std::size_t>(s)];
                if (const auto idx = series.index_of(w)) {
                    if (series.has_score(*idx)) {
                        scores[static_cast<std::size_t>(s)] = series.score_at(*idx);
                    }
                }
            }
            report_->score_row(id, w, scores);
        }
    }
    if (through_window > scores_flushed_through_) scores_flushed_through_ = through_window;
}

void Pipeline::emit_daily_counts(std::int64_t barrier_window, bool final_flush) {
    if (!report_) {
        pending_alarm_exports_.clear();
        return;
    }
    auto emit = [&](const std::string& id, std::int64_t alarm) {
        const ProductState& ps = products_.at(id);
        const std::int64_t from_sec = (alarm - 1) * config_.delta_t;
        const std::int64_t to_sec = (alarm + 2) * config_.delta_t;
        const std::int64_t from_day = from_sec / kSecondsPerDay;
        const std::int64_t to_day = (to_sec + kSecondsPerDay - 1) / kSecondsPerDay;
        for (std::int64_t d = std::max<std::int64_t>(from_day, 0); d < to_day; ++d) {
            auto it = ps.daily_counts.find(d);
            if (it == ps.daily_counts.end()) continue;
            report_->daily_count_row(id, alarm, d, it->second);
        }
    };
    std::vector<std::pair<std::string, std::int64_t>> remaining;
    for (const auto& [id, alarm] : pending_alarm_exports_) {
        // The week after the alarm must be complete before the export.
        if (final_flush || alarm + 1 <= barrier_window) {
            emit(id, alarm);
        } else {
            remaining.push_back({id, alarm});
        }
    }
    pending_alarm_exports_ = std::move(remaining);

    // Prune daily counters no longer reachable by any future alarm export.
    const std::int64_t keep_from_sec = (barrier_window - 1) * config_.delta_t;
    const std::int64_t keep_from_day = keep_from_sec / kSecondsPerDay;
    if (!final_flush) {
        for (auto& [id, ps] : products_) {
            auto& dc = ps.daily_counts;
            dc.erase(dc.begin(), dc.lower_bound(keep_from_day));
        }
    }
}

void Pipeline::finish() {
    if (finished_) return;
    if (current_window_ >= 0) {
        close_window(current_window_);
    }
    if (report_) {
        flush_score_rows(last_closed_window_);
        emit_daily_counts(last_closed_window_, true);
        report_->run_summary(run_summary_json());
        report_->flush();
    }
    finished_ = true;
}

std::string Pipeline::run_summary_json() const {
    nlohmann::json j;
    j["config"] = nlohmann::json::parse(config_.echo_json());
    j["reviews"] = counters_.reviews;
    j["windows_closed"] = counters_.windows_closed;
    j["products"] = products_.size();
    j["users"] = registry_.user_count();
    j["lead_alarms"] = counters_.lead_alarms;
    j["lead_model_updates"] = counters_.lead_model_updates;
    j["support_model_updates"] = counters_.support_model_updates;
    j["local_ar_fits"] = counters_.local_ar_fits;
    j["support_scored_points"] = counters_.support_scored_points;
    j["labels"] = counters_.labels;
    j["detected_cells"] = cells_.size();
    j["skip_warnings"] = counters_.skip_warnings;
    j["last_closed_window"] = last_closed_window_;
    return j.dump(2);
}

RunCounters run_pipeline_on_file(PipelineConfig config) {
    std::ifstream in(config.input_path);
    if (!in) throw ConfigError("cannot open input file '" + config.input_path + "'");
    const StreamFormat format = config.format;
    const bool header = config.csv_header;
    Pipeline pipeline(std::move(config));
    read_stream(in, format, header,
                [&](const ReviewUnit& r) { pipeline.feed(r); });
    pipeline.finish();
    return pipeline.counters();
}

void feed_all(Pipeline& pipeline, const std::vector<ReviewUnit>& reviews) {
    for (const auto& r : reviews) pipeline.feed(r);
}

}  // namespace spamwatch
