#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spamwatch/cusum.hpp"
#include "spamwatch/detectors.hpp"
#include "spamwatch/parse.hpp"
#include "spamwatch/report.hpp"
#include "spamwatch/scoring.hpp"
#include "spamwatch/signals.hpp"
#include "spamwatch/synth.hpp"
#include "spamwatch/user_registry.hpp"

namespace spamwatch {

struct PipelineConfig {
    std::string input_path;  // informational; feeding is caller-driven
    StreamFormat format = StreamFormat::jsonl;
    bool csv_header = false;
    std::int64_t delta_t = 604800;
    std::optional<std::int64_t> origin;  // absent: first timestamp, UTC-midnight aligned
    DetectorMode mode = DetectorMode::local_ar;
    DetectorConfig detector;
    int top_n = 20;
    std::string out_dir;  // empty: no file exports
    // A window becomes a detected cell once this many support signals are
    // labeled in it; the lead alarm alone is necessary but not sufficient.
    int min_support_labels = 2;
    std::int64_t snapshot_every = 0;  // windows between state snapshots; 0 = off
    std::string snapshot_path;

    std::string echo_json() const;  // single-line provenance echo
    void validate() const;
};

struct RunCounters {
    std::uint64_t reviews = 0;
    std::uint64_t windows_closed = 0;
    std::uint64_t lead_alarms = 0;
    std::uint64_t lead_model_updates = 0;
    std::uint64_t support_model_updates = 0;  // continuous-mode SDAR updates
    std::uint64_t local_ar_fits = 0;          // alarm-local window fits
    std::uint64_t support_scored_points = 0;
    std::uint64_t labels = 0;
    std::uint64_t skip_warnings = 0;
    double support_stage_seconds = 0.0;
};

// Per-product mutable state across the run.
struct ProductState {
    explicit ProductState(const DetectorConfig& cfg);

    std::int64_t first_window = -1;
    ProductCumulativeState cumulative;
    WindowAccumulator pending;
    std::array<SignalSeries, kSignalCount> series;
    std::optional<CusumDetector> cusum;
    std::vector<std::pair<LeadKind, SdarModel>> lead_models;
    std::int64_t last_alarm = kNoAlarm;
    std::array<GlobalArSupport, kSignalCount> global_supports;
    std::array<LocalArSupport, kSignalCount> local_supports;
    std::array<std::int64_t, kSignalCount> label_counts{};
    // day -> per-rating counts, pruned to the trailing characterization span
    std::map<std::int64_t, std::array<std::int64_t, 5>> daily_counts;
};

struct RankedWindow {
    std::int64_t window = 0;
    std::vector<ProductScore> ordered;  // descending suspiciousness
};

// Window-serial orchestration: ingest -> registry -> signals -> lead
// detectors -> support detectors -> scoring, with exports flushed at every
// window barrier.
class Pipeline {
public:
    explicit Pipeline(PipelineConfig config);
    ~Pipeline();

    Pipeline(Pipeline&&) noexcept;
    Pipeline& operator=(Pipeline&&) noexcept;

    // Records must arrive in nondecreasing timestamp order.
    void feed(const ReviewUnit& record);
    void finish();  // closes the last window and completes exports

    const PipelineConfig& config() const { return config_; }
    const RunCounters& counters() const { return counters_; }
    const UserRegistry& registry() const { return registry_; }
    const std::map<std::string, ProductState>& products() const { return products_; }
    const std::vector<AnomalyRecord>& anomaly_records() const { return records_; }
    const std::vector<DetectedCell>& detected_cells() const { return cells_; }
    const std::vector<RankedWindow>& rankings() const { return rankings_; }
    std::int64_t last_closed_window() const { return last_closed_window_; }
    std::string run_summary_json() const;

    // Full-state snapshot (registry, detectors, pools, ECDF) as one JSON
    // line; resuming replays identically for all later windows. On resume,
    // fed records from already-processed windows are skipped.
    void save_state(std::ostream& out) const;
    static Pipeline resume(PipelineConfig config, std::istream& snapshot);

private:
    friend struct PipelineSnapshotCodec;

    void ensure_origin(std::int64_t timestamp);
    ProductState& product(const std::string& id);
    void close_windows_through(std::int64_t window);
    void close_window(std::int64_t window);
    void run_lead_detectors(const std::string& id, ProductState& ps, std::int64_t window,
                            const SignalVector& sv,
                            const std::vector<std::optional<double>>& lead_thresholds,
                            std::vector<AnomalyRecord>& new_records);
    void run_support_detectors(const std::string& id, ProductState& ps, std::int64_t window,
                               const SignalVector& sv,
                               const std::array<std::optional<double>, kSignalCount>& thresholds,
                               std::vector<AnomalyRecord>& new_records);
    void score_window(std::int64_t window);
    void flush_score_rows(std::int64_t through_window);
    void emit_daily_counts(std::int64_t barrier_window, bool final_flush);
    bool is_lead_signal(SignalId id) const;

    PipelineConfig config_;
    RunCounters counters_;
    UserRegistry registry_;
    std::map<std::string, ProductState> products_;
    std::array<ScoreDistribution, kSignalCount> support_dists_;
    std::vector<std::pair<LeadKind, ScoreDistribution>> lead_dists_;
    std::array<std::vector<double>, kSignalCount> support_staging_;
    std::vector<std::pair<LeadKind, std::vector<double>>> lead_staging_;
    std::array<EcdfStore, 4> ecdf_;
    std::vector<AnomalyRecord> records_;
    std::vector<DetectedCell> cells_;
    std::vector<RankedWindow> rankings_;
    std::map<std::pair<std::string, std::int64_t>, int> support_label_tally_;
    std::vector<std::pair<std::string, std::int64_t>> pending_alarm_exports_;

    bool origin_set_ = false;
    std::int64_t origin_ = 0;
    std::int64_t current_window_ = -1;
    std::int64_t last_closed_window_ = -1;
    std::int64_t resume_through_ = -1;
    std::int64_t scores_flushed_through_ = -1;
    OrderingValidator order_;
    std::unique_ptr<ReportWriter> report_;
    bool finished_ = false;
};

// Convenience wrappers.
RunCounters run_pipeline_on_file(PipelineConfig config);
void feed_all(Pipeline& pipeline, const std::vector<ReviewUnit>& reviews);

}  // namespace spamwatch
