#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "spamwatch/ar.hpp"
#include "spamwatch/cusum.hpp"
#include "spamwatch/signals.hpp"
#include "spamwatch/threshold.hpp"

namespace spamwatch {

enum class DetectorKind { cusum, global_ar, local_ar };
const char* detector_name(DetectorKind k);

enum class LeadKind { avg_rating_cusum, total_count_ar, pos_count_ar, neg_count_ar };
const char* lead_name(LeadKind k);
LeadKind lead_from_name(const std::string& name);
SignalId lead_signal(LeadKind k);

enum class DetectorMode { global_ar, local_ar };
const char* mode_name(DetectorMode m);
DetectorMode mode_from_name(const std::string& name);

struct DetectorConfig {
    double discount_r = 0.01;        // SDAR forgetting
    int global_order = 4;            // k
    int local_search_window = 8;     // L
    double eta = 0.04;               // expected anomaly rate
    int lag_radius = 2;              // windows checked behind an alarm
    std::vector<LeadKind> leads{LeadKind::avg_rating_cusum};
    double cusum_kappa_factor = 0.5;
    int warmup_min_scores = 30;      // pooled-distribution warm-up
    double local_ridge = 1e-6;

    int min_series_length() const {
        return std::max(global_order, local_search_window) + 1;
    }
};

// One flagged point. label is always 1 on export; a record exists only for
// points whose score exceeded the threshold in the suspicious direction.
struct AnomalyRecord {
    std::string product_id;
    SignalId signal = SignalId::avg_rating;
    std::int64_t window = 0;
    double score = 0.0;
    int label = 1;
    DetectorKind detector = DetectorKind::global_ar;
    double threshold = 0.0;
};

// Direction predicate: a deviation counts only when it moves the way spam
// would move this signal; the average rating is suspicious on any change.
bool sem_sus(SignalId signal, double value, double previous);

// Present-only history of one signal of one product. Windows with absent
// values have no entry; scores are NaN until computed.
class SignalSeries {
public:
    void append(std::int64_t window, double value);
    std::size_t size() const { return windows_.size(); }
    bool empty() const { return windows_.empty(); }

    std::int64_t window_at(std::size_t i) const { return windows_[i]; }
    double value_at(std::size_t i) const { return values_[i]; }
    double score_at(std::size_t i) const { return scores_[i]; }
    bool has_score(std::size_t i) const;
    void set_score(std::size_t i, double s) { scores_[i] = s; }
    bool labeled(std::size_t i) const { return labels_[i] != 0; }
    void set_label(std::size_t i) { labels_[i] = 1; }

    // Index of the first point with window >= w.
    std::size_t lower_bound(std::int64_t w) const;
    std::optional<std::size_t> index_of(std::int64_t w) const;

    const std::vector<std::int64_t>& windows() const { return windows_; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& scores() const { return scores_; }
    const std::vector<std::uint8_t>& labels() const { return labels_; }
    void restore(std::vector<std::int64_t> w, std::vector<double> v, std::vector<double> s,
                 std::vector<std::uint8_t> l);

private:
    std::vector<std::int64_t> windows_;
    std::vector<double> values_;
    std::vector<double> scores_;
    std::vector<std::uint8_t> labels_;
};

inline constexpr std::int64_t kNoAlarm = std::numeric_limits<std::int64_t>::min();

// Shared inputs for one support-signal step.
struct SupportContext {
    SignalId signal = SignalId::avg_rating;
    const std::string* product_id = nullptr;
    std::int64_t last_alarm = kNoAlarm;       // t_a of this product's lead
    std::optional<double> threshold;          // pooled delta, absent in warm-up
    const DetectorConfig* config = nullptr;
    std::vector<AnomalyRecord>* records = nullptr;  // newly labeled points
    std::vector<double>* staged_scores = nullptr;   // fold into the pool at barrier
    std::uint64_t* fit_counter = nullptr;
    std::uint64_t* skip_warnings = nullptr;
};

// Support-signal analysis, continuous flavor: an SDAR model is updated and
// scored at every present value; labels are assigned around lead alarms.
// The series must already hold the window's value (the signal pass appends
// it); an absent value means no model update and no score, but the lag
// window behind a recent alarm is still examined.
class GlobalArSupport {
public:
    GlobalArSupport() = default;
    GlobalArSupport(int order, double discount) : model_(order, discount) {}

    void step(SignalSeries& series, std::int64_t window, const SupportContext& ctx);

    const SdarModel& model() const { return model_; }
    SdarModel& model() { return model_; }

private:
    SdarModel model_{1, 0.0};
};

// Support-signal analysis, alarm-local flavor: nothing is computed unless
// the lead alarmed within lag_radius windows; then an AR order is picked by
// one-step-ahead validation over the trailing search window, and only the
// points around the alarm are fitted, scored, and labeled. Scores are
// cached so a point is fitted at most once; the order is selected once per
// alarm. Both keep the fit count proportional to the alarm count.
class LocalArSupport {
public:
    void step(SignalSeries& series, std::int64_t window, const SupportContext& ctx);

    std::int64_t selection_alarm = kNoAlarm;
    int selected_order = 0;
};

// Labels every in-range, scored, unlabeled point whose score beats the
// threshold in the suspicious direction. Shared by both flavors.
void label_lag_window(SignalSeries& series, std::int64_t t_i, DetectorKind kind,
                      const SupportContext& ctx);

}  // namespace spamwatch
