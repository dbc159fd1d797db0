#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spamwatch/review.hpp"

namespace spamwatch {

// Deterministic samplers on top of a fixed 64-bit engine, so equal seeds
// give byte-identical streams on any platform.
class SynthRng {
public:
    explicit SynthRng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

    std::uint64_t next_u64();
    double uniform();  // [0, 1)
    std::int64_t uniform_int(std::int64_t n);  // [0, n)
    std::int64_t poisson(double mean);
    int categorical(const std::array<double, 5>& probs);  // 0..4
    double normal();  // standard normal (Box-Muller, no cached spare)

private:
    std::uint64_t state_;
};

enum class ArrivalPattern { uniform, bursty_robotic };
enum class PoolActivity { uniform, zipf };

struct CampaignSpec {
    std::string target_product;
    std::int64_t start_window = 0;
    std::int64_t duration_windows = 1;
    std::int64_t reviews_per_window = 0;
    std::array<double, 5> rating_probs{0, 0, 0, 0, 1.0};
    double frac_singletons = 1.0;
    double frac_first_timers = 0.0;
    double frac_aged = 0.0;
    std::int64_t recurrence_period = 0;  // 0 = one-shot
    ArrivalPattern arrival = ArrivalPattern::uniform;
};

// Per-product deviation from the organic defaults; the rating distribution
// drifts linearly from probs_start to probs_end across the drift range.
struct ProductOverride {
    std::string product_id;
    double rate = 0.0;
    std::array<double, 5> probs_start{};
    std::array<double, 5> probs_end{};
    std::int64_t drift_start_window = 0;
    std::int64_t drift_end_window = 0;
};

struct ScenarioSpec {
    std::int64_t product_count = 0;
    std::int64_t window_count = 0;
    double organic_rate = 0.0;  // Poisson mean per product per window
    std::array<double, 5> organic_rating_probs{0.2, 0.2, 0.2, 0.2, 0.2};
    std::int64_t user_pool_size = 0;
    PoolActivity activity = PoolActivity::uniform;
    double zipf_exponent = 1.0;
    std::int64_t delta_t = 604800;
    std::int64_t base_time = 0;
    // Exact per-window counts, grid timestamps, and a fixed rating rotation
    // instead of sampling; used to pin operation-count experiments.
    bool deterministic_organic = false;
    std::vector<ProductOverride> overrides;
    std::vector<CampaignSpec> campaigns;

    std::string product_id(std::int64_t index) const;
    void validate() const;
};

struct GroundTruthCell {
    std::string product_id;
    std::int64_t window = 0;
    std::string campaign_id;

    bool operator==(const GroundTruthCell&) const = default;
};

struct GeneratedStream {
    std::vector<ReviewUnit> reviews;  // timestamp-ordered
    std::vector<GroundTruthCell> truth;
};

GeneratedStream generate(const ScenarioSpec& scenario, std::uint64_t seed);

// Scenario spec file: a flat JSON document.
ScenarioSpec scenario_from_json(const std::string& text);
ScenarioSpec load_scenario_file(const std::string& path);
std::string scenario_to_json(const ScenarioSpec& scenario);

void write_truth_csv(const std::string& path, const std::vector<GroundTruthCell>& truth);
std::vector<GroundTruthCell> read_truth_csv(const std::string& path);

struct DetectedCell {
    std::string product_id;
    std::int64_t window = 0;
};

struct OccurrenceResult {
    std::string campaign_id;
    std::string product_id;
    std::int64_t start_window = 0;
    bool detected = false;
    std::int64_t latency = 0;  // detected window - start, valid when detected
};

struct EvalMetrics {
    double precision = 1.0;  // 1.0 by convention when nothing was flagged
    double recall = 1.0;     // 1.0 when there is nothing to find
    std::int64_t detected_cells = 0;
    std::int64_t truth_cells = 0;
    std::int64_t matched_detected = 0;
    std::int64_t matched_truth = 0;
    std::vector<OccurrenceResult> occurrences;
};

// A detected cell matches ground truth when it lies within +-tolerance
// windows of a campaign cell of the same product.
EvalMetrics evaluate(const std::vector<DetectedCell>& detected,
                     const std::vector<GroundTruthCell>& truth, std::int64_t tolerance);

std::string metrics_to_json(const EvalMetrics& metrics);
std::vector<DetectedCell> read_detected_cells_csv(const std::string& path);

}  // namespace spamwatch
