#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "spamwatch/detectors.hpp"
#include "spamwatch/scoring.hpp"
#include "spamwatch/signals.hpp"

namespace spamwatch {

std::string format_double(double v);

// Streaming export sink. Every CSV starts with a '# config: ...' provenance
// line and a header row; rows are appended at window barriers in a
// deterministic order, so a run over a stream prefix produces byte-for-byte
// prefixes of the full run's files.
class ReportWriter {
public:
    // `dir` is created if missing. `config_echo` is a single-line JSON echo
    // of the effective configuration.
    ReportWriter(const std::string& dir, const std::string& config_echo);

    void signal_row(const std::string& product_id, std::int64_t window, const SignalVector& v);
    void score_row(const std::string& product_id, std::int64_t window,
                   const std::array<std::optional<double>, kSignalCount>& scores);
    void anomaly(const AnomalyRecord& record);
    void ranking_row(std::int64_t window, int rank, const ProductScore& score);
    void ranking_summary(std::int64_t window, const std::vector<ProductScore>& top);
    void detected_cell(const std::string& product_id, std::int64_t window,
                       int support_labels, bool lead_alarm);
    // Daily per-rating counts around an alarm window (the week before,
    // during, and after), for external stacked-bar plotting.
    void daily_count_row(const std::string& product_id, std::int64_t alarm_window,
                         std::int64_t day, const std::array<std::int64_t, 5>& counts);
    void run_summary(const std::string& json_text);

    void flush();

private:
    std::ofstream signals_;
    std::ofstream scores_;
    std::ofstream anomalies_;
    std::ofstream ranking_;
    std::ofstream ranking_summary_;
    std::ofstream cells_;
    std::ofstream daily_;
    std::string dir_;
};

}  // namespace spamwatch
