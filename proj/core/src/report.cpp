#include "spamwatch/report.hpp"

#include <cstdio>
#include <filesystem>

#include <json.hpp>

#include "spamwatch/errors.hpp"

namespace spamwatch {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

namespace {

std::ofstream open_export(const std::string& dir, const char* name,
                          const std::string& config_echo, const char* header) {
    std::ofstream out(dir + "/" + name);
    if (!out) throw ConfigError("cannot open export file '" + dir + "/" + name + "'");
    if (header != nullptr) {
        out << "# config: " << config_echo << '\n' << header << '\n';
    }
    return out;
}

void put_opt(std::ofstream& out, const std::optional<double>& v) {
    out << ',';
    if (v) out << format_double(*v);
}

}  // namespace

ReportWriter::ReportWriter(const std::string& dir, const std::string& config_echo) : dir_(dir) {
    std::filesystem::create_directories(dir);
    signals_ = open_export(dir, "signals.csv", config_echo,
                           "product_id,window,avg_rating,review_count,pos_count,neg_count,"
                           "rating_entropy,singleton_ratio,first_timer_ratio,youth_score,"
                           "gap_entropy");
    scores_ = open_export(dir, "scores.csv", config_echo,
                          "product_id,window,avg_rating,review_count,pos_count,neg_count,"
                          "rating_entropy,singleton_ratio,first_timer_ratio,youth_score,"
                          "gap_entropy");
    anomalies_.open(dir + "/anomalies.jsonl");
    if (!anomalies_) throw ConfigError("cannot open export file '" + dir + "/anomalies.jsonl'");
    ranking_ = open_export(dir, "ranking.csv", config_echo,
                           "window,rank,product_id,A,F1,F2,F3,F4,f1,f2,f3,f4");
    ranking_summary_.open(dir + "/ranking_summary.jsonl");
    if (!ranking_summary_) {
        throw ConfigError("cannot open export file '" + dir + "/ranking_summary.jsonl'");
    }
    cells_ = open_export(dir, "detected_cells.csv", config_echo,
                         "product_id,window,support_labels,lead_alarm");
    daily_ = open_export(dir, "daily_counts.csv", config_echo,
                         "product_id,alarm_window,day,r1,r2,r3,r4,r5");
}

void ReportWriter::signal_row(const std::string& product_id, std::int64_t window,
                              const SignalVector& v) {
    signals_ << product_id << ',' << window;
    put_opt(signals_, v.avg_rating);
    signals_ << ',' << v.review_count << ',' << v.pos_count << ',' << v.neg_count;
    put_opt(signals_, v.rating_entropy);
    put_opt(signals_, v.singleton_ratio);
    put_opt(signals_, v.first_timer_ratio);
    put_opt(signals_, v.youth_score);
    put_opt(signals_, v.gap_entropy);
    signals_ << '\n';
}

void ReportWriter::score_row(const std::string& product_id, std::int64_t window,
                             const std::array<std::optional<double>, kSignalCount>& scores) {
    scores_ << product_id << ',' << window;
    for (const auto& s : scores) put_opt(scores_, s);
    scores_ << '\n';
}

void ReportWriter::anomaly(const AnomalyRecord& r) {
    nlohmann::json j{{"product_id", r.product_id},
                     {"signal", signal_name(r.signal)},
                     {"window", r.window},
                     {"score", r.score},
                     {"label", r.label},
                     {"detector", detector_name(r.detector)},
                     {"threshold", r.threshold}};
    anomalies_ << j.dump() << '\n';
}

void ReportWriter::ranking_row(std::int64_t window, int rank, const ProductScore& s) {
    ranking_ << window << ',' << rank << ',' << s.product_id << ',' << format_double(s.A)
             << ',' << format_double(s.F1) << ',' << format_double(s.F2) << ','
             << format_double(s.F3) << ',' << format_double(s.F4) << ','
             << format_double(s.f1) << ',' << format_double(s.f2) << ','
             << format_double(s.f3) << ',' << format_double(s.f4) << '\n';
}

void ReportWriter::ranking_summary(std::int64_t window, const std::vector<ProductScore>& top) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : top) {
        arr.push_back({{"product_id", s.product_id},
                       {"A", s.A},
                       {"F", {s.F1, s.F2, s.F3, s.F4}},
                       {"f", {s.f1, s.f2, s.f3, s.f4}}});
    }
    ranking_summary_ << nlohmann::json{{"window", window}, {"top", std::move(arr)}}.dump()
                     << '\n';
}

void ReportWriter::detected_cell(const std::string& product_id, std::int64_t window,
                                 int support_labels, bool lead_alarm) {
    cells_ << product_id << ',' << window << ',' << support_labels << ','
           << (lead_alarm ? 1 : 0) << '\n';
}

void ReportWriter::daily_count_row(const std::string& product_id, std::int64_t alarm_window,
                                   std::int64_t day, const std::array<std::int64_t, 5>& counts) {
    daily_ << product_id << ',' << alarm_window << ',' << day;
    for (auto c : counts) daily_ << ',' << c;
    daily_ << '\n';
}

void ReportWriter::run_summary(const std::string& json_text) {
    std::ofstream out(dir_ + "/run_summary.json");
    if (!out) throw ConfigError("cannot open export file '" + dir_ + "/run_summary.json'");
    out << json_text << '\n';
}

void ReportWriter::flush() {
    signals_.flush();
    scores_.flush();
    anomalies_.flush();
    ranking_.flush();
    ranking_summary_.flush();
    cells_.flush();
    daily_.flush();
}

}  // namespace spamwatch
