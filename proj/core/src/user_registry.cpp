#include "spamwatch/user_registry.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "spamwatch/errors.hpp"

namespace spamwatch {

void UserRegistry::set_windowing(std::int64_t origin, std::int64_t delta_t) {
    if (delta_t <= 0) throw ConfigError("registry windowing: delta_t must be positive");
    if (windowing_set_ && (origin != origin_ || delta_t != delta_t_)) {
        throw std::logic_error("registry windowing cannot change mid-stream");
    }
    origin_ = origin;
    delta_t_ = delta_t;
    windowing_set_ = true;
}

UserObservation UserRegistry::observe_review(const ReviewUnit& review) {
    if (!windowing_set_) throw std::logic_error("registry windowing not configured");
    if (review.timestamp < last_timestamp_) {
        throw std::logic_error("registry fed out of order (ingest contract violated)");
    }
    last_timestamp_ = review.timestamp;
    ++observed_;

    UserObservation obs;
    auto [it, inserted] = users_.try_emplace(review.user_id);
    UserRecord& rec = it->second;
    if (inserted) {
        rec.first_review_time = review.timestamp;
        rec.first_review_product = review.product_id;
        rec.total_review_count = 1;
        obs.is_users_first_review = true;
        obs.account_age_at_post = 0;
    } else {
        rec.total_review_count += 1;
        obs.is_users_first_review = false;
        obs.account_age_at_post = review.timestamp - rec.first_review_time;
    }

    const std::int64_t w = (review.timestamp - origin_) / delta_t_;
    ProductWindowState& pw = product_windows_[review.product_id];
    if (w <= pw.last_closed) {
        throw std::logic_error("review for already-closed window " + std::to_string(w) +
                               " of product '" + review.product_id + "'");
    }
    if (pw.window_index != w) {
        if (pw.window_index > w) {
            throw std::logic_error("registry window index moved backwards");
        }
        if (!pw.reviewers.empty() && pw.window_index >= 0) {
            throw std::logic_error("window " + std::to_string(pw.window_index) +
                                   " of product '" + review.product_id +
                                   "' was never closed");
        }
        pw.window_index = w;
        pw.reviewers.clear();
    }
    if (std::find(pw.reviewers.begin(), pw.reviewers.end(), review.user_id) ==
        pw.reviewers.end()) {
        pw.reviewers.push_back(review.user_id);
    }
    return obs;
}

WindowUserStats UserRegistry::close_window_user_stats(const std::string& product_id,
                                                      const WindowIndex& window) {
    WindowUserStats stats;
    auto it = product_windows_.find(product_id);
    if (it == product_windows_.end()) {
        return stats;  // product never reviewed: zeros
    }
    ProductWindowState& pw = it->second;
    if (window.index <= pw.last_closed) {
        throw std::logic_error("duplicate close of window " + std::to_string(window.index) +
                               " for product '" + product_id + "'");
    }
    if (pw.window_index >= 0 && pw.window_index < window.index) {
        throw std::logic_error("window " + std::to_string(pw.window_index) + " of product '" +
                               product_id + "' skipped without close");
    }
    if (pw.window_index == window.index) {
        for (const auto& uid : pw.reviewers) {
            const UserRecord& rec = users_.at(uid);
            const bool first_in_window = rec.first_review_time >= window.start() &&
                                         rec.first_review_time < window.end();
            if (first_in_window) {
                stats.first_timer_count += 1;
                if (rec.total_review_count == 1) stats.singleton_count += 1;
            }
        }
        pw.reviewers.clear();
        pw.window_index = -1;
    }
    pw.last_closed = window.index;
    return stats;
}

const UserRecord* UserRegistry::find(const std::string& user_id) const {
    auto it = users_.find(user_id);
    return it == users_.end() ? nullptr : &it->second;
}

void UserRegistry::save_snapshot(std::ostream& out) const {
    nlohmann::json j;
    j["format"] = "spamwatch-user-registry";
    j["version"] = 1;
    j["origin"] = origin_;
    j["delta_t"] = delta_t_;
    j["windowing_set"] = windowing_set_;
    j["observed"] = observed_;
    j["last_timestamp"] = last_timestamp_;

    std::vector<std::string> ids;
    ids.reserve(users_.size());
    for (const auto& [id, _] : users_) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    nlohmann::json users = nlohmann::json::array();
    for (const auto& id : ids) {
        const UserRecord& rec = users_.at(id);
        users.push_back({{"id", id},
                         {"t0", rec.first_review_time},
                         {"n", rec.total_review_count},
                         {"p0", rec.first_review_product}});
    }
    j["users"] = std::move(users);

    std::vector<std::string> pids;
    for (const auto& [id, _] : product_windows_) pids.push_back(id);
    std::sort(pids.begin(), pids.end());
    nlohmann::json pws = nlohmann::json::array();
    for (const auto& id : pids) {
        const ProductWindowState& pw = product_windows_.at(id);
        pws.push_back({{"id", id},
                       {"window", pw.window_index},
                       {"last_closed", pw.last_closed},
                       {"reviewers", pw.reviewers}});
    }
    j["product_windows"] = std::move(pws);
    out << j.dump() << '\n';
}

UserRegistry UserRegistry::load_snapshot(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid registry snapshot: ") + e.what());
    }
    if (j.value("format", "") != "spamwatch-user-registry") {
        throw ConfigError("not a registry snapshot file");
    }
    if (j.value("version", 0) != 1) {
        throw ConfigError("unsupported registry snapshot version");
    }
    UserRegistry reg;
    reg.origin_ = j.at("origin").get<std::int64_t>();
    reg.delta_t_ = j.at("delta_t").get<std::int64_t>();
    reg.windowing_set_ = j.at("windowing_set").get<bool>();
    reg.observed_ = j.at("observed").get<std::int64_t>();
    reg.last_timestamp_ = j.at("last_timestamp").get<std::int64_t>();
    for (const auto& u : j.at("users")) {
        UserRecord rec;
        rec.first_review_time = u.at("t0").get<std::int64_t>();
        rec.total_review_count = u.at("n").get<std::int64_t>();
        rec.first_review_product = u.at("p0").get<std::string>();
        reg.users_.emplace(u.at("id").get<std::string>(), std::move(rec));
    }
    for (const auto& p : j.at("product_windows")) {
        ProductWindowState pw;
        pw.window_index = p.at("window").get<std::int64_t>();
        pw.last_closed = p.at("last_closed").get<std::int64_t>();
        pw.reviewers = p.at("reviewers").get<std::vector<std::string>>();
        reg.product_windows_.emplace(p.at("id").get<std::string>(), std::move(pw));
    }
    return reg;
}

bool UserRegistry::operator==(const UserRegistry& other) const {
    if (users_.size() != other.users_.size()) return false;
    for (const auto& [id, rec] : users_) {
        auto it = other.users_.find(id);
        if (it == other.users_.end() || !(it->second == rec)) return false;
    }
    if (product_windows_.size() != other.product_windows_.size()) return false;
    for (const auto& [id, pw] : product_windows_) {
        auto it = other.product_windows_.find(id);
        if (it == other.product_windows_.end()) return false;
        if (it->second.window_index != pw.window_index ||
            it->second.last_closed != pw.last_closed ||
            it->second.reviewers != pw.reviewers) {
            return false;
        }
    }
    return observed_ == other.observed_ && last_timestamp_ == other.last_timestamp_ &&
           windowing_set_ == other.windowing_set_ && origin_ == other.origin_ &&
           delta_t_ == other.delta_t_;
}

}  // namespace spamwatch
