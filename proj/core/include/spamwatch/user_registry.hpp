#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "spamwatch/review.hpp"

namespace spamwatch {

// Global per-user history. Singleton / first-timer / account-age signals
// depend on cross-product state, so this registry is fed by the single
// ordered reader and queried at window close.
struct UserRecord {
    std::int64_t first_review_time = 0;
    std::int64_t total_review_count = 0;
    std::string first_review_product;

    bool operator==(const UserRecord&) const = default;
};

struct UserObservation {
    bool is_users_first_review = false;
    std::int64_t account_age_at_post = 0;  // seconds; 0 for a first review
};

struct WindowUserStats {
    std::int64_t singleton_count = 0;    // first-ever AND only review as of close
    std::int64_t first_timer_count = 0;  // first-ever review (any product) in window

    bool operator==(const WindowUserStats&) const = default;
};

class UserRegistry {
public:
    // Must be called before the first observe_review; the pipeline derives
    // the origin from the stream head.
    void set_windowing(std::int64_t origin, std::int64_t delta_t);
    bool windowing_set() const { return windowing_set_; }
    std::int64_t origin() const { return origin_; }
    std::int64_t delta_t() const { return delta_t_; }

    // Reviews must arrive in global timestamp order (ingest contract).
    // Observing a review for a (product, window) that was already closed
    // throws: the incremental state is order-dependent.
    UserObservation observe_review(const ReviewUnit& review);

    // Singleton/first-timer counts for the distinct reviewers of `product_id`
    // within `window`, evaluated against user state as of the call (window
    // close). Must be called exactly once per (product, window); a duplicate
    // close throws. Products with no reviews in the window yield zeros.
    WindowUserStats close_window_user_stats(const std::string& product_id,
                                            const WindowIndex& window);

    const UserRecord* find(const std::string& user_id) const;
    std::size_t user_count() const { return users_.size(); }
    std::int64_t observed_reviews() const { return observed_; }

    // Versioned one-line JSON snapshot; round-trips exactly.
    void save_snapshot(std::ostream& out) const;
    static UserRegistry load_snapshot(std::istream& in);

    bool operator==(const UserRegistry& other) const;

private:
    struct ProductWindowState {
        std::int64_t window_index = -1;  // window currently accumulating
        std::int64_t last_closed = -1;
        std::vector<std::string> reviewers;  // distinct, in first-seen order
    };

    std::unordered_map<std::string, UserRecord> users_;
    std::unordered_map<std::string, ProductWindowState> product_windows_;
    std::int64_t observed_ = 0;
    std::int64_t last_timestamp_ = -1;
    bool windowing_set_ = false;
    std::int64_t origin_ = 0;
    std::int64_t delta_t_ = 0;
};

}  // namespace spamwatch
