#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace spamwatch {

// One review event. The atomic element of a stream; timestamps are epoch
// seconds and must be nondecreasing within a stream.
struct ReviewUnit {
    std::string user_id;
    std::string product_id;
    std::int64_t timestamp = 0;
    int rating = 0;  // 1..5
    std::optional<std::string> text;  // carried for export, never analyzed

    bool operator==(const ReviewUnit&) const = default;
};

// Fixed-length windowing of a timeline. A timestamp t maps to window
// floor((t - origin) / length); boundaries belong to the later window.
struct WindowIndex {
    std::int64_t index = 0;
    std::int64_t window_length_seconds = 0;
    std::int64_t origin = 0;

    std::int64_t start() const { return origin + index * window_length_seconds; }
    std::int64_t end() const { return start() + window_length_seconds; }

    bool operator==(const WindowIndex&) const = default;
};

inline WindowIndex assign_window(std::int64_t timestamp, std::int64_t origin,
                                 std::int64_t delta_t) {
    if (delta_t <= 0) {
        throw std::invalid_argument("window length must be positive");
    }
    if (timestamp < origin) {
        throw std::invalid_argument("timestamp " + std::to_string(timestamp) +
                                    " precedes window origin " + std::to_string(origin));
    }
    return WindowIndex{(timestamp - origin) / delta_t, delta_t, origin};
}

// Default origin policy: first timestamp of the stream, truncated down to
// midnight UTC, so runs are reproducible without a configured origin.
inline std::int64_t truncate_to_utc_midnight(std::int64_t timestamp) {
    constexpr std::int64_t kDay = 86400;
    if (timestamp >= 0) return (timestamp / kDay) * kDay;
    return -(((-timestamp) + kDay - 1) / kDay) * kDay;
}

}  // namespace spamwatch
