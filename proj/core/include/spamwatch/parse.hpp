#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "spamwatch/errors.hpp"
#include "spamwatch/review.hpp"

namespace spamwatch {

enum class StreamFormat { jsonl, csv };

StreamFormat parse_format(const std::string& name);
const char* format_name(StreamFormat f);

// Parses one record. `line_no` is 1-based and used only for error reporting.
// JSONL: one object per line with keys user_id, product_id, timestamp,
// rating, text (optional). CSV: user_id,product_id,timestamp,rating,text
// in that order; text column may be omitted.
ReviewUnit parse_review_line(const std::string& line, StreamFormat format,
                             std::size_t line_no = 0);

std::string serialize_review(const ReviewUnit& r, StreamFormat format);

// Splits one CSV record honoring double-quoted fields ("" escapes a quote).
std::vector<std::string> split_csv_fields(const std::string& line);
std::string csv_escape(const std::string& field);

// Enforces the nondecreasing-timestamp contract of an ordered stream.
// Records pass through unchanged; ties keep input order. A regression
// aborts with the 1-based offending position.
class OrderingValidator {
public:
    const ReviewUnit& check(const ReviewUnit& r) {
        ++count_;
        if (count_ > 1 && r.timestamp < last_) {
            throw OrderingError(count_, r.timestamp, last_);
        }
        last_ = r.timestamp;
        return r;
    }

    std::size_t count() const { return count_; }

private:
    std::int64_t last_ = 0;
    std::size_t count_ = 0;
};

// Reads a whole stream file, invoking `sink` per validated record.
// Skips blank lines. Ordering is enforced; use read_stream_unordered for
// dumps that still need the offline sort utility.
std::size_t read_stream(std::istream& in, StreamFormat format, bool csv_header,
                        const std::function<void(const ReviewUnit&)>& sink);
std::size_t read_stream_unordered(std::istream& in, StreamFormat format, bool csv_header,
                                  const std::function<void(const ReviewUnit&)>& sink);

// Offline utility: load, stable-sort by timestamp, rewrite.
void sort_stream_file(const std::string& input, const std::string& output,
                      StreamFormat format, bool csv_header);

}  // namespace spamwatch
