#include "spamwatch/parse.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include <json.hpp>

namespace spamwatch {

namespace {

std::int64_t parse_int_field(const std::string& text, std::size_t line_no,
                             const char* field) {
    std::int64_t value = 0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || text.empty()) {
        throw ParseError(line_no, field, "not an integer: '" + text + "'");
    }
    return value;
}

void validate_unit(ReviewUnit& r, std::size_t line_no) {
    if (r.user_id.empty()) throw ParseError(line_no, "user_id", "must be nonempty");
    if (r.product_id.empty()) throw ParseError(line_no, "product_id", "must be nonempty");
    if (r.timestamp < 0) throw ParseError(line_no, "timestamp", "must be nonnegative");
    if (r.rating < 1 || r.rating > 5) {
        throw ParseError(line_no, "rating", "rating out of range: " + std::to_string(r.rating));
    }
}

ReviewUnit parse_jsonl(const std::string& line, std::size_t line_no) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(line_no, "<record>", std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(line_no, "<record>", "not a JSON object");

    ReviewUnit r;
    auto get = [&](const char* key) -> const nlohmann::json& {
        auto it = j.find(key);
        if (it == j.end()) throw ParseError(line_no, key, "missing field");
        return *it;
    };
    const auto& uid = get("user_id");
    if (!uid.is_string()) throw ParseError(line_no, "user_id", "must be a string");
    r.user_id = uid.get<std::string>();

    const auto& pid = get("product_id");
    if (!pid.is_string()) throw ParseError(line_no, "product_id", "must be a string");
    r.product_id = pid.get<std::string>();

    const auto& ts = get("timestamp");
    if (!ts.is_number_integer()) throw ParseError(line_no, "timestamp", "must be an integer");
    r.timestamp = ts.get<std::int64_t>();

    const auto& rating = get("rating");
    if (!rating.is_number_integer()) throw ParseError(line_no, "rating", "must be an integer");
    r.rating = rating.get<int>();

    if (auto it = j.find("text"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) throw ParseError(line_no, "text", "must be a string");
        r.text = it->get<std::string>();
    }
    validate_unit(r, line_no);
    return r;
}

ReviewUnit parse_csv(const std::string& line, std::size_t line_no) {
    auto fields = split_csv_fields(line);
    if (fields.size() < 4) {
        throw ParseError(line_no, "<record>",
                         "expected at least 4 CSV fields, got " + std::to_string(fields.size()));
    }
    ReviewUnit r;
    r.user_id = fields[0];
    r.product_id = fields[1];
    r.timestamp = parse_int_field(fields[2], line_no, "timestamp");
    auto rating = parse_int_field(fields[3], line_no, "rating");
    if (rating < 1 || rating > 5) {
        throw ParseError(line_no, "rating", "rating out of range: " + std::to_string(rating));
    }
    r.rating = static_cast<int>(rating);
    if (fields.size() >= 5 && !fields[4].empty()) r.text = fields[4];
    validate_unit(r, line_no);
    return r;
}

}  // namespace

StreamFormat parse_format(const std::string& name) {
    if (name == "jsonl") return StreamFormat::jsonl;
    if (name == "csv") return StreamFormat::csv;
    throw ConfigError("unknown stream format '" + name + "' (expected jsonl or csv)");
}

const char* format_name(StreamFormat f) {
    return f == StreamFormat::jsonl ? "jsonl" : "csv";
}

std::vector<std::string> split_csv_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"' && current.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

ReviewUnit parse_review_line(const std::string& line, StreamFormat format,
                             std::size_t line_no) {
    return format == StreamFormat::jsonl ? parse_jsonl(line, line_no)
                                         : parse_csv(line, line_no);
}

std::string serialize_review(const ReviewUnit& r, StreamFormat format) {
    if (format == StreamFormat::jsonl) {
        nlohmann::json j{{"user_id", r.user_id},
                         {"product_id", r.product_id},
                         {"timestamp", r.timestamp},
                         {"rating", r.rating}};
        if (r.text) j["text"] = *r.text;
        return j.dump();
    }
    std::string out = csv_escape(r.user_id) + "," + csv_escape(r.product_id) + "," +
                      std::to_string(r.timestamp) + "," + std::to_string(r.rating);
    out.push_back(',');
    if (r.text) out += csv_escape(*r.text);
    return out;
}

namespace {

std::size_t read_lines(std::istream& in, StreamFormat format, bool csv_header,
                       bool enforce_order,
                       const std::function<void(const ReviewUnit&)>& sink) {
    OrderingValidator order;
    std::string line;
    std::size_t line_no = 0;
    std::size_t records = 0;
    bool skip_header = format == StreamFormat::csv && csv_header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (skip_header) {
            skip_header = false;
            continue;
        }
        ReviewUnit r = parse_review_line(line, format, line_no);
        if (enforce_order) order.check(r);
        sink(r);
        ++records;
    }
    return records;
}

}  // namespace

std::size_t read_stream(std::istream& in, StreamFormat format, bool csv_header,
                        const std::function<void(const ReviewUnit&)>& sink) {
    return read_lines(in, format, csv_header, true, sink);
}

std::size_t read_stream_unordered(std::istream& in, StreamFormat format, bool csv_header,
                                  const std::function<void(const ReviewUnit&)>& sink) {
    return read_lines(in, format, csv_header, false, sink);
}

void sort_stream_file(const std::string& input, const std::string& output,
                      StreamFormat format, bool csv_header) {
    std::ifstream in(input);
    if (!in) throw ConfigError("cannot open input file '" + input + "'");
    std::vector<ReviewUnit> all;
    read_stream_unordered(in, format, csv_header,
                          [&](const ReviewUnit& r) { all.push_back(r); });
    std::stable_sort(all.begin(), all.end(),
                     [](const ReviewUnit& a, const ReviewUnit& b) {
                         return a.timestamp < b.timestamp;
                     });
    std::ofstream out(output);
    if (!out) throw ConfigError("cannot open output file '" + output + "'");
    if (format == StreamFormat::csv && csv_header) {
        out << "user_id,product_id,timestamp,rating,text\n";
    }
    for (const auto& r : all) out << serialize_review(r, format) << '\n';
}

}  // namespace spamwatch
