#pragma once

#include <stdexcept>
#include <string>

namespace spamwatch {

// Malformed or invalid input record. Message carries line number and field.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& field, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": field '" + field +
                             "': " + what),
          line_(line), field_(field) {}

    std::size_t line() const { return line_; }
    const std::string& field() const { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

// Stream violates the nondecreasing-timestamp contract.
class OrderingError : public std::runtime_error {
public:
    OrderingError(std::size_t position, std::int64_t timestamp, std::int64_t previous)
        : std::runtime_error("record " + std::to_string(position) + ": timestamp " +
                             std::to_string(timestamp) + " precedes previous timestamp " +
                             std::to_string(previous)),
          position_(position) {}

    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

// Invalid configuration or scenario specification.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace spamwatch
