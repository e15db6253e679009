#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pushmix {

enum class EventKind { Purchase, View };

const char* to_string(EventKind kind);

struct InteractionEvent {
    std::string user_id;
    std::string item_id;
    std::string category_id;
    EventKind kind = EventKind::Purchase;
    std::int64_t timestamp = 0;  // epoch seconds, > 0

    bool operator==(const InteractionEvent&) const = default;
};

struct PushImpression {
    std::string user_id;
    std::string anchor_item_id;  // the purchased product
    std::string pushed_item_id;  // the recommended product
    int opened = 0;              // 0 or 1
    std::int64_t timestamp = 0;

    bool operator==(const PushImpression&) const = default;
};

// Raised in strict mode on the first malformed line.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct LineError {
    std::size_t line = 0;  // 1-based
    std::string message;
};

template <class Record>
struct ParseResult {
    std::vector<Record> records;
    std::vector<LineError> errors;

    std::size_t skipped() const noexcept { return errors.size(); }
};

// JSON-lines readers. Every input line is either parsed or counted as
// skipped, blank lines included.
ParseResult<InteractionEvent> parse_events(std::istream& in, bool strict = false);
ParseResult<PushImpression> parse_impressions(std::istream& in, bool strict = false);

// File overloads throw std::runtime_error when the file cannot be opened.
ParseResult<InteractionEvent> parse_events_file(const std::filesystem::path& path, bool strict = false);
ParseResult<PushImpression> parse_impressions_file(const std::filesystem::path& path, bool strict = false);

std::string to_json_line(const InteractionEvent& event);
std::string to_json_line(const PushImpression& impression);

void write_events(std::ostream& out, std::span<const InteractionEvent> events);
void write_impressions(std::ostream& out, std::span<const PushImpression> impressions);

// Records with start <= timestamp < end, input order kept.
template <class Record>
std::vector<Record> filter_window(std::span<const Record> records, std::int64_t start, std::int64_t end) {
    if (start > end) {
        throw std::invalid_argument("filter_window: start must not exceed end");
    }
    std::vector<Record> out;
    for (const auto& r : records) {
        if (r.timestamp >= start && r.timestamp < end) {
            out.push_back(r);
        }
    }
    return out;
}

template <class Record>
std::vector<Record> filter_window(const std::vector<Record>& records, std::int64_t start, std::int64_t end) {
    return filter_window(std::span<const Record>(records), start, end);
}

}  // namespace pushmix
