#include "pushmix/ingestion.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

namespace pushmix {

namespace {

using nlohmann::json;

std::string require_key(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw std::invalid_argument(std::string("missing or non-string field '") + key + "'");
    }
    auto value = it->get<std::string>();
    if (value.empty()) {
        throw std::invalid_argument(std::string("empty field '") + key + "'");
    }
    return value;
}

std::int64_t require_timestamp(const json& obj) {
    auto it = obj.find("timestamp");
    if (it == obj.end() || !it->is_number_integer()) {
        throw std::invalid_argument("missing or non-integer field 'timestamp'");
    }
    auto ts = it->get<std::int64_t>();
    if (ts <= 0) {
        throw std::invalid_argument("timestamp must be positive");
    }
    return ts;
}

InteractionEvent decode_event(const json& obj) {
    InteractionEvent e;
    e.user_id = require_key(obj, "user_id");
    e.item_id = require_key(obj, "item_id");
    e.category_id = require_key(obj, "category_id");
    auto kind = require_key(obj, "kind");
    if (kind == "purchase") {
        e.kind = EventKind::Purchase;
    } else if (kind == "view") {
        e.kind = EventKind::View;
    } else {
        throw std::invalid_argument("unknown kind '" + kind + "'");
    }
    e.timestamp = require_timestamp(obj);
    return e;
}

PushImpression decode_impression(const json& obj) {
    PushImpression p;
    p.user_id = require_key(obj, "user_id");
    p.anchor_item_id = require_key(obj, "anchor_item_id");
    p.pushed_item_id = require_key(obj, "pushed_item_id");
    auto it = obj.find("opened");
    if (it == obj.end() || !it->is_number_integer()) {
        throw std::invalid_argument("missing or non-integer field 'opened'");
    }
    auto opened = it->get<std::int64_t>();
    if (opened != 0 && opened != 1) {
        throw std::invalid_argument("opened must be 0 or 1");
    }
    p.opened = static_cast<int>(opened);
    p.timestamp = require_timestamp(obj);
    return p;
}

template <class Record, class Decode>
ParseResult<Record> parse_lines(std::istream& in, bool strict, Decode decode) {
    ParseResult<Record> result;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        try {
            auto obj = json::parse(line);
            if (!obj.is_object()) {
                throw std::invalid_argument("record is not a JSON object");
            }
            result.records.push_back(decode(obj));
        } catch (const std::exception& ex) {
            if (strict) {
                throw ParseError(lineno, ex.what());
            }
            result.errors.push_back({lineno, ex.what()});
        }
    }
    if (in.bad()) {
        throw std::runtime_error("read error on input stream");
    }
    return result;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return in;
}

}  // namespace

const char* to_string(EventKind kind) {
    return kind == EventKind::Purchase ? "purchase" : "view";
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

ParseResult<InteractionEvent> parse_events(std::istream& in, bool strict) {
    return parse_lines<InteractionEvent>(in, strict, decode_event);
}

ParseResult<PushImpression> parse_impressions(std::istream& in, bool strict) {
    return parse_lines<PushImpression>(in, strict, decode_impression);
}

ParseResult<InteractionEvent> parse_events_file(const std::filesystem::path& path, bool strict) {
    auto in = open_input(path);
    return parse_events(in, strict);
}

ParseResult<PushImpression> parse_impressions_file(const std::filesystem::path& path, bool strict) {
    auto in = open_input(path);
    return parse_impressions(in, strict);
}

std::string to_json_line(const InteractionEvent& e) {
    json obj = {{"user_id", e.user_id},
                {"item_id", e.item_id},
                {"category_id", e.category_id},
                {"kind", to_string(e.kind)},
                {"timestamp", e.timestamp}};
    return obj.dump();
}

std::string to_json_line(const PushImpression& p) {
    json obj = {{"user_id", p.user_id},
                {"anchor_item_id", p.anchor_item_id},
                {"pushed_item_id", p.pushed_item_id},
                {"opened", p.opened},
                {"timestamp", p.timestamp}};
    return obj.dump();
}

void write_events(std::ostream& out, std::span<const InteractionEvent> events) {
    for (const auto& e : events) {
        out << to_json_line(e) << '\n';
    }
}

void write_impressions(std::ostream& out, std::span<const PushImpression> impressions) {
    for (const auto& p : impressions) {
        out << to_json_line(p) << '\n';
    }
}

}  // namespace pushmix
