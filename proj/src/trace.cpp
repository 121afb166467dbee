#include "rke/trace.hpp"

#include <charconv>
#include <sstream>

namespace rke {

const char* to_string(TraceDir dir) {
    switch (dir) {
    case TraceDir::Tx: return "TX";
    case TraceDir::Rx: return "RX";
    case TraceDir::Act: return "ACT";
    case TraceDir::State: return "STATE";
    }
    return "?";
}

void Trace::set_role(std::string_view endpoint, std::string_view role) {
    for (auto& entry : roles_) {
        if (entry.endpoint == endpoint) {
            entry.role = std::string(role);
            return;
        }
    }
    roles_.push_back({std::string(endpoint), std::string(role)});
}

void Trace::set_param(std::string_view name, std::uint64_t value) {
    for (auto& entry : params_) {
        if (entry.name == name) {
            entry.value = value;
            return;
        }
    }
    params_.push_back({std::string(name), value});
}

void Trace::comment(std::string text) { comments_.push_back(std::move(text)); }

void Trace::log(Ms time, TraceDir dir, std::string_view endpoint, std::string_view detail) {
    records_.push_back({time, dir, std::string(endpoint), std::string(detail), 0});
}

void Trace::log_frame(Ms time, TraceDir dir, std::string_view endpoint,
                      std::span<const std::uint8_t> bytes) {
    log(time, dir, endpoint, to_hex(bytes));
}

std::string Trace::render() const {
    std::ostringstream out;
    for (const auto& text : comments_) out << "# " << text << '\n';
    for (const auto& role : roles_) {
        out << "# endpoint " << role.endpoint << " role " << role.role << '\n';
    }
    for (const auto& param : params_) {
        out << "# param " << param.name << ' ' << param.value << '\n';
    }
    for (const auto& rec : records_) {
        out << rec.time << ' ' << to_string(rec.dir) << ' ' << rec.endpoint << ' ' << rec.detail
            << '\n';
    }
    return out.str();
}

std::optional<std::string> ParsedTrace::role_of(std::string_view endpoint) const {
    for (const auto& entry : roles) {
        if (entry.endpoint == endpoint) return entry.role;
    }
    return std::nullopt;
}

std::uint64_t ParsedTrace::param_or(std::string_view name, std::uint64_t fallback) const {
    for (const auto& entry : params) {
        if (entry.name == name) return entry.value;
    }
    return fallback;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && line[pos] == ' ') ++pos;
        std::size_t end = pos;
        while (end < line.size() && line[end] != ' ') ++end;
        if (end > pos) fields.push_back(line.substr(pos, end - pos));
        pos = end;
    }
    return fields;
}

std::optional<TraceDir> parse_dir(std::string_view token) {
    if (token == "TX") return TraceDir::Tx;
    if (token == "RX") return TraceDir::Rx;
    if (token == "ACT") return TraceDir::Act;
    if (token == "STATE") return TraceDir::State;
    return std::nullopt;
}

} // namespace

TraceParseResult parse_trace(std::string_view text) {
    ParsedTrace parsed;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    Ms last_time = 0;
    while (pos <= text.size()) {
        if (pos == text.size()) break;
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto fields = split_fields(line.substr(1));
            if (fields.size() == 4 && fields[0] == "endpoint" && fields[2] == "role") {
                parsed.roles.push_back({std::string(fields[1]), std::string(fields[3])});
            } else if (fields.size() == 3 && fields[0] == "param") {
                std::uint64_t value = 0;
                const auto [end, ec] =
                    std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), value);
                if (ec != std::errc{} || end != fields[2].data() + fields[2].size()) {
                    return {std::nullopt, {line_no, "bad param value: " + std::string(fields[2])}};
                }
                parsed.params.push_back({std::string(fields[1]), value});
            }
            continue; // other comments carry no structure
        }
        auto fields = split_fields(line);
        if (fields.size() != 4) {
            return {std::nullopt, {line_no, "expected 4 fields: <time> <dir> <endpoint> <detail>"}};
        }
        Ms time = 0;
        const auto [end, ec] =
            std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), time);
        if (ec != std::errc{} || end != fields[0].data() + fields[0].size()) {
            return {std::nullopt, {line_no, "bad timestamp: " + std::string(fields[0])}};
        }
        const auto dir = parse_dir(fields[1]);
        if (!dir) {
            return {std::nullopt, {line_no, "bad direction: " + std::string(fields[1])}};
        }
        if (time < last_time) {
            return {std::nullopt, {line_no, "timestamps must be non-decreasing"}};
        }
        if ((*dir == TraceDir::Tx || *dir == TraceDir::Rx) && !from_hex(fields[3])) {
            return {std::nullopt, {line_no, "TX/RX detail is not valid hex"}};
        }
        last_time = time;
        parsed.records.push_back(
            {time, *dir, std::string(fields[2]), std::string(fields[3]), line_no});
    }
    return {std::move(parsed), {}};
}

} // namespace rke
