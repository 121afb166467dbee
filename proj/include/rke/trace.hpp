#ifndef RKE_TRACE_HPP
#define RKE_TRACE_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rke/util.hpp"

namespace rke {

// Line-oriented transcript of a simulation run:
//
//   # comment (headers carry endpoint roles: "# endpoint <name> role <role>")
//   <timestamp_ms> TX|RX|ACT|STATE <endpoint> <hex bytes | name>
//
// TX/RX details are the exact wire bytes in lowercase hex; ACT and STATE
// details are bare names (LOCK_DOORS, BLOCKED, EVT:BUTTON_LOCK, ...).

enum class TraceDir : std::uint8_t { Tx, Rx, Act, State };

const char* to_string(TraceDir dir);

struct TraceRecord {
    Ms time = 0;
    TraceDir dir = TraceDir::State;
    std::string endpoint;
    std::string detail;
    std::size_t line = 0; // 1-based source line when parsed from a file

    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct EndpointRole {
    std::string endpoint;
    std::string role; // car | fob | adversary | board | ...
};

struct TraceParam {
    std::string name;
    std::uint64_t value = 0;
};

class Trace {
public:
    void set_role(std::string_view endpoint, std::string_view role);
    void set_param(std::string_view name, std::uint64_t value);
    void comment(std::string text);
    void log(Ms time, TraceDir dir, std::string_view endpoint, std::string_view detail);
    void log_frame(Ms time, TraceDir dir, std::string_view endpoint,
                   std::span<const std::uint8_t> bytes);

    const std::vector<TraceRecord>& records() const { return records_; }
    const std::vector<EndpointRole>& roles() const { return roles_; }
    const std::vector<TraceParam>& params() const { return params_; }

    // Full file contents, header first, records in log order.
    std::string render() const;

private:
    std::vector<std::string> comments_;
    std::vector<EndpointRole> roles_;
    std::vector<TraceParam> params_;
    std::vector<TraceRecord> records_;
};

struct ParsedTrace {
    std::vector<EndpointRole> roles;
    std::vector<TraceParam> params;
    std::vector<TraceRecord> records;

    std::optional<std::string> role_of(std::string_view endpoint) const;
    std::uint64_t param_or(std::string_view name, std::uint64_t fallback) const;
};

struct TraceParseError {
    std::size_t line = 0;
    std::string message;
};

struct TraceParseResult {
    std::optional<ParsedTrace> trace;
    TraceParseError error;

    explicit operator bool() const { return trace.has_value(); }
};

// Strict parser for the line format above. Records must be non-decreasing
// in time; malformed lines are reported with their line number.
TraceParseResult parse_trace(std::string_view text);

} // namespace rke

#endif
