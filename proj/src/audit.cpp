#include "rke/audit.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "rke/devices.hpp"
#include "rke/wire.hpp"

namespace rke {

namespace {

struct CarState {
    // Open handshake steps, each consumed by the next step or superseded.
    std::optional<Ms> challenge_at;
    std::optional<Ms> auth_ok_at;
    std::optional<Ms> id_request_at;
    std::optional<Ms> start_auth_at;
    // Lockout bookkeeping mirroring the car's failure log.
    std::deque<Ms> failures;
    Ms blocked_from = 0;
    Ms blocked_until = 0;
    // Honks since the last lock-state change (auto-lock justification).
    std::vector<Ms> honks;
    bool locked = false;
    bool saw_lock_state = false;
};

struct Walk {
    const ParsedTrace& trace;
    const std::vector<std::optional<Frame>>& frames;
    const std::vector<int>& origin; // RX index -> causing TX index, -1 if none
    AuditReport& report;

    Timeouts timeouts;
    bool lockout_enabled = true;

    std::unordered_map<std::string, CarState> cars;
    std::vector<char> accepted;   // RX judged a live handshake step
    std::vector<char> authorized; // RX Command covered by a fresh AUTH_OK
    std::vector<std::pair<Ms, std::string>> lock_presses;
    std::vector<Ms> commanded_locks;

    void flag(const TraceRecord& rec, std::string message) {
        report.violations.push_back({rec.line, std::move(message)});
    }

    std::string role_of(const std::string& endpoint) const {
        return trace.role_of(endpoint).value_or("");
    }

    bool in_block(const CarState& car, Ms t) const {
        return car.blocked_until > 0 && t >= car.blocked_from && t < car.blocked_until;
    }

    // Index of a same-time record on `endpoint` matching `pred`, searching
    // forward (dir=+1) or backward (dir=-1) from `i` exclusive; -1 if none.
    template <typename Pred>
    int same_time(std::size_t i, int dir, const std::string& endpoint, Pred pred) const {
        const auto& recs = trace.records;
        const Ms t = recs[i].time;
        for (std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i) + dir;
             j >= 0 && j < static_cast<std::ptrdiff_t>(recs.size()); j += dir) {
            if (recs[j].time != t) break;
            if (recs[j].endpoint != endpoint) continue;
            if (pred(static_cast<std::size_t>(j))) return static_cast<int>(j);
        }
        return -1;
    }

    bool frame_is(std::size_t i, MsgType type) const {
        return frames[i] && frames[i]->type == type;
    }

    void record_failure(CarState& car, Ms t) {
        while (!car.failures.empty() && car.failures.front() + timeouts.w_fail <= t) {
            car.failures.pop_front();
        }
        car.failures.push_back(t);
        if (car.failures.size() >= 3 && lockout_enabled) {
            car.blocked_from = t;
            car.blocked_until = t + timeouts.t_block;
            car.failures.clear();
        }
    }

    void on_tx(std::size_t i, CarState& car) {
        const auto& rec = trace.records[i];
        if (in_block(car, rec.time)) {
            flag(rec, "car transmitted during lockout block window");
        }
        if (!frames[i]) return; // undecodable bytes trigger nothing downstream
        const Ms t = rec.time;
        switch (frames[i]->type) {
        case MsgType::Challenge:
            car.challenge_at = t;
            break;
        case MsgType::AuthOk: {
            const int j = same_time(i, -1, rec.endpoint, [&](std::size_t k) {
                return trace.records[k].dir == TraceDir::Rx &&
                       frame_is(k, MsgType::AuthResponse) && accepted[k];
            });
            if (j < 0) {
                flag(rec, "AUTH_OK without a live same-time authentication response");
            } else {
                car.auth_ok_at = t;
            }
            break;
        }
        case MsgType::IdRequest:
            car.id_request_at = t;
            break;
        case MsgType::StartAuth: {
            const int j = same_time(i, -1, rec.endpoint, [&](std::size_t k) {
                return trace.records[k].dir == TraceDir::Rx &&
                       frame_is(k, MsgType::StartInit) && accepted[k];
            });
            if (j < 0) {
                flag(rec, "START_AUTH without a live same-time start request");
            } else {
                car.start_auth_at = t;
            }
            break;
        }
        default:
            break;
        }
    }

    void on_rx(std::size_t i, CarState& car) {
        const auto& rec = trace.records[i];
        if (!frames[i]) return;
        if (in_block(car, rec.time)) return; // blocked car ignores everything
        const Ms t = rec.time;
        switch (frames[i]->type) {
        case MsgType::AuthResponse: {
            if (!car.challenge_at || t - *car.challenge_at > timeouts.t_auth) break;
            car.challenge_at.reset();
            accepted[i] = 1;
            const int ok = same_time(i, +1, rec.endpoint, [&](std::size_t k) {
                return trace.records[k].dir == TraceDir::Tx && frame_is(k, MsgType::AuthOk);
            });
            if (ok < 0) record_failure(car, t);
            break;
        }
        case MsgType::StartInit: {
            if (!car.id_request_at || t - *car.id_request_at > timeouts.t_start) break;
            car.id_request_at.reset();
            accepted[i] = 1;
            break;
        }
        case MsgType::StartConfirm: {
            if (!car.start_auth_at || t - *car.start_auth_at > timeouts.t_start) break;
            car.start_auth_at.reset();
            accepted[i] = 1;
            const int act = same_time(i, +1, rec.endpoint, [&](std::size_t k) {
                return trace.records[k].dir == TraceDir::Act &&
                       trace.records[k].detail == "START_ENGINE";
            });
            if (act < 0) record_failure(car, t);
            break;
        }
        case MsgType::Command: {
            if (car.auth_ok_at && t - *car.auth_ok_at <= timeouts.t_command) {
                car.auth_ok_at.reset();
                authorized[i] = 1;
            }
            break;
        }
        default:
            break;
        }
    }

    void attribute(std::size_t act_index, std::size_t trigger_index) {
        const auto& act = trace.records[act_index];
        if (act.detail != "UNLOCK_DOORS" && act.detail != "OPEN_BOOT" &&
            act.detail != "START_ENGINE") {
            return;
        }
        const int tx = origin[trigger_index];
        if (tx < 0) return;
        const auto& from = trace.records[tx];
        if (role_of(from.endpoint) != "adversary") return;
        report.attacker_caused_entry = true;
        std::ostringstream evidence;
        evidence << "t=" << act.time << ' ' << act.endpoint << ' ' << act.detail << " via "
                 << to_string(frames[trigger_index]->type) << " from " << from.endpoint
                 << " (line " << act.line << ')';
        report.attacker_evidence.push_back(evidence.str());
    }

    void check_autolock(std::size_t i, CarState& car) {
        const auto& rec = trace.records[i];
        if (car.honks.size() < static_cast<std::size_t>(kHonkCount)) {
            flag(rec, "LOCK_DOORS with neither a command nor a completed honk warning");
            return;
        }
        const auto first = car.honks.end() - kHonkCount;
        for (auto it = first; it + 1 != car.honks.end(); ++it) {
            if (*(it + 1) - *it != timeouts.honk_spacing) {
                flag(rec, "auto-lock honk spacing mismatch");
                return;
            }
        }
        if (rec.time != *first + timeouts.t_autolock) {
            flag(rec, "auto-lock fired at the wrong time");
            return;
        }
        report.autolock_at = rec.time;
    }

    void on_act(std::size_t i, CarState& car) {
        const auto& rec = trace.records[i];
        if (in_block(car, rec.time)) {
            flag(rec, "actuator event during lockout block window");
        }
        if (rec.detail == "HONK") {
            car.honks.push_back(rec.time);
            ++report.honk_count;
            if (!report.first_honk_at) report.first_honk_at = rec.time;
            return;
        }

        // Nearest same-time RX on this car that can trigger an actuator.
        const int trig = same_time(i, -1, rec.endpoint, [&](std::size_t k) {
            if (trace.records[k].dir != TraceDir::Rx || !frames[k]) return false;
            switch (frames[k]->type) {
            case MsgType::Command:
            case MsgType::StartConfirm:
            case MsgType::FixedCode:
            case MsgType::RollCode:
            case MsgType::CrResponse:
                return true;
            default:
                return false;
            }
        });

        if (trig < 0) {
            if (rec.detail == "LOCK_DOORS") {
                check_autolock(i, car);
            } else {
                flag(rec, rec.detail + " without a triggering frame");
            }
        } else {
            const std::size_t k = static_cast<std::size_t>(trig);
            switch (frames[k]->type) {
            case MsgType::Command: {
                const auto code = parse_command(*frames[k]);
                const char* expect = "?";
                if (code) {
                    switch (*code) {
                    case CommandCode::Lock: expect = "LOCK_DOORS"; break;
                    case CommandCode::Unlock: expect = "UNLOCK_DOORS"; break;
                    case CommandCode::OpenBoot: expect = "OPEN_BOOT"; break;
                    }
                }
                if (rec.detail != expect) {
                    flag(rec, "actuator does not match the received command");
                } else if (!authorized[k]) {
                    flag(rec, "command acted on without fresh authentication");
                } else {
                    attribute(i, k);
                    if (rec.detail == "LOCK_DOORS") commanded_locks.push_back(rec.time);
                }
                break;
            }
            case MsgType::StartConfirm:
                if (rec.detail != "START_ENGINE") {
                    flag(rec, "actuator does not match the received confirmation");
                } else if (!accepted[k]) {
                    flag(rec, "engine start without a verified handshake");
                } else {
                    attribute(i, k);
                }
                break;
            default: // baseline trigger: no handshake by design
                attribute(i, k);
                if (rec.detail == "LOCK_DOORS") commanded_locks.push_back(rec.time);
                break;
            }
        }

        if (rec.detail == "LOCK_DOORS" || rec.detail == "UNLOCK_DOORS") {
            car.locked = (rec.detail == "LOCK_DOORS");
            car.saw_lock_state = true;
            car.honks.clear();
        }
    }

    void run() {
        timeouts.t_auth = trace.param_or("t_auth", timeouts.t_auth);
        timeouts.t_command = trace.param_or("t_command", timeouts.t_command);
        timeouts.t_start = trace.param_or("t_start", timeouts.t_start);
        timeouts.w_fail = trace.param_or("w_fail", timeouts.w_fail);
        timeouts.t_block = trace.param_or("t_block", timeouts.t_block);
        timeouts.t_jam = trace.param_or("t_jam", timeouts.t_jam);
        timeouts.t_autolock = trace.param_or("t_autolock", timeouts.t_autolock);
        timeouts.honk_spacing = trace.param_or("honk_spacing", timeouts.honk_spacing);
        lockout_enabled = trace.param_or("lockout_enabled", 1) != 0;

        accepted.assign(trace.records.size(), 0);
        authorized.assign(trace.records.size(), 0);

        for (std::size_t i = 0; i < trace.records.size(); ++i) {
            const auto& rec = trace.records[i];
            const std::string role = role_of(rec.endpoint);
            if (rec.dir == TraceDir::State && role == "fob" && rec.detail == "EVT:BUTTON_LOCK") {
                lock_presses.emplace_back(rec.time, rec.endpoint);
            }
            if (role != "car") continue;
            CarState& car = cars[rec.endpoint];
            switch (rec.dir) {
            case TraceDir::Tx: on_tx(i, car); break;
            case TraceDir::Rx: on_rx(i, car); break;
            case TraceDir::Act: on_act(i, car); break;
            case TraceDir::State: break;
            }
        }

        for (const auto& [when, who] : lock_presses) {
            const bool served = std::any_of(
                commanded_locks.begin(), commanded_locks.end(),
                [&](Ms t) { return t >= when && t <= when + 5000; });
            if (!served) report.lock_press_unserved = true;
            (void)who;
        }
        for (const auto& [name, car] : cars) {
            (void)name;
            if (car.saw_lock_state) report.car_locked_at_end = car.locked;
        }
    }
};

} // namespace

AuditReport audit_trace(std::string_view text) {
    AuditReport report;
    auto parsed = parse_trace(text);
    if (!parsed) {
        std::ostringstream msg;
        msg << "line " << parsed.error.line << ": " << parsed.error.message;
        report.format_error = msg.str();
        return report;
    }
    report.format_ok = true;

    const auto& trace = *parsed.trace;
    std::vector<std::optional<Frame>> frames(trace.records.size());
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        const auto& rec = trace.records[i];
        if (rec.dir != TraceDir::Tx && rec.dir != TraceDir::Rx) continue;
        const auto bytes = from_hex(rec.detail);
        if (!bytes) continue;
        auto decoded = decode(*bytes);
        if (decoded) frames[i] = std::move(*decoded.frame);
    }

    // Causality: an RX comes from the latest earlier TX of the same bytes
    // by some other endpoint.
    std::vector<int> origin(trace.records.size(), -1);
    std::unordered_map<std::string, std::vector<int>> tx_by_hex;
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        const auto& rec = trace.records[i];
        if (rec.dir == TraceDir::Tx) {
            tx_by_hex[rec.detail].push_back(static_cast<int>(i));
        } else if (rec.dir == TraceDir::Rx) {
            const auto it = tx_by_hex.find(rec.detail);
            if (it != tx_by_hex.end()) {
                for (auto r = it->second.rbegin(); r != it->second.rend(); ++r) {
                    if (trace.records[*r].endpoint != rec.endpoint) {
                        origin[i] = *r;
                        break;
                    }
                }
            }
            if (origin[i] < 0) {
                report.violations.push_back({rec.line, "RX with no matching prior TX"});
            }
        }
    }

    Walk walk{trace, frames, origin, report, {}, true, {}, {}, {}, {}, {}};
    walk.run();

    std::sort(report.violations.begin(), report.violations.end(),
              [](const AuditViolation& a, const AuditViolation& b) { return a.line < b.line; });
    return report;
}

AuditReport audit_trace_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        AuditReport report;
        report.format_error = "cannot open trace file: " + path;
        return report;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return audit_trace(buf.str());
}

std::string render_report(const AuditReport& report) {
    std::ostringstream out;
    if (!report.format_ok) {
        out << "format error: " << report.format_error << '\n';
        return out.str();
    }
    for (const auto& v : report.violations) {
        out << "violation line " << v.line << ": " << v.message << '\n';
    }
    out << (report.clean() ? "audit clean" : "audit FAILED") << '\n';
    if (report.attacker_caused_entry) {
        out << "attacker-caused entry:\n";
        for (const auto& line : report.attacker_evidence) out << "  " << line << '\n';
    }
    if (report.honk_count > 0) {
        out << "honks: " << report.honk_count << " first at " << *report.first_honk_at;
        if (report.autolock_at) out << ", auto-lock at " << *report.autolock_at;
        out << '\n';
    }
    return out.str();
}

} // namespace rke
