#ifndef RKE_AUDIT_HPP
#define RKE_AUDIT_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rke/trace.hpp"
#include "rke/util.hpp"

namespace rke {

// Offline transcript checker. Re-derives which transmission caused each
// actuator event (an RX is attributed to the latest earlier TX with the same
// bytes from a different endpoint) and enforces the protocol's safety rules
// using only the transcript plus its `# param` headers — no key material.
//
// Checks:
//   - every RX has a matching prior TX (no frames out of thin air)
//   - UNLOCK_DOORS / OPEN_BOOT happen only on a command that follows a fresh
//     car-issued challenge answered with a confirmed response
//   - START_ENGINE happens only at the end of the full mutual handshake
//   - LOCK_DOORS is either commanded the same way or is the anti-jam
//     auto-lock (exactly five honks, exact spacing, exact delay)
//   - after three failed responses inside the failure window the car stays
//     completely silent (no TX, no actuator) for the whole block window
//
// Baseline frames (FixedCode/RollCode/CrResponse) trigger actuators without
// a handshake by design, so they are exempt from the chain checks; origin
// attribution still applies to them.

struct AuditViolation {
    std::size_t line = 0;
    std::string message;
};

struct AuditReport {
    bool format_ok = false;
    std::string format_error;

    std::vector<AuditViolation> violations;

    // Facts attack adjudication reads off the transcript.
    bool attacker_caused_entry = false; // unlock/boot/start traced to an adversary TX
    std::vector<std::string> attacker_evidence;
    bool lock_press_unserved = false; // a BUTTON_LOCK press led to no commanded lock
    bool car_locked_at_end = false;   // last lock-state actuator was LOCK_DOORS
    int honk_count = 0;
    std::optional<Ms> first_honk_at;
    std::optional<Ms> autolock_at; // LOCK_DOORS issued by the honk defense

    bool clean() const { return format_ok && violations.empty(); }
};

AuditReport audit_trace(std::string_view text);
AuditReport audit_trace_file(const std::string& path);

// Multi-line human-readable summary (one line per violation).
std::string render_report(const AuditReport& report);

} // namespace rke

#endif
