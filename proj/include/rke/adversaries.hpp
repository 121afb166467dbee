#ifndef RKE_ADVERSARIES_HPP
#define RKE_ADVERSARIES_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rke/audit.hpp"
#include "rke/devices.hpp"
#include "rke/entropy.hpp"
#include "rke/sim.hpp"

namespace rke {

// Full-stack attacker runs: each op stages a world (car, fob, attacker
// endpoints), runs the event loop, renders the transcript, and hands it to
// the offline auditor. `succeeded` is copied from the auditor's findings,
// never set by attacker code — an attacker cannot declare its own victory.
//
// Attackers only ever see channel traffic. No op reads a device's table or
// entropy state; the weak-generator attack reconstructs state purely from
// transmitted challenge indices.

struct TargetConfig {
    CarKeyId id{0x11223344};
    std::uint64_t seed = 1; // drives the table and every entropy source
    EntropyKind car_entropy = EntropyKind::Strong;
    EntropyKind fob_entropy = EntropyKind::Strong;
    TableParams params = TableParams::full();
    Timeouts timeouts{};
    CarOptions options{};
    // Extra scripted presses by the owner's fob during scan or playback
    // runs, e.g. to show service pausing under a lockout and resuming
    // after it expires. The run extends to cover the last press.
    std::vector<std::pair<Ms, Button>> owner_presses;
};

struct AttackOutcome {
    bool succeeded = false;
    std::uint64_t attempts = 0;
    Ms elapsed = 0;
    std::vector<std::string> evidence; // auditor lines naming cause and effect
    bool predictor_failed = false;     // forward prediction only

    std::string trace_text; // the full transcript the verdict came from
    AuditReport audit;
};

// Eavesdrops one legitimate session to learn the ID, then answers fresh
// challenges with uniform random auth messages until success or budget.
// Lockouts throttle it naturally; attempts counts responses actually sent.
AttackOutcome scan_attack(const TargetConfig& target, std::uint64_t budget,
                          std::unique_ptr<EntropySource> guess_entropy);

// Records n_record legitimate sessions, then replays: each fresh challenge
// is answered with the recorded response whose challenge matches, falling
// back to the most recent recording.
AttackOutcome playback_attack(const TargetConfig& target, std::uint32_t n_record,
                              std::uint32_t n_replay);

// Same replay against the fixed-code baseline: capture one opening press,
// replay the bytes once.
AttackOutcome playback_attack_fixed_code(std::uint64_t seed);

// Observes n_observe challenges, reconstructs the weak generator's state,
// interrogates the fob out of the car's range with the forecast challenge,
// then replays the harvested response at the car. Against a strong source
// the reconstruction fails and the op falls back to a random guess.
AttackOutcome forward_prediction_attack(const TargetConfig& target, std::uint32_t n_observe);

// The same story against the passive challenge-response baseline: three
// handle pulls leak enough outputs of a weak source to forecast the next
// challenge.
AttackOutcome forward_prediction_attack_passive_cr(std::uint64_t seed, EntropyKind car_entropy,
                                                   std::uint32_t n_observe = 3);

enum class RelayTechnique { PassiveCr, Proposed };

// Two channels ("near car", "near owner") bridged by a relay pair. Against
// the passive baseline the attacker pulls the handle and relays the whole
// interrogation. Against the proposed protocol nothing transmits unless the
// victim presses a button; victim_press_at stages that residual case.
AttackOutcome relay_attack(const TargetConfig& target, RelayTechnique technique, Ms relay_delay,
                           std::optional<Ms> victim_press_at = std::nullopt);

// Jams the channel while the victim parks and presses LOCK. With the
// defense on, the unanswered pings end in five honks and an auto-lock, so
// the attacker finds the car locked anyway.
struct JamScript {
    Ms motor_off = 1000;
    Ms door_open = 1500;
    Ms door_close = 3000;
    Ms lock_press = 4000;
    Ms jam_from = 3000;
    Ms jam_to = 30000;
    Ms horizon = 40000;
};

AttackOutcome jam_attack(const TargetConfig& target, const JamScript& script = {});

} // namespace rke

#endif
