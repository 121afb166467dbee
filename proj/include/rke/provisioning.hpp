#ifndef RKE_PROVISIONING_HPP
#define RKE_PROVISIONING_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rke/devices.hpp"
#include "rke/entropy.hpp"
#include "rke/keystore.hpp"

namespace rke {

// Deterministic EEPROM fault schedule for the wired key exchange. Attempt
// numbers are 1-based and counted per (fob, block) across the whole
// exchange, so a restore write continues the counter a failed fresh write
// started.
struct FaultPlan {
    struct Key {
        int fob;                // port index, 0 or 1
        std::uint16_t block;    // PROG_WRITE sequence number
        std::uint32_t attempt;  // 1-based

        auto operator<=>(const Key&) const = default;
    };

    std::map<Key, bool> outcomes; // missing entries succeed

    bool fails(int fob, std::uint16_t block, std::uint32_t attempt) const;
    void set(int fob, std::uint16_t block, std::uint32_t attempt, bool fail);

    // Independent Bernoulli(p_fail) draw for every (fob, block, attempt)
    // combination that can occur (two write passes, one retry each).
    static FaultPlan random(std::uint64_t seed, double p_fail);
};

enum class ProgState : std::uint8_t {
    Locked,
    Ready,
    VerifyIds,
    Writing,
    Committing,
    RollingBack,
    Done,
    Failed,
};

enum class BeginResult : std::uint8_t { Ready, WrongPassword, PortEmpty };

enum class ExchangeOutcome : std::uint8_t {
    Done,        // all three devices hold the new table
    IdMismatch,  // a connected fob belongs to another car; nothing written
    AbortedClean,// first fob failed; nobody changed
    RolledBack,  // second fob failed; first fob restored to the old table
    Inconsistent,// restore failed too; one device diverges
};

const char* to_string(ProgState state);
const char* to_string(ExchangeOutcome outcome);

struct ExchangeReport {
    ExchangeOutcome outcome = ExchangeOutcome::Done;
    std::optional<int> failed_fob;    // port index that failed persistently
    std::string divergent_device;     // set only on Inconsistent
    std::uint32_t old_generation = 0;
    std::uint32_t new_generation = 0;
    // Human-readable wired-link log, one line per request/response or
    // board-local step, in execution order.
    std::vector<std::string> transcript;
};

// Central console for re-keying. Both fobs connect by wire; the exchange
// streams a fresh table to each in turn and writes the board's own copy
// last, so a failure can always fall back to the old table.
class BoardComputer {
public:
    BoardComputer(CarKeyId id, KeyTable table, std::string password);

    void connect(int port, KeyFob& fob);
    void disconnect(int port);

    BeginResult begin_programming(std::string_view password_attempt);
    ExchangeReport run_key_exchange(EntropySource& entropy, const FaultPlan& faults);

    ProgState prog_state() const { return state_; }
    CarKeyId id() const { return id_; }
    const KeyTable& table() const { return table_; }

private:
    bool stream_table(int fob_index, const std::vector<std::uint16_t>& values,
                      std::uint32_t generation, const FaultPlan& faults,
                      std::map<std::pair<int, std::uint16_t>, std::uint32_t>& attempts,
                      ExchangeReport& report);

    CarKeyId id_;
    KeyTable table_;
    std::string password_;
    std::array<KeyFob*, 2> ports_{nullptr, nullptr};
    ProgState state_ = ProgState::Locked;
};

} // namespace rke

#endif
