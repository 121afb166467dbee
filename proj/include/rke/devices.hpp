#ifndef RKE_DEVICES_HPP
#define RKE_DEVICES_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "rke/authcrypt.hpp"
#include "rke/entropy.hpp"
#include "rke/keystore.hpp"
#include "rke/sim.hpp"
#include "rke/wire.hpp"

namespace rke {

// All protocol timers, in simulated milliseconds. Defaults are frozen so
// traces are reproducible; scenarios may override any of them.
struct Timeouts {
    Ms t_challenge = 500; // fob waits for CHALLENGE after announcing
    Ms t_auth_ok = 500;   // fob waits for AUTH_OK after responding
    Ms t_auth = 500;      // car waits for AUTH_RESPONSE / fob waits in start flow
    Ms t_command = 500;   // car waits for COMMAND after AUTH_OK
    Ms t_start = 500;     // start-transaction step timeout (both sides)
    Ms t_jam = 10000;     // ping window after door close before honking
    Ms t_autolock = 10000; // driver grace period once honking begins
    Ms t_block = 180000;  // lockout duration
    Ms w_fail = 60000;    // window in which wrong auths accumulate
    Ms t_ping = 2000;     // ping period while the defense is armed
    Ms honk_spacing = 500;
};

constexpr std::uint32_t kHonkCount = 5;

// Remote with lock/unlock/boot buttons. Runs one transaction at a time;
// anything unexpected is dropped without a state change.
class KeyFob final : public Endpoint {
public:
    enum class State : std::uint8_t { Idle, WaitChallenge, WaitAuthOk, StartWaitAuth };

    KeyFob(std::string name, CarKeyId id, KeyTable table, std::unique_ptr<EntropySource> entropy,
           TableParams params = TableParams::full(), Timeouts timeouts = {});

    const char* role() const override { return "fob"; }
    void on_frame(const Frame& frame, Ms now, EndpointOut& out) override;
    void on_tick(Ms now, EndpointOut& out) override;
    void on_button(Button button, Ms now, EndpointOut& out) override;
    std::optional<Ms> next_deadline() const override;
    std::string state_name() const override;

    State state() const { return state_; }
    CarKeyId id() const { return id_; }
    const KeyTable& table() const { return table_; }

    // Wired programming port: synchronous request/response used by the
    // board computer's console link. write_ok models the EEPROM outcome
    // for one PROG_WRITE attempt on the given block.
    Frame wired_exchange(const Frame& request,
                         const std::function<bool(std::uint16_t)>& write_ok = {});

private:
    CarKeyId id_;
    KeyTable table_;
    std::unique_ptr<EntropySource> entropy_;
    TableParams params_;
    Timeouts timeouts_;

    State state_ = State::Idle;
    CommandCode pending_ = CommandCode::Lock;
    Challenge sent_challenge_;
    Ms deadline_ = 0;

    // Programming staging area; the live table swaps only on PROG_COMMIT.
    std::vector<std::uint16_t> staging_;
    std::uint32_t staged_blocks_ = 0; // bitmask, bit b = block b received
};

struct CarOptions {
    bool lockout_enabled = true;
    bool defense_enabled = true;
};

// Vehicle-side transceiver: challenge/response verification, command
// execution, the wrong-auth lockout, and the anti-jam door watcher. The
// jam defense is a parallel sub-state and never replaces the main one.
class CarTransceiver final : public Endpoint {
public:
    enum class State : std::uint8_t {
        Idle,
        WaitAuth,
        WaitCommand,
        StartWaitInit,
        StartWaitConfirm,
        Blocked,
    };
    enum class JamState : std::uint8_t {
        Inactive,
        WatchDoor,
        WatchDoorOpened,
        WaitLockOrReply,
        Honking,
        AutolockCountdown,
    };

    CarTransceiver(std::string name, CarKeyId id, KeyTable table,
                   std::unique_ptr<EntropySource> entropy, TableParams params = TableParams::full(),
                   Timeouts timeouts = {}, CarOptions options = {});

    const char* role() const override { return "car"; }
    void on_frame(const Frame& frame, Ms now, EndpointOut& out) override;
    void on_tick(Ms now, EndpointOut& out) override;
    void on_vehicle(VehicleEvent event, Ms now, EndpointOut& out) override;
    std::optional<Ms> next_deadline() const override;
    std::string state_name() const override;

    State state() const { return state_; }
    JamState jam_state() const { return jam_; }
    bool door_locked() const { return door_locked_; }
    bool engine_running() const { return engine_running_; }
    std::uint32_t wrong_id_count() const { return wrong_id_count_; }
    Ms blocked_until() const { return blocked_until_; }
    const KeyTable& table() const { return table_; }
    const Timeouts& timeouts() const { return timeouts_; }

private:
    void handle_auth_verdict(bool ok, Ms now, EndpointOut& out);
    void record_failure(Ms now);
    void run_command(CommandCode code, EndpointOut& out);
    bool tick_once(Ms now, EndpointOut& out);

    CarKeyId id_;
    KeyTable table_;
    std::unique_ptr<EntropySource> entropy_;
    TableParams params_;
    Timeouts timeouts_;
    CarOptions options_;

    State state_ = State::Idle;
    Challenge sent_challenge_; // WaitAuth / StartWaitConfirm
    Ms deadline_ = 0;
    Ms blocked_until_ = 0;
    std::deque<Ms> failure_log_;

    JamState jam_ = JamState::Inactive;
    Ms jam_deadline_ = 0;
    Ms next_ping_ = 0;
    Ms autolock_at_ = 0;
    Ms next_honk_ = 0;
    std::uint32_t honks_done_ = 0;

    bool door_locked_ = false;
    bool engine_running_ = false;
    std::uint32_t wrong_id_count_ = 0;
};

const char* to_string(KeyFob::State state);
const char* to_string(CarTransceiver::State state);
const char* to_string(CarTransceiver::JamState state);

// Writes the timers and toggles into trace headers so offline audits judge
// a transcript with the same numbers the devices ran with.
void emit_trace_params(Trace& trace, const Timeouts& timeouts, const CarOptions& options);

} // namespace rke

#endif
