#ifndef RKE_SIM_HPP
#define RKE_SIM_HPP

#include <cstdint>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rke/trace.hpp"
#include "rke/util.hpp"
#include "rke/wire.hpp"

namespace rke {

enum class Button : std::uint8_t { Lock, Unlock, Boot };
enum class VehicleEvent : std::uint8_t { MotorOff, DoorOpened, DoorClosed, StartButton, HandlePull };
enum class ActuatorKind : std::uint8_t { LockDoors, UnlockDoors, OpenBoot, StartEngine, Honk };

const char* to_string(Button button);       // EVT:BUTTON_*
const char* to_string(VehicleEvent event);  // EVT:*
const char* to_string(ActuatorKind kind);

// Everything an endpoint wants done after handling one event. Frames are
// transmitted on the endpoint's channel; actuator events are logged and
// timestamped by the simulation.
struct EndpointOut {
    std::vector<Frame> frames;
    std::vector<ActuatorKind> actuators;
};

// A participant on a channel: a device, a baseline device, or an adversary.
// Handlers must not perform I/O; they fill `out` and update internal state.
class Endpoint {
public:
    explicit Endpoint(std::string name) : name_(std::move(name)) {}
    virtual ~Endpoint() = default;

    const std::string& name() const { return name_; }
    virtual const char* role() const = 0;

    virtual void on_frame(const Frame& frame, Ms now, EndpointOut& out);
    virtual void on_tick(Ms now, EndpointOut& out);
    virtual void on_button(Button button, Ms now, EndpointOut& out);
    virtual void on_vehicle(VehicleEvent event, Ms now, EndpointOut& out);

    // Next time this endpoint needs a timer tick, if any. The simulation
    // schedules a TIMER event after every interaction; stale timers no-op.
    virtual std::optional<Ms> next_deadline() const { return std::nullopt; }

    // Shown in STATE trace lines whenever it changes. Empty = never logged.
    virtual std::string state_name() const { return {}; }

private:
    std::string name_;
};

struct ActuatorRecord {
    Ms at = 0;
    std::string endpoint;
    ActuatorKind kind{};
};

// Observer attached to a channel. Sees every transmission at TX time,
// including jammed ones. Returning false suppresses delivery to everyone.
class Simulation;
class Tap {
public:
    virtual ~Tap() = default;
    virtual bool on_transmit(std::string_view from, std::span<const std::uint8_t> bytes, Ms now,
                             Simulation& sim) = 0;
};

using ChannelId = int;

// Deterministic discrete-event broadcast world. Single-threaded; events are
// ordered by (timestamp, insertion sequence), so identical schedules replay
// identically.
class Simulation {
public:
    ChannelId add_channel(Ms propagation_delay = 1);
    void attach(Endpoint& endpoint, ChannelId channel);
    // Re-attach an endpoint elsewhere (an owner walking out of range).
    // Takes effect for transmissions after the call; call between runs.
    void move_endpoint(std::string_view endpoint, ChannelId channel);
    void add_tap(ChannelId channel, Tap& tap);
    void add_jam_window(ChannelId channel, Ms from, Ms to); // inclusive
    bool jammed_at(ChannelId channel, Ms at) const;

    void schedule_button(Ms at, std::string_view endpoint, Button button);
    void schedule_vehicle(Ms at, std::string_view endpoint, VehicleEvent event);
    // Raw transmission by a (possibly unattached) origin, e.g. a scripted
    // attacker replaying captured bytes.
    void schedule_inject(Ms at, ChannelId channel, std::string_view origin,
                         std::vector<std::uint8_t> bytes);

    // Transmit immediately on the endpoint's channel. Usually endpoints
    // return frames via EndpointOut instead; taps use this to re-inject.
    void transmit_from(std::string_view origin, ChannelId channel, std::vector<std::uint8_t> bytes);

    void run_until(Ms t_end);

    Ms now() const { return now_; }
    Trace& trace() { return trace_; }
    const Trace& trace() const { return trace_; }
    const std::vector<ActuatorRecord>& actuators() const { return actuators_; }

private:
    enum class EventKind : std::uint8_t { Deliver, Timer, ButtonPress, Vehicle, Inject };

    struct Event {
        Ms at = 0;
        std::uint64_t seq = 0;
        EventKind kind{};
        std::size_t endpoint = 0; // Deliver/Timer/ButtonPress/Vehicle
        Button button{};
        VehicleEvent vehicle{};
        std::vector<std::uint8_t> bytes; // Deliver/Inject
        ChannelId channel = 0;           // Inject
        std::string origin;              // Inject
    };

    struct EventAfter {
        bool operator()(const Event& a, const Event& b) const {
            if (a.at != b.at) return a.at > b.at;
            return a.seq > b.seq;
        }
    };

    struct Channel {
        Ms propagation_delay = 1;
        std::vector<std::size_t> endpoints;
        std::vector<Tap*> taps;
        std::vector<std::pair<Ms, Ms>> jam_windows;
    };

    void push(Event event);
    std::size_t index_of(std::string_view endpoint) const;
    void dispatch(const Event& event);
    void finish_endpoint_event(std::size_t index, const std::string& pre_state, EndpointOut& out);
    void reschedule_timer(std::size_t index);

    std::vector<Channel> channels_;
    std::vector<Endpoint*> endpoints_;
    std::vector<ChannelId> endpoint_channel_;
    std::vector<Ms> scheduled_timer_; // last timer timestamp pushed per endpoint
    std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
    std::uint64_t next_seq_ = 0;
    Ms now_ = 0;
    Trace trace_;
    std::vector<ActuatorRecord> actuators_;
};

// Stores every transmission it hears, jammed or not.
class RecorderTap final : public Tap {
public:
    struct Capture {
        Ms at = 0;
        std::string from;
        std::vector<std::uint8_t> bytes;
    };

    bool on_transmit(std::string_view from, std::span<const std::uint8_t> bytes, Ms now,
                     Simulation& sim) override;

    const std::vector<Capture>& captures() const { return captures_; }

private:
    std::vector<Capture> captures_;
};

// One half of a two-thief bridge: re-injects everything heard on this
// channel into a far channel after a fixed delay. Skips frames originated
// by itself or its partner so a pair of relays cannot loop.
class RelayTap final : public Tap {
public:
    RelayTap(std::string name, ChannelId far_channel, Ms delay)
        : name_(std::move(name)), far_channel_(far_channel), delay_(delay) {}

    void set_partner(std::string_view partner) { partner_ = std::string(partner); }
    const std::string& name() const { return name_; }

    bool on_transmit(std::string_view from, std::span<const std::uint8_t> bytes, Ms now,
                     Simulation& sim) override;

private:
    std::string name_;
    std::string partner_;
    ChannelId far_channel_;
    Ms delay_;
};

} // namespace rke

#endif
