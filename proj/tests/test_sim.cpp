#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdint>
#include <string>
#include <vector>

#include "rke/sim.hpp"
#include "rke/trace.hpp"
#include "rke/wire.hpp"

using namespace rke;

namespace {

// Minimal endpoint that records everything delivered to it and can be told
// to transmit a canned frame when its button is pressed.
class Probe final : public Endpoint {
  public:
    struct Seen {
        Ms at;
        Frame frame;
    };

    explicit Probe(std::string name) : Endpoint(std::move(name)) {}

    const char* role() const override { return "probe"; }

    void on_frame(const Frame& frame, Ms now, EndpointOut&) override {
        seen.push_back({now, frame});
    }

    void on_button(Button, Ms, EndpointOut& out) override {
        if (reply) out.frames.push_back(*reply);
        if (actuate) out.actuators.push_back(*actuate);
    }

    std::vector<Seen> seen;
    std::optional<Frame> reply;
    std::optional<ActuatorKind> actuate;
};

} // namespace

TEST_CASE("events at one timestamp run in insertion order") {
    Simulation sim;
    const ChannelId ch = sim.add_channel(1);
    Probe probe("probe");
    sim.attach(probe, ch);

    sim.schedule_inject(100, ch, "first", encode(make_command(CommandCode::Lock)));
    sim.schedule_inject(100, ch, "second", encode(make_command(CommandCode::Unlock)));
    sim.schedule_inject(100, ch, "third", encode(make_command(CommandCode::OpenBoot)));
    sim.run_until(200);

    REQUIRE(probe.seen.size() == 3);
    CHECK(*parse_command(probe.seen[0].frame) == CommandCode::Lock);
    CHECK(*parse_command(probe.seen[1].frame) == CommandCode::Unlock);
    CHECK(*parse_command(probe.seen[2].frame) == CommandCode::OpenBoot);
    for (const auto& s : probe.seen) CHECK(s.at == 101);
}

TEST_CASE("propagation delay shifts delivery time") {
    Simulation sim;
    const ChannelId ch = sim.add_channel(5);
    Probe probe("probe");
    sim.attach(probe, ch);
    sim.schedule_inject(100, ch, "origin", encode(make_ping()));
    sim.run_until(200);
    REQUIRE(probe.seen.size() == 1);
    CHECK(probe.seen[0].at == 105);
}

TEST_CASE("broadcast reaches everyone except the sender") {
    Simulation sim;
    const ChannelId ch = sim.add_channel(1);
    Probe alice("alice"), bob("bob"), carol("carol");
    alice.reply = make_ping();
    sim.attach(alice, ch);
    sim.attach(bob, ch);
    sim.attach(carol, ch);

    sim.schedule_button(50, "alice", Button::Unlock);
    sim.run_until(100);

    CHECK(alice.seen.empty());
    REQUIRE(bob.seen.size() == 1);
    REQUIRE(carol.seen.size() == 1);
    CHECK(bob.seen[0].frame == make_ping());
    CHECK(bob.seen[0].at == 51);
}

TEST_CASE("malformed bytes are logged as RX but never reach handlers") {
    Simulation sim;
    const ChannelId ch = sim.add_channel(1);
    Probe probe("probe");
    sim.attach(probe, ch);
    sim.schedule_inject(10, ch, "noise", {0xAA, 0x55, 0xFF});
    sim.run_until(50);
    CHECK(probe.seen.empty());
}

TEST_CASE("jam windows suppress delivery but not the transmission log") {
    Simulation sim;
    const ChannelId ch = sim.add_channel(1);
    Probe probe("probe");
    sim.attach(probe, ch);
    RecorderTap recorder;
    sim.add_tap(ch, recorder);
    sim.add_jam_window(ch, 100, 1000);

    CHECK(sim.jammed_at(ch, 100));
    CHECK(sim.jammed_at(ch, 1000)); // inclusive on both ends
    CHECK_FALSE(sim.jammed_at(ch, 99));
    CHECK_FALSE(sim.jammed_at(ch, 1001));

    sim.schedule_inject(500, ch, "fob", encode(make_ping()));
    sim.schedule_inject(1001, ch, "fob", encode(make_ping_reply()));
    sim.run_until(2000);

    // Only the post-window frame got through...
    REQUIRE(probe.seen.size() == 1);
    CHECK(probe.seen[0].frame == make_ping_reply());
    // ...but the tap heard both, and both TX lines are in the trace.
    REQUIRE(recorder.captures().size() == 2);
    CHECK(recorder.captures()[0].at == 500);
    CHECK(recorder.captures()[1].at == 1001);
    int tx_lines = 0, rx_lines = 0;
    for (const auto& rec : sim.trace().records()) {
        if (rec.dir == TraceDir::Tx) ++tx_lines;
        if (rec.dir == TraceDir::Rx) ++rx_lines;
    }
    CHECK(tx_lines == 2);
    CHECK(rx_lines == 1);
}

TEST_CASE("relay pair bridges channels without looping") {
    Simulation sim;
    const ChannelId near = sim.add_channel(1);
    const ChannelId far = sim.add_channel(1);
    Probe fob("fob"), car("car");
    fob.reply = make_id_announce(CarKeyId{0x42});
    sim.attach(fob, near);
    sim.attach(car, far);

    RelayTap to_far("thief-near", far, 20);
    RelayTap to_near("thief-far", near, 20);
    to_far.set_partner("thief-far");
    to_near.set_partner("thief-near");
    sim.add_tap(near, to_far);
    sim.add_tap(far, to_near);

    sim.schedule_button(100, "fob", Button::Unlock);
    sim.run_until(5000);

    // The fob's frame crossed the bridge exactly once: transmitted on the
    // near channel at 100, re-injected on the far channel at 120, delivered
    // to the car at 121. The far-side relay skips its partner's injection,
    // so nothing bounces back to the fob.
    REQUIRE(car.seen.size() == 1);
    CHECK(car.seen[0].at == 121);
    CHECK(car.seen[0].frame == *fob.reply);
    CHECK(fob.seen.empty());

    int tx_lines = 0;
    for (const auto& rec : sim.trace().records()) {
        if (rec.dir == TraceDir::Tx) ++tx_lines;
    }
    CHECK(tx_lines == 2); // fob at 100, thief-near at 120, then silence
}

TEST_CASE("move_endpoint re-homes future deliveries") {
    Simulation sim;
    const ChannelId a = sim.add_channel(1);
    const ChannelId b = sim.add_channel(1);
    Probe probe("probe");
    sim.attach(probe, a);

    sim.schedule_inject(10, a, "origin", encode(make_ping()));
    sim.run_until(50);
    REQUIRE(probe.seen.size() == 1);

    sim.move_endpoint("probe", b);
    sim.schedule_inject(100, a, "origin", encode(make_ping()));
    sim.schedule_inject(200, b, "origin", encode(make_ping_reply()));
    sim.run_until(300);

    REQUIRE(probe.seen.size() == 2);
    CHECK(probe.seen[1].frame == make_ping_reply());
    CHECK(probe.seen[1].at == 201);
}

TEST_CASE("button and vehicle inputs appear as STATE records, actuators as ACT") {
    Simulation sim;
    const ChannelId ch = sim.add_channel(1);
    Probe probe("probe");
    probe.actuate = ActuatorKind::Honk;
    sim.attach(probe, ch);

    sim.schedule_button(10, "probe", Button::Lock);
    sim.schedule_vehicle(20, "probe", VehicleEvent::DoorClosed);
    sim.run_until(100);

    bool saw_button = false, saw_vehicle = false, saw_act = false;
    for (const auto& rec : sim.trace().records()) {
        if (rec.dir == TraceDir::State && rec.detail == "EVT:BUTTON_LOCK" && rec.time == 10)
            saw_button = true;
        if (rec.dir == TraceDir::State && rec.detail == "EVT:DOOR_CLOSED" && rec.time == 20)
            saw_vehicle = true;
        if (rec.dir == TraceDir::Act && rec.detail == "HONK" && rec.time == 10) saw_act = true;
    }
    CHECK(saw_button);
    CHECK(saw_vehicle);
    CHECK(saw_act);

    REQUIRE(sim.actuators().size() == 1);
    CHECK(sim.actuators()[0].at == 10);
    CHECK(sim.actuators()[0].endpoint == "probe");
    CHECK(sim.actuators()[0].kind == ActuatorKind::Honk);
}

TEST_CASE("identical schedules render identical traces") {
    const auto run_once = [] {
        Simulation sim;
        const ChannelId ch = sim.add_channel(1);
        Probe a("a"), b("b");
        a.reply = make_ping();
        b.reply = make_ping_reply();
        sim.attach(a, ch);
        sim.attach(b, ch);
        sim.trace().set_role("a", "probe");
        sim.trace().set_role("b", "probe");
        sim.trace().set_param("seed", 1);
        for (Ms t = 10; t < 400; t += 37) {
            sim.schedule_button(t, (t % 2) ? "a" : "b", Button::Unlock);
        }
        sim.schedule_inject(55, ch, "noise", {0x01, 0x02});
        sim.run_until(1000);
        return sim.trace().render();
    };
    const std::string first = run_once();
    CHECK_FALSE(first.empty());
    CHECK(first == run_once());
}
