#include "rke/sim.hpp"

#include <algorithm>
#include <stdexcept>

namespace rke {

const char* to_string(Button button) {
    switch (button) {
    case Button::Lock: return "EVT:BUTTON_LOCK";
    case Button::Unlock: return "EVT:BUTTON_UNLOCK";
    case Button::Boot: return "EVT:BUTTON_BOOT";
    }
    return "?";
}

const char* to_string(VehicleEvent event) {
    switch (event) {
    case VehicleEvent::MotorOff: return "EVT:MOTOR_OFF";
    case VehicleEvent::DoorOpened: return "EVT:DOOR_OPENED";
    case VehicleEvent::DoorClosed: return "EVT:DOOR_CLOSED";
    case VehicleEvent::StartButton: return "EVT:START_BUTTON";
    case VehicleEvent::HandlePull: return "EVT:HANDLE_PULL";
    }
    return "?";
}

const char* to_string(ActuatorKind kind) {
    switch (kind) {
    case ActuatorKind::LockDoors: return "LOCK_DOORS";
    case ActuatorKind::UnlockDoors: return "UNLOCK_DOORS";
    case ActuatorKind::OpenBoot: return "OPEN_BOOT";
    case ActuatorKind::StartEngine: return "START_ENGINE";
    case ActuatorKind::Honk: return "HONK";
    }
    return "?";
}

void Endpoint::on_frame(const Frame&, Ms, EndpointOut&) {}
void Endpoint::on_tick(Ms, EndpointOut&) {}
void Endpoint::on_button(Button, Ms, EndpointOut&) {}
void Endpoint::on_vehicle(VehicleEvent, Ms, EndpointOut&) {}

ChannelId Simulation::add_channel(Ms propagation_delay) {
    channels_.push_back(Channel{propagation_delay, {}, {}, {}});
    return static_cast<ChannelId>(channels_.size()) - 1;
}

void Simulation::attach(Endpoint& endpoint, ChannelId channel) {
    channels_.at(channel).endpoints.push_back(endpoints_.size());
    endpoints_.push_back(&endpoint);
    endpoint_channel_.push_back(channel);
    scheduled_timer_.push_back(0);
    trace_.set_role(endpoint.name(), endpoint.role());
}

void Simulation::move_endpoint(std::string_view endpoint, ChannelId channel) {
    const std::size_t index = index_of(endpoint);
    auto& old_members = channels_.at(endpoint_channel_[index]).endpoints;
    old_members.erase(std::find(old_members.begin(), old_members.end(), index));
    channels_.at(channel).endpoints.push_back(index);
    endpoint_channel_[index] = channel;
}

void Simulation::add_tap(ChannelId channel, Tap& tap) { channels_.at(channel).taps.push_back(&tap); }

void Simulation::add_jam_window(ChannelId channel, Ms from, Ms to) {
    channels_.at(channel).jam_windows.emplace_back(from, to);
}

bool Simulation::jammed_at(ChannelId channel, Ms at) const {
    for (const auto& [from, to] : channels_.at(channel).jam_windows) {
        if (at >= from && at <= to) return true;
    }
    return false;
}

std::size_t Simulation::index_of(std::string_view endpoint) const {
    for (std::size_t i = 0; i < endpoints_.size(); ++i) {
        if (endpoints_[i]->name() == endpoint) return i;
    }
    throw std::invalid_argument("no endpoint named " + std::string(endpoint));
}

void Simulation::push(Event event) {
    event.seq = next_seq_++;
    if (event.at < now_) event.at = now_;
    queue_.push(std::move(event));
}

void Simulation::schedule_button(Ms at, std::string_view endpoint, Button button) {
    Event e;
    e.at = at;
    e.kind = EventKind::ButtonPress;
    e.endpoint = index_of(endpoint);
    e.button = button;
    push(std::move(e));
}

void Simulation::schedule_vehicle(Ms at, std::string_view endpoint, VehicleEvent event) {
    Event e;
    e.at = at;
    e.kind = EventKind::Vehicle;
    e.endpoint = index_of(endpoint);
    e.vehicle = event;
    push(std::move(e));
}

void Simulation::schedule_inject(Ms at, ChannelId channel, std::string_view origin,
                                 std::vector<std::uint8_t> bytes) {
    Event e;
    e.at = at;
    e.kind = EventKind::Inject;
    e.channel = channel;
    e.origin = std::string(origin);
    e.bytes = std::move(bytes);
    push(std::move(e));
}

void Simulation::transmit_from(std::string_view origin, ChannelId channel,
                               std::vector<std::uint8_t> bytes) {
    trace_.log_frame(now_, TraceDir::Tx, origin, bytes);
    Channel& ch = channels_.at(channel);
    bool deliver = true;
    for (Tap* tap : ch.taps) {
        if (!tap->on_transmit(origin, bytes, now_, *this)) deliver = false;
    }
    if (jammed_at(channel, now_)) deliver = false;
    if (!deliver) return;
    for (std::size_t target : ch.endpoints) {
        if (endpoints_[target]->name() == origin) continue;
        Event e;
        e.at = now_ + ch.propagation_delay;
        e.kind = EventKind::Deliver;
        e.endpoint = target;
        e.bytes = bytes;
        push(std::move(e));
    }
}

void Simulation::reschedule_timer(std::size_t index) {
    const auto deadline = endpoints_[index]->next_deadline();
    if (!deadline || *deadline <= now_) return;
    if (scheduled_timer_[index] == *deadline) return; // already queued
    scheduled_timer_[index] = *deadline;
    Event e;
    e.at = *deadline;
    e.kind = EventKind::Timer;
    e.endpoint = index;
    push(std::move(e));
}

void Simulation::finish_endpoint_event(std::size_t index, const std::string& pre_state,
                                       EndpointOut& out) {
    Endpoint& ep = *endpoints_[index];
    for (const Frame& frame : out.frames) {
        transmit_from(ep.name(), endpoint_channel_[index], encode(frame));
    }
    for (ActuatorKind kind : out.actuators) {
        trace_.log(now_, TraceDir::Act, ep.name(), to_string(kind));
        actuators_.push_back({now_, ep.name(), kind});
    }
    const std::string post_state = ep.state_name();
    if (post_state != pre_state && !post_state.empty()) {
        trace_.log(now_, TraceDir::State, ep.name(), post_state);
    }
    reschedule_timer(index);
}

void Simulation::dispatch(const Event& event) {
    switch (event.kind) {
    case EventKind::Inject:
        transmit_from(event.origin, event.channel, event.bytes);
        return;
    case EventKind::Deliver: {
        Endpoint& ep = *endpoints_[event.endpoint];
        trace_.log_frame(now_, TraceDir::Rx, ep.name(), event.bytes);
        const DecodeResult decoded = decode(event.bytes);
        if (!decoded) return; // malformed bytes never reach device logic
        EndpointOut out;
        const std::string pre = ep.state_name();
        ep.on_frame(*decoded.frame, now_, out);
        finish_endpoint_event(event.endpoint, pre, out);
        return;
    }
    case EventKind::Timer: {
        Endpoint& ep = *endpoints_[event.endpoint];
        EndpointOut out;
        const std::string pre = ep.state_name();
        ep.on_tick(now_, out);
        finish_endpoint_event(event.endpoint, pre, out);
        return;
    }
    case EventKind::ButtonPress: {
        Endpoint& ep = *endpoints_[event.endpoint];
        trace_.log(now_, TraceDir::State, ep.name(), to_string(event.button));
        EndpointOut out;
        const std::string pre = ep.state_name();
        ep.on_button(event.button, now_, out);
        finish_endpoint_event(event.endpoint, pre, out);
        return;
    }
    case EventKind::Vehicle: {
        Endpoint& ep = *endpoints_[event.endpoint];
        trace_.log(now_, TraceDir::State, ep.name(), to_string(event.vehicle));
        EndpointOut out;
        const std::string pre = ep.state_name();
        ep.on_vehicle(event.vehicle, now_, out);
        finish_endpoint_event(event.endpoint, pre, out);
        return;
    }
    }
}

void Simulation::run_until(Ms t_end) {
    for (std::size_t i = 0; i < endpoints_.size(); ++i) reschedule_timer(i);
    while (!queue_.empty() && queue_.top().at <= t_end) {
        Event event = queue_.top();
        queue_.pop();
        now_ = event.at;
        dispatch(event);
    }
    if (t_end > now_) now_ = t_end;
}

bool RecorderTap::on_transmit(std::string_view from, std::span<const std::uint8_t> bytes, Ms now,
                              Simulation&) {
    captures_.push_back({now, std::string(from), {bytes.begin(), bytes.end()}});
    return true;
}

bool RelayTap::on_transmit(std::string_view from, std::span<const std::uint8_t> bytes, Ms now,
                           Simulation& sim) {
    if (from == name_ || from == partner_) return true; // don't relay the relay
    sim.schedule_inject(now + delay_, far_channel_, name_, {bytes.begin(), bytes.end()});
    return true;
}

} // namespace rke
