#include "rke/devices.hpp"

#include <algorithm>

namespace rke {

namespace {

CommandCode command_for(Button button) {
    switch (button) {
    case Button::Lock: return CommandCode::Lock;
    case Button::Unlock: return CommandCode::Unlock;
    case Button::Boot: return CommandCode::OpenBoot;
    }
    return CommandCode::Lock;
}

} // namespace

const char* to_string(KeyFob::State state) {
    switch (state) {
    case KeyFob::State::Idle: return "IDLE";
    case KeyFob::State::WaitChallenge: return "WAIT_CHALLENGE";
    case KeyFob::State::WaitAuthOk: return "WAIT_AUTH_OK";
    case KeyFob::State::StartWaitAuth: return "START_WAIT_AUTH";
    }
    return "?";
}

const char* to_string(CarTransceiver::State state) {
    switch (state) {
    case CarTransceiver::State::Idle: return "IDLE";
    case CarTransceiver::State::WaitAuth: return "WAIT_AUTH";
    case CarTransceiver::State::WaitCommand: return "WAIT_COMMAND";
    case CarTransceiver::State::StartWaitInit: return "START_WAIT_INIT";
    case CarTransceiver::State::StartWaitConfirm: return "START_WAIT_CONFIRM";
    case CarTransceiver::State::Blocked: return "BLOCKED";
    }
    return "?";
}

const char* to_string(CarTransceiver::JamState state) {
    switch (state) {
    case CarTransceiver::JamState::Inactive: return "INACTIVE";
    case CarTransceiver::JamState::WatchDoor: return "WATCH_DOOR";
    case CarTransceiver::JamState::WatchDoorOpened: return "WATCH_DOOR_OPENED";
    case CarTransceiver::JamState::WaitLockOrReply: return "WAIT_LOCK_OR_REPLY";
    case CarTransceiver::JamState::Honking: return "HONKING";
    case CarTransceiver::JamState::AutolockCountdown: return "AUTOLOCK_COUNTDOWN";
    }
    return "?";
}

KeyFob::KeyFob(std::string name, CarKeyId id, KeyTable table,
               std::unique_ptr<EntropySource> entropy, TableParams params, Timeouts timeouts)
    : Endpoint(std::move(name)),
      id_(id),
      table_(std::move(table)),
      entropy_(std::move(entropy)),
      params_(params),
      timeouts_(timeouts),
      staging_(table_.values.size(), 0) {}

void KeyFob::on_button(Button button, Ms now, EndpointOut& out) {
    if (state_ != State::Idle) return; // one transaction at a time
    pending_ = command_for(button);
    out.frames.push_back(make_id_announce(id_));
    state_ = State::WaitChallenge;
    deadline_ = now + timeouts_.t_challenge;
}

void KeyFob::on_frame(const Frame& frame, Ms now, EndpointOut& out) {
    switch (state_) {
    case State::Idle:
        if (frame.type == MsgType::IdRequest) {
            sent_challenge_ = generate_challenge(*entropy_, params_);
            out.frames.push_back(make_start_init(id_, sent_challenge_));
            state_ = State::StartWaitAuth;
            deadline_ = now + timeouts_.t_start;
        } else if (frame.type == MsgType::Ping) {
            out.frames.push_back(make_ping_reply());
        }
        return;
    case State::WaitChallenge:
        if (frame.type == MsgType::Challenge) {
            const auto challenge = parse_challenge_frame(frame);
            if (!challenge || !challenge_valid(*challenge, params_)) return;
            out.frames.push_back(
                make_auth_response(build_auth_message(table_, *challenge, params_)));
            state_ = State::WaitAuthOk;
            deadline_ = now + timeouts_.t_auth_ok;
        }
        return;
    case State::WaitAuthOk:
        if (frame.type == MsgType::AuthOk) {
            out.frames.push_back(make_command(pending_));
            state_ = State::Idle;
        }
        return;
    case State::StartWaitAuth:
        if (frame.type == MsgType::StartAuth) {
            const auto payload = parse_start_auth(frame);
            state_ = State::Idle; // one shot either way; failure stays silent
            if (!payload || !challenge_valid(payload->challenge, params_)) return;
            if (!verify_auth_message(table_, sent_challenge_, payload->message, params_)) return;
            out.frames.push_back(
                make_start_confirm(build_auth_message(table_, payload->challenge, params_)));
        }
        return;
    }
}

void KeyFob::on_tick(Ms now, EndpointOut&) {
    if (state_ != State::Idle && now >= deadline_) state_ = State::Idle;
}

std::optional<Ms> KeyFob::next_deadline() const {
    if (state_ == State::Idle) return std::nullopt;
    return deadline_;
}

std::string KeyFob::state_name() const { return to_string(state_); }

Frame KeyFob::wired_exchange(const Frame& request,
                             const std::function<bool(std::uint16_t)>& write_ok) {
    switch (request.type) {
    case MsgType::ProgIdRequest:
        return make_prog_id_response(id_);
    case MsgType::ProgWrite: {
        const auto write = parse_prog_write(request);
        if (!write) return make_prog_nack(0);
        const std::size_t offset = std::size_t{write->block_seq} * kProgBlockValues;
        if (write->block_seq >= kProgBlockCount ||
            offset + write->values.size() > staging_.size()) {
            return make_prog_nack(write->block_seq);
        }
        if (write_ok && !write_ok(write->block_seq)) {
            return make_prog_nack(write->block_seq); // EEPROM write failed, nothing stored
        }
        std::copy(write->values.begin(), write->values.end(), staging_.begin() + offset);
        staged_blocks_ |= 1u << write->block_seq;
        return make_prog_ack(write->block_seq);
    }
    case MsgType::ProgCommit: {
        const auto generation = parse_prog_commit(request);
        const std::uint32_t full = (1u << kProgBlockCount) - 1;
        if (!generation || staged_blocks_ != full) return make_prog_nack(kAckSeqCommit);
        table_.values = staging_;
        table_.generation = *generation;
        staged_blocks_ = 0;
        return make_prog_ack(kAckSeqCommit);
    }
    case MsgType::ProgRollback:
        staged_blocks_ = 0;
        return make_prog_ack(kAckSeqRollback);
    default:
        return make_prog_nack(0);
    }
}

CarTransceiver::CarTransceiver(std::string name, CarKeyId id, KeyTable table,
                               std::unique_ptr<EntropySource> entropy, TableParams params,
                               Timeouts timeouts, CarOptions options)
    : Endpoint(std::move(name)),
      id_(id),
      table_(std::move(table)),
      entropy_(std::move(entropy)),
      params_(params),
      timeouts_(timeouts),
      options_(options) {}

void CarTransceiver::record_failure(Ms now) {
    state_ = State::Idle;
    while (!failure_log_.empty() && failure_log_.front() + timeouts_.w_fail <= now) {
        failure_log_.pop_front();
    }
    failure_log_.push_back(now);
    if (failure_log_.size() >= 3 && options_.lockout_enabled) {
        state_ = State::Blocked;
        blocked_until_ = now + timeouts_.t_block;
        failure_log_.clear();
        jam_ = JamState::Inactive; // a blocked car stays silent, honks included
    }
}

void CarTransceiver::run_command(CommandCode code, EndpointOut& out) {
    switch (code) {
    case CommandCode::Lock:
        out.actuators.push_back(ActuatorKind::LockDoors);
        door_locked_ = true;
        jam_ = JamState::Inactive; // the lock the defense was waiting for
        break;
    case CommandCode::Unlock:
        out.actuators.push_back(ActuatorKind::UnlockDoors);
        door_locked_ = false;
        break;
    case CommandCode::OpenBoot:
        out.actuators.push_back(ActuatorKind::OpenBoot);
        break;
    }
}

void CarTransceiver::on_frame(const Frame& frame, Ms now, EndpointOut& out) {
    if (state_ == State::Blocked) {
        if (now < blocked_until_) return;
        state_ = State::Idle;
    }
    if (frame.type == MsgType::PingReply) {
        if (jam_ == JamState::WaitLockOrReply) jam_ = JamState::Inactive;
        return;
    }
    switch (state_) {
    case State::Idle:
        if (frame.type == MsgType::IdAnnounce) {
            const auto announced = parse_id_announce(frame);
            if (!announced) return;
            if (announced->value != id_.value) {
                ++wrong_id_count_;
                return;
            }
            sent_challenge_ = generate_challenge(*entropy_, params_);
            out.frames.push_back(make_challenge_frame(sent_challenge_));
            state_ = State::WaitAuth;
            deadline_ = now + timeouts_.t_auth;
        }
        return;
    case State::WaitAuth:
        if (frame.type == MsgType::AuthResponse) {
            const auto message = parse_auth_response(frame);
            if (!message) return;
            if (verify_auth_message(table_, sent_challenge_, *message, params_)) {
                out.frames.push_back(make_auth_ok());
                state_ = State::WaitCommand;
                deadline_ = now + timeouts_.t_command;
            } else {
                record_failure(now);
            }
        }
        return;
    case State::WaitCommand:
        if (frame.type == MsgType::Command) {
            const auto code = parse_command(frame);
            if (!code) return;
            run_command(*code, out);
            state_ = State::Idle;
        }
        return;
    case State::StartWaitInit:
        if (frame.type == MsgType::StartInit) {
            const auto init = parse_start_init(frame);
            if (!init || !challenge_valid(init->challenge, params_)) return;
            if (init->id.value != id_.value) {
                ++wrong_id_count_;
                return;
            }
            const AuthMessage reply = build_auth_message(table_, init->challenge, params_);
            sent_challenge_ = generate_challenge(*entropy_, params_);
            out.frames.push_back(make_start_auth(reply, sent_challenge_));
            state_ = State::StartWaitConfirm;
            deadline_ = now + timeouts_.t_start;
        }
        return;
    case State::StartWaitConfirm:
        if (frame.type == MsgType::StartConfirm) {
            const auto message = parse_start_confirm(frame);
            if (!message) return;
            if (verify_auth_message(table_, sent_challenge_, *message, params_)) {
                out.actuators.push_back(ActuatorKind::StartEngine);
                engine_running_ = true;
                state_ = State::Idle;
            } else {
                record_failure(now);
            }
        }
        return;
    case State::Blocked:
        return;
    }
}

void CarTransceiver::on_vehicle(VehicleEvent event, Ms now, EndpointOut& out) {
    switch (event) {
    case VehicleEvent::MotorOff:
        engine_running_ = false;
        if (options_.defense_enabled && state_ != State::Blocked) jam_ = JamState::WatchDoor;
        return;
    case VehicleEvent::DoorOpened:
        if (jam_ == JamState::WatchDoor) jam_ = JamState::WatchDoorOpened;
        return;
    case VehicleEvent::DoorClosed:
        if (jam_ == JamState::WatchDoorOpened) {
            jam_ = JamState::WaitLockOrReply;
            jam_deadline_ = now + timeouts_.t_jam;
            out.frames.push_back(make_ping());
            next_ping_ = now + timeouts_.t_ping;
        }
        return;
    case VehicleEvent::StartButton:
        if (state_ == State::Idle) {
            out.frames.push_back(make_id_request());
            state_ = State::StartWaitInit;
            deadline_ = now + timeouts_.t_start;
        }
        return;
    case VehicleEvent::HandlePull:
        return; // no passive entry in this protocol
    }
}

bool CarTransceiver::tick_once(Ms now, EndpointOut& out) {
    if (state_ == State::Blocked) {
        if (now >= blocked_until_) {
            state_ = State::Idle;
            return true;
        }
    } else if (state_ != State::Idle && now >= deadline_) {
        state_ = State::Idle; // timeout is not a wrong message
        return true;
    }
    switch (jam_) {
    case JamState::WaitLockOrReply:
        if (now >= jam_deadline_) {
            jam_ = JamState::Honking;
            out.actuators.push_back(ActuatorKind::Honk);
            honks_done_ = 1;
            next_honk_ = now + timeouts_.honk_spacing;
            autolock_at_ = now + timeouts_.t_autolock;
            return true;
        }
        if (now >= next_ping_) {
            out.frames.push_back(make_ping());
            next_ping_ += timeouts_.t_ping;
            return true;
        }
        return false;
    case JamState::Honking:
        if (now >= next_honk_) {
            out.actuators.push_back(ActuatorKind::Honk);
            if (++honks_done_ >= kHonkCount) {
                jam_ = JamState::AutolockCountdown;
            } else {
                next_honk_ += timeouts_.honk_spacing;
            }
            return true;
        }
        return false;
    case JamState::AutolockCountdown:
        if (now >= autolock_at_) {
            out.actuators.push_back(ActuatorKind::LockDoors);
            door_locked_ = true;
            jam_ = JamState::Inactive;
            return true;
        }
        return false;
    default:
        return false;
    }
}

void CarTransceiver::on_tick(Ms now, EndpointOut& out) {
    while (tick_once(now, out)) {
    }
}

std::optional<Ms> CarTransceiver::next_deadline() const {
    std::optional<Ms> next;
    const auto consider = [&next](Ms candidate) {
        if (!next || candidate < *next) next = candidate;
    };
    if (state_ == State::Blocked) {
        consider(blocked_until_);
    } else if (state_ != State::Idle) {
        consider(deadline_);
    }
    switch (jam_) {
    case JamState::WaitLockOrReply:
        consider(jam_deadline_);
        consider(next_ping_);
        break;
    case JamState::Honking:
        consider(next_honk_);
        break;
    case JamState::AutolockCountdown:
        consider(autolock_at_);
        break;
    default:
        break;
    }
    return next;
}

std::string CarTransceiver::state_name() const {
    std::string name = to_string(state_);
    if (jam_ != JamState::Inactive) {
        name += '/';
        name += to_string(jam_);
    }
    return name;
}

void emit_trace_params(Trace& trace, const Timeouts& timeouts, const CarOptions& options) {
    trace.set_param("t_challenge", timeouts.t_challenge);
    trace.set_param("t_auth_ok", timeouts.t_auth_ok);
    trace.set_param("t_auth", timeouts.t_auth);
    trace.set_param("t_command", timeouts.t_command);
    trace.set_param("t_start", timeouts.t_start);
    trace.set_param("t_jam", timeouts.t_jam);
    trace.set_param("t_autolock", timeouts.t_autolock);
    trace.set_param("t_block", timeouts.t_block);
    trace.set_param("w_fail", timeouts.w_fail);
    trace.set_param("t_ping", timeouts.t_ping);
    trace.set_param("honk_spacing", timeouts.honk_spacing);
    trace.set_param("lockout_enabled", options.lockout_enabled ? 1 : 0);
    trace.set_param("defense_enabled", options.defense_enabled ? 1 : 0);
}

} // namespace rke
