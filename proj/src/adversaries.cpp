#include "rke/adversaries.hpp"

#include <map>
#include <utility>

#include "rke/authcrypt.hpp"
#include "rke/baselines.hpp"
#include "rke/predictor.hpp"

namespace rke {

namespace {

KeyTable make_table(const TargetConfig& target) {
    auto entropy = make_entropy(EntropyKind::Strong, derive_seed(target.seed, "table"));
    return new_key_table(*entropy, target.params);
}

// Run the auditor over the finished world; the auditor's findings are the
// only source of `succeeded`.
AttackOutcome adjudicate(Simulation& sim, std::uint64_t attempts, bool wants_door_unlocked) {
    AttackOutcome outcome;
    outcome.attempts = attempts;
    outcome.elapsed = sim.now();
    outcome.trace_text = sim.trace().render();
    outcome.audit = audit_trace(outcome.trace_text);
    outcome.evidence = outcome.audit.attacker_evidence;
    outcome.succeeded = wants_door_unlocked ? !outcome.audit.car_locked_at_end
                                            : outcome.audit.attacker_caused_entry;
    return outcome;
}

// Announce with a learned ID, wait for a challenge, answer it, send UNLOCK
// on AUTH_OK. Subclasses decide the answer; the loop paces retries and so
// respects lockouts for free (a blocked car simply never challenges back).
class LoopAttacker : public Endpoint {
public:
    LoopAttacker(std::string name, Ms start, std::uint64_t budget)
        : Endpoint(std::move(name)), next_try_(start), budget_(budget) {}

    const char* role() const override { return "adversary"; }

    std::uint64_t attempts() const { return attempts_; }
    bool done() const { return done_; }
    bool mid_attempt() const { return in_flight_; }

    void on_frame(const Frame& frame, Ms now, EndpointOut& out) override {
        switch (frame.type) {
        case MsgType::IdAnnounce:
            if (!id_) id_ = parse_id_announce(frame);
            break;
        case MsgType::Challenge:
            if (in_flight_) {
                if (const auto challenge = parse_challenge_frame(frame)) {
                    if (answer(*challenge, out)) ++attempts_;
                }
            } else {
                observe(frame, now);
            }
            break;
        case MsgType::AuthOk:
            if (in_flight_) {
                out.frames.push_back(make_command(CommandCode::Unlock));
                in_flight_ = false;
                done_ = true;
            }
            break;
        default:
            observe(frame, now);
            break;
        }
    }

    void on_tick(Ms now, EndpointOut& out) override {
        if (done_) return;
        if (in_flight_) {
            if (now >= flight_deadline_) {
                in_flight_ = false;
                next_try_ = now + kRetryGap;
            }
            return;
        }
        if (now < next_try_ || attempts_ >= budget_) return;
        if (!id_) {
            next_try_ = now + kRetryGap; // keep polling until one session leaks the ID
            return;
        }
        out.frames.push_back(make_id_announce(*id_));
        in_flight_ = true;
        flight_deadline_ = now + kFlightWindow;
    }

    std::optional<Ms> next_deadline() const override {
        if (done_) return std::nullopt;
        if (in_flight_) return flight_deadline_;
        if (attempts_ >= budget_) return std::nullopt;
        return next_try_;
    }

protected:
    virtual bool answer(const Challenge& challenge, EndpointOut& out) = 0;
    virtual void observe(const Frame&, Ms) {}

    static constexpr Ms kRetryGap = 500;
    static constexpr Ms kFlightWindow = 1200; // covers challenge + verdict round trips

private:
    std::optional<CarKeyId> id_;
    Ms next_try_;
    Ms flight_deadline_ = 0;
    std::uint64_t budget_;
    std::uint64_t attempts_ = 0;
    bool in_flight_ = false;
    bool done_ = false;
};

class ScanAttacker final : public LoopAttacker {
public:
    ScanAttacker(std::string name, Ms start, std::uint64_t budget,
                 std::unique_ptr<EntropySource> entropy, TableParams params)
        : LoopAttacker(std::move(name), start, budget),
          entropy_(std::move(entropy)),
          params_(params) {}

private:
    bool answer(const Challenge&, EndpointOut& out) override {
        out.frames.push_back(make_auth_response(random_auth_message(*entropy_, params_)));
        return true;
    }

    std::unique_ptr<EntropySource> entropy_;
    TableParams params_;
};

class PlaybackAttacker final : public LoopAttacker {
public:
    PlaybackAttacker(std::string name, Ms attack_start, std::uint64_t budget)
        : LoopAttacker(std::move(name), attack_start, budget) {}

    std::size_t recorded() const { return recordings_.size(); }

private:
    void observe(const Frame& frame, Ms) override {
        if (frame.type == MsgType::Challenge) {
            pending_ = parse_challenge_frame(frame);
        } else if (frame.type == MsgType::AuthResponse && pending_) {
            lookup_.emplace(*pending_, recordings_.size());
            recordings_.push_back({std::move(*pending_), frame});
            pending_.reset();
        }
    }

    bool answer(const Challenge& challenge, EndpointOut& out) override {
        if (recordings_.empty()) return false;
        const auto hit = lookup_.find(challenge);
        const Frame& reply =
            hit != lookup_.end() ? recordings_[hit->second].second : recordings_.back().second;
        out.frames.push_back(reply);
        return true;
    }

    std::optional<Challenge> pending_;
    std::vector<std::pair<Challenge, Frame>> recordings_;
    std::map<Challenge, std::size_t> lookup_;
};

// Phase one: passively collect every challenge the car transmits. Phase
// three (after arm()): announce once and play the harvested response.
class PredictorAgent final : public Endpoint {
public:
    explicit PredictorAgent(std::string name) : Endpoint(std::move(name)) {}

    const char* role() const override { return "adversary"; }

    const std::vector<Challenge>& observed() const { return observed_; }
    std::optional<CarKeyId> learned_id() const { return id_; }

    void arm(Ms replay_at, Frame harvested) {
        replay_at_ = replay_at;
        harvested_ = std::move(harvested);
    }

    void on_frame(const Frame& frame, Ms, EndpointOut& out) override {
        switch (frame.type) {
        case MsgType::IdAnnounce:
            if (!id_) id_ = parse_id_announce(frame);
            break;
        case MsgType::Challenge:
            if (launched_ && !done_) {
                out.frames.push_back(*harvested_);
            } else if (const auto challenge = parse_challenge_frame(frame)) {
                observed_.push_back(*challenge);
            }
            break;
        case MsgType::AuthOk:
            if (launched_ && !done_) {
                out.frames.push_back(make_command(CommandCode::Unlock));
                done_ = true;
            }
            break;
        default:
            break;
        }
    }

    void on_tick(Ms now, EndpointOut& out) override {
        if (!harvested_ || launched_ || now < replay_at_) return;
        if (!id_) return;
        out.frames.push_back(make_id_announce(*id_));
        launched_ = true;
    }

    std::optional<Ms> next_deadline() const override {
        if (harvested_ && !launched_) return replay_at_;
        return std::nullopt;
    }

private:
    std::optional<CarKeyId> id_;
    std::vector<Challenge> observed_;
    std::optional<Frame> harvested_;
    Ms replay_at_ = 0;
    bool launched_ = false;
    bool done_ = false;
};

// Waits near the owner. When the fob announces, poses the forecast
// challenge as if it were the car and keeps the response.
class FobProber final : public Endpoint {
public:
    explicit FobProber(std::string name) : Endpoint(std::move(name)) {}

    const char* role() const override { return "adversary"; }

    void pose(Challenge challenge) { challenge_ = std::move(challenge); }
    const std::optional<Frame>& harvested() const { return harvested_; }

    void on_frame(const Frame& frame, Ms, EndpointOut& out) override {
        switch (frame.type) {
        case MsgType::IdAnnounce:
            if (challenge_) out.frames.push_back(make_challenge_frame(*challenge_));
            break;
        case MsgType::AuthResponse:
            if (!harvested_) {
                harvested_ = frame;
                out.frames.push_back(make_auth_ok()); // lets the fob finish cleanly
            }
            break;
        default:
            break;
        }
    }

private:
    std::optional<Challenge> challenge_;
    std::optional<Frame> harvested_;
};

// Captures the first frame of the given type, re-transmits it once later.
class OneShotReplayer final : public Endpoint {
public:
    OneShotReplayer(std::string name, MsgType wanted, Ms replay_at)
        : Endpoint(std::move(name)), wanted_(wanted), replay_at_(replay_at) {}

    const char* role() const override { return "adversary"; }

    void on_frame(const Frame& frame, Ms, EndpointOut&) override {
        if (!captured_ && frame.type == wanted_) captured_ = frame;
    }

    void on_tick(Ms now, EndpointOut& out) override {
        if (sent_ || !captured_ || now < replay_at_) return;
        out.frames.push_back(*captured_);
        sent_ = true;
    }

    std::optional<Ms> next_deadline() const override {
        return sent_ ? std::nullopt : std::optional<Ms>(replay_at_);
    }

    bool sent() const { return sent_; }

private:
    MsgType wanted_;
    Ms replay_at_;
    std::optional<Frame> captured_;
    bool sent_ = false;
};

// Passive-CR flavor of observe/replay: collects challenge values, later
// answers one challenge with a canned response.
class CrAgent final : public Endpoint {
public:
    explicit CrAgent(std::string name) : Endpoint(std::move(name)) {}

    const char* role() const override { return "adversary"; }

    const std::vector<std::uint32_t>& observed() const { return observed_; }
    void arm(std::uint32_t response) { response_ = response; }

    void on_frame(const Frame& frame, Ms, EndpointOut& out) override {
        const auto value = parse_baseline(frame, MsgType::CrChallenge);
        if (!value) return;
        if (response_ && !done_) {
            out.frames.push_back(make_baseline(MsgType::CrResponse, *response_));
            done_ = true;
        } else {
            observed_.push_back(*value);
        }
    }

private:
    std::vector<std::uint32_t> observed_;
    std::optional<std::uint32_t> response_;
    bool done_ = false;
};

// Poses one passive-CR challenge to the fob and keeps the answer.
class CrProber final : public Endpoint {
public:
    CrProber(std::string name, Ms pose_at) : Endpoint(std::move(name)), pose_at_(pose_at) {}

    const char* role() const override { return "adversary"; }

    void pose(std::uint32_t challenge) { challenge_ = challenge; }
    std::optional<std::uint32_t> harvested() const { return harvested_; }

    void on_frame(const Frame& frame, Ms, EndpointOut&) override {
        if (const auto value = parse_baseline(frame, MsgType::CrResponse)) harvested_ = *value;
    }

    void on_tick(Ms now, EndpointOut& out) override {
        if (sent_ || !challenge_ || now < pose_at_) return;
        out.frames.push_back(make_baseline(MsgType::CrChallenge, *challenge_));
        sent_ = true;
    }

    std::optional<Ms> next_deadline() const override {
        return sent_ || !challenge_ ? std::nullopt : std::optional<Ms>(pose_at_);
    }

private:
    Ms pose_at_;
    std::optional<std::uint32_t> challenge_;
    std::optional<std::uint32_t> harvested_;
    bool sent_ = false;
};

// Drive the loop until the attacker settles (budget burned or entry made).
template <typename Attacker>
void run_attacker(Simulation& sim, Attacker& attacker, Ms hard_cap) {
    Ms t = sim.now();
    while (t < hard_cap) {
        t += 1000;
        sim.run_until(t);
        if (attacker.done()) {
            sim.run_until(t + 100); // let the final command land
            return;
        }
        if (!attacker.mid_attempt() && !attacker.next_deadline()) return;
    }
}

} // namespace

AttackOutcome scan_attack(const TargetConfig& target, std::uint64_t budget,
                          std::unique_ptr<EntropySource> guess_entropy) {
    const KeyTable table = make_table(target);
    CarTransceiver car("car", target.id, table,
                       make_entropy(target.car_entropy, derive_seed(target.seed, "car")),
                       target.params, target.timeouts, target.options);
    KeyFob fob("fob", target.id, table,
               make_entropy(target.fob_entropy, derive_seed(target.seed, "fob")), target.params,
               target.timeouts);
    ScanAttacker mallory("mallory", 3000, budget, std::move(guess_entropy), target.params);

    Simulation sim;
    const ChannelId channel = sim.add_channel();
    sim.attach(car, channel);
    sim.attach(fob, channel);
    sim.attach(mallory, channel);
    emit_trace_params(sim.trace(), target.timeouts, target.options);

    sim.schedule_button(1000, "fob", Button::Unlock); // the session that leaks the ID
    for (const auto& [at, button] : target.owner_presses) {
        sim.schedule_button(at, "fob", button);
    }

    Ms hard_cap = 3000 + budget * 2000 + 30000;
    if (target.options.lockout_enabled) {
        hard_cap += (budget / 3 + 1) * (target.timeouts.w_fail + target.timeouts.t_block);
    }
    run_attacker(sim, mallory, hard_cap);
    for (const auto& [at, button] : target.owner_presses) {
        if (at + 10000 > sim.now()) sim.run_until(at + 10000);
    }
    return adjudicate(sim, mallory.attempts(), false);
}

AttackOutcome playback_attack(const TargetConfig& target, std::uint32_t n_record,
                              std::uint32_t n_replay) {
    const KeyTable table = make_table(target);
    CarTransceiver car("car", target.id, table,
                       make_entropy(target.car_entropy, derive_seed(target.seed, "car")),
                       target.params, target.timeouts, target.options);
    KeyFob fob("fob", target.id, table,
               make_entropy(target.fob_entropy, derive_seed(target.seed, "fob")), target.params,
               target.timeouts);
    const Ms attack_start = 1000 + Ms{n_record} * 1000 + 1000;
    PlaybackAttacker mallory("mallory", attack_start, n_replay);

    Simulation sim;
    const ChannelId channel = sim.add_channel();
    sim.attach(car, channel);
    sim.attach(fob, channel);
    sim.attach(mallory, channel);
    emit_trace_params(sim.trace(), target.timeouts, target.options);

    for (std::uint32_t i = 0; i < n_record; ++i) {
        sim.schedule_button(1000 + Ms{i} * 1000, "fob", Button::Unlock);
    }
    for (const auto& [at, button] : target.owner_presses) {
        sim.schedule_button(at, "fob", button);
    }

    Ms hard_cap = attack_start + Ms{n_replay} * 2000 + 30000;
    if (target.options.lockout_enabled) {
        hard_cap += (Ms{n_replay} / 3 + 1) * (target.timeouts.w_fail + target.timeouts.t_block);
    }
    run_attacker(sim, mallory, hard_cap);
    for (const auto& [at, button] : target.owner_presses) {
        if (at + 10000 > sim.now()) sim.run_until(at + 10000);
    }
    return adjudicate(sim, mallory.attempts(), false);
}

AttackOutcome playback_attack_fixed_code(std::uint64_t seed) {
    const std::uint32_t code = static_cast<std::uint32_t>(mix64(derive_seed(seed, "fixed-code")));
    FixedCodeFobEndpoint fob("fob", code);
    FixedCodeCarEndpoint car("car", code);
    OneShotReplayer mallory("mallory", MsgType::FixedCode, 5000);

    Simulation sim;
    const ChannelId channel = sim.add_channel();
    sim.attach(car, channel);
    sim.attach(fob, channel);
    sim.attach(mallory, channel);
    emit_trace_params(sim.trace(), {}, {});

    sim.schedule_button(1000, "fob", Button::Unlock); // capture this
    sim.run_until(8000);
    return adjudicate(sim, 1, false);
}

AttackOutcome forward_prediction_attack(const TargetConfig& target, std::uint32_t n_observe) {
    const KeyTable table = make_table(target);
    CarTransceiver car("car", target.id, table,
                       make_entropy(target.car_entropy, derive_seed(target.seed, "car")),
                       target.params, target.timeouts, target.options);
    KeyFob fob("fob", target.id, table,
               make_entropy(target.fob_entropy, derive_seed(target.seed, "fob")), target.params,
               target.timeouts);
    PredictorAgent mallory("mallory");
    FobProber prober("mallory-far");

    Simulation sim;
    const ChannelId near_car = sim.add_channel();
    const ChannelId near_owner = sim.add_channel();
    sim.attach(car, near_car);
    sim.attach(fob, near_car);
    sim.attach(mallory, near_car);
    sim.attach(prober, near_owner);
    emit_trace_params(sim.trace(), target.timeouts, target.options);

    // Observe n_observe legitimate sessions.
    Ms t = 1000;
    for (std::uint32_t i = 0; i < n_observe; ++i, t += 2000) {
        sim.schedule_button(t, "fob", Button::Unlock);
    }
    sim.run_until(t);

    AttackOutcome outcome;
    const auto predicted = predict_next_challenge(mallory.observed(), target.params);
    outcome.predictor_failed = !predicted.has_value();
    Challenge posed;
    if (predicted) {
        posed = *predicted;
    } else {
        // Model falsified: the best remaining move is a uniform guess.
        auto fallback = make_entropy(EntropyKind::Strong, derive_seed(target.seed, "blind-guess"));
        posed = generate_challenge(*fallback, target.params);
    }

    // The owner walks out of the car's range; interrogate the fob there.
    sim.move_endpoint("fob", near_owner);
    prober.pose(posed);
    const Ms harvest_at = sim.now() + 1000;
    sim.schedule_button(harvest_at, "fob", Button::Unlock);
    sim.run_until(harvest_at + 500);

    if (prober.harvested()) {
        mallory.arm(sim.now() + 500, *prober.harvested());
        sim.run_until(sim.now() + 2000);
    }

    auto verdict = adjudicate(sim, 1, false);
    verdict.predictor_failed = outcome.predictor_failed;
    return verdict;
}

AttackOutcome forward_prediction_attack_passive_cr(std::uint64_t seed, EntropyKind car_entropy,
                                                   std::uint32_t n_observe) {
    const std::uint64_t key = derive_seed(seed, "cr-key");
    constexpr std::uint32_t kChallengeBits = 16;
    PassiveCrCarEndpoint car("car", key, make_entropy(car_entropy, derive_seed(seed, "car")),
                             kChallengeBits);
    PassiveCrFobEndpoint fob("fob", key, kChallengeBits);
    CrAgent mallory("mallory");

    Simulation sim;
    const ChannelId near_car = sim.add_channel();
    const ChannelId near_owner = sim.add_channel();
    const Ms pose_at = 1000 + Ms{n_observe} * 1000 + 1000;
    CrProber prober("mallory-far", pose_at);
    sim.attach(car, near_car);
    sim.attach(mallory, near_car);
    sim.attach(fob, near_owner);
    sim.attach(prober, near_owner);
    emit_trace_params(sim.trace(), {}, {});

    // The fob is with the owner, so these pulls leak challenges unanswered.
    for (std::uint32_t i = 0; i < n_observe; ++i) {
        sim.schedule_vehicle(1000 + Ms{i} * 1000, "car", VehicleEvent::HandlePull);
    }
    sim.run_until(pose_at - 100);

    bool predictor_failed = true;
    std::uint32_t posed = 0;
    if (const auto state = recover_lcg_state(mallory.observed(), 1u << kChallengeBits)) {
        posed = lcg_forecast(*state, 1u << kChallengeBits, 1).front();
        predictor_failed = false;
    } else {
        auto fallback = make_entropy(EntropyKind::Strong, derive_seed(seed, "blind-guess"));
        posed = fallback->next_uniform(1u << kChallengeBits);
    }

    prober.pose(posed);
    sim.run_until(pose_at + 200);

    if (const auto harvested = prober.harvested()) {
        mallory.arm(*harvested);
        sim.schedule_vehicle(pose_at + 500, "car", VehicleEvent::HandlePull);
    }
    sim.run_until(pose_at + 1500);

    auto verdict = adjudicate(sim, 1, false);
    verdict.predictor_failed = predictor_failed;
    return verdict;
}

AttackOutcome relay_attack(const TargetConfig& target, RelayTechnique technique, Ms relay_delay,
                           std::optional<Ms> victim_press_at) {
    Simulation sim;
    const ChannelId near_car = sim.add_channel();
    const ChannelId near_owner = sim.add_channel();

    RelayTap thief_car("thief-car", near_owner, relay_delay);
    RelayTap thief_owner("thief-owner", near_car, relay_delay);
    thief_car.set_partner(thief_owner.name());
    thief_owner.set_partner(thief_car.name());
    sim.add_tap(near_car, thief_car);
    sim.add_tap(near_owner, thief_owner);
    sim.trace().set_role(thief_car.name(), "adversary");
    sim.trace().set_role(thief_owner.name(), "adversary");

    const Ms horizon = victim_press_at.value_or(1000) + 3000;

    if (technique == RelayTechnique::PassiveCr) {
        const std::uint64_t key = derive_seed(target.seed, "cr-key");
        PassiveCrCarEndpoint car("car", key,
                                 make_entropy(target.car_entropy, derive_seed(target.seed, "car")));
        PassiveCrFobEndpoint fob("fob", key);
        sim.attach(car, near_car);
        sim.attach(fob, near_owner);
        emit_trace_params(sim.trace(), target.timeouts, target.options);
        sim.schedule_vehicle(1000, "car", VehicleEvent::HandlePull); // the thief pulls
        sim.run_until(horizon);
        return adjudicate(sim, 1, false);
    }

    const KeyTable table = make_table(target);
    CarTransceiver car("car", target.id, table,
                       make_entropy(target.car_entropy, derive_seed(target.seed, "car")),
                       target.params, target.timeouts, target.options);
    KeyFob fob("fob", target.id, table,
               make_entropy(target.fob_entropy, derive_seed(target.seed, "fob")), target.params,
               target.timeouts);
    sim.attach(car, near_car);
    sim.attach(fob, near_owner);
    emit_trace_params(sim.trace(), target.timeouts, target.options);

    sim.schedule_vehicle(1000, "car", VehicleEvent::HandlePull); // goes nowhere by design
    if (victim_press_at) sim.schedule_button(*victim_press_at, "fob", Button::Unlock);
    sim.run_until(horizon);
    return adjudicate(sim, 1, false);
}

AttackOutcome jam_attack(const TargetConfig& target, const JamScript& script) {
    const KeyTable table = make_table(target);
    CarTransceiver car("car", target.id, table,
                       make_entropy(target.car_entropy, derive_seed(target.seed, "car")),
                       target.params, target.timeouts, target.options);
    KeyFob fob("fob", target.id, table,
               make_entropy(target.fob_entropy, derive_seed(target.seed, "fob")), target.params,
               target.timeouts);

    Simulation sim;
    const ChannelId channel = sim.add_channel();
    sim.attach(car, channel);
    sim.attach(fob, channel);
    sim.add_jam_window(channel, script.jam_from, script.jam_to);
    emit_trace_params(sim.trace(), target.timeouts, target.options);
    sim.trace().comment("jammer active " + std::to_string(script.jam_from) + ".." +
                        std::to_string(script.jam_to));

    sim.schedule_vehicle(script.motor_off, "car", VehicleEvent::MotorOff);
    sim.schedule_vehicle(script.door_open, "car", VehicleEvent::DoorOpened);
    sim.schedule_vehicle(script.door_close, "car", VehicleEvent::DoorClosed);
    sim.schedule_button(script.lock_press, "fob", Button::Lock);
    sim.run_until(script.horizon);

    auto outcome = adjudicate(sim, 1, true);
    if (outcome.audit.lock_press_unserved) {
        outcome.evidence.push_back("LOCK press suppressed by the jammer");
    }
    return outcome;
}

} // namespace rke
