#include "rke/baselines.hpp"

#include <stdexcept>

namespace rke {

FeistelPermutation::FeistelPermutation(std::uint64_t key, std::uint32_t block_bits)
    : block_bits_(block_bits) {
    if (block_bits < 2 || block_bits > 32 || block_bits % 2 != 0) {
        throw std::invalid_argument("FeistelPermutation: block_bits must be even, in [2,32]");
    }
    half_bits_ = block_bits_ / 2;
    half_mask_ = (1u << half_bits_) - 1;
    block_mask_ = block_bits_ == 32 ? 0xFFFFFFFFu : (1u << block_bits_) - 1;
    for (int r = 0; r < 4; ++r) {
        round_keys_[r] = static_cast<std::uint32_t>((key >> (16 * r)) & 0xFFFF);
    }
}

std::uint32_t FeistelPermutation::round(std::uint32_t half, int r) const {
    std::uint32_t v = half + round_keys_[r] * 0x9E3779B9u;
    v ^= v >> 15;
    v *= 0x2C1B3C6Du;
    v ^= v >> 12;
    v *= 0x297A2D39u;
    v ^= v >> 15;
    return v & half_mask_;
}

std::uint32_t FeistelPermutation::encrypt(std::uint32_t value) const {
    std::uint32_t left = (value >> half_bits_) & half_mask_;
    std::uint32_t right = value & half_mask_;
    for (int r = 0; r < 4; ++r) {
        const std::uint32_t next_right = left ^ round(right, r);
        left = right;
        right = next_right;
    }
    return (left << half_bits_) | right;
}

std::uint32_t FeistelPermutation::decrypt(std::uint32_t value) const {
    std::uint32_t left = (value >> half_bits_) & half_mask_;
    std::uint32_t right = value & half_mask_;
    for (int r = 3; r >= 0; --r) {
        const std::uint32_t prev_left = right ^ round(left, r);
        right = left;
        left = prev_left;
    }
    return (left << half_bits_) | right;
}

std::uint32_t draw_bits(EntropySource& entropy, std::uint32_t bits) {
    if (bits == 0 || bits > 32) throw std::invalid_argument("draw_bits: bits must be in [1,32]");
    if (bits > 16) {
        const std::uint32_t high = entropy.next_uniform(1u << (bits - 16));
        return (high << 16) | entropy.next_uniform(1u << 16);
    }
    return entropy.next_uniform(1u << bits);
}

void FixedCodeFobEndpoint::on_button(Button, Ms, EndpointOut& out) {
    out.frames.push_back(make_baseline(MsgType::FixedCode, code_));
}

void FixedCodeCarEndpoint::on_frame(const Frame& frame, Ms, EndpointOut& out) {
    const auto code = parse_baseline(frame, MsgType::FixedCode);
    if (code && *code == code_) out.actuators.push_back(ActuatorKind::UnlockDoors);
}

void RollingCodeFobEndpoint::on_button(Button, Ms, EndpointOut& out) {
    counter_ = (counter_ + 1) & perm_.block_mask();
    out.frames.push_back(make_baseline(MsgType::RollCode, perm_.encrypt(counter_)));
}

void RollingCodeCarEndpoint::on_frame(const Frame& frame, Ms, EndpointOut& out) {
    const auto ciphertext = parse_baseline(frame, MsgType::RollCode);
    if (!ciphertext) return;
    const std::uint32_t value = perm_.decrypt(*ciphertext & perm_.block_mask());
    if (value <= last_accepted_ || value > last_accepted_ + window_) return;
    last_accepted_ = value;
    out.actuators.push_back(ActuatorKind::UnlockDoors);
}

void PassiveCrCarEndpoint::on_vehicle(VehicleEvent event, Ms now, EndpointOut& out) {
    if (event != VehicleEvent::HandlePull || pending_) return;
    pending_ = draw_bits(*entropy_, challenge_bits_);
    deadline_ = now + timeout_;
    out.frames.push_back(make_baseline(MsgType::CrChallenge, *pending_));
}

void PassiveCrCarEndpoint::on_frame(const Frame& frame, Ms, EndpointOut& out) {
    if (!pending_) return;
    const auto response = parse_baseline(frame, MsgType::CrResponse);
    if (!response) return;
    const bool ok = *response == perm_.encrypt(*pending_);
    pending_.reset();
    if (ok) out.actuators.push_back(ActuatorKind::UnlockDoors);
}

void PassiveCrCarEndpoint::on_tick(Ms now, EndpointOut&) {
    if (pending_ && now >= deadline_) pending_.reset();
}

std::optional<Ms> PassiveCrCarEndpoint::next_deadline() const {
    if (!pending_) return std::nullopt;
    return deadline_;
}

std::string PassiveCrCarEndpoint::state_name() const {
    return pending_ ? "INTERROGATING" : "IDLE";
}

void PassiveCrFobEndpoint::on_frame(const Frame& frame, Ms, EndpointOut& out) {
    const auto challenge = parse_baseline(frame, MsgType::CrChallenge);
    if (!challenge) return;
    out.frames.push_back(make_baseline(MsgType::CrResponse, perm_.encrypt(*challenge)));
}

} // namespace rke
