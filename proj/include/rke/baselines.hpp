#ifndef RKE_BASELINES_HPP
#define RKE_BASELINES_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rke/entropy.hpp"
#include "rke/sim.hpp"
#include "rke/wire.hpp"

namespace rke {

// Keyed pseudorandom permutation over an even-width block (2..32 bits):
// a 4-round Feistel network whose round keys are the 16-bit slices of a
// 64-bit key. The construction is fixed so results reproduce; its
// cryptographic quality is irrelevant to what the comparisons measure.
class FeistelPermutation {
public:
    FeistelPermutation(std::uint64_t key, std::uint32_t block_bits);

    std::uint32_t encrypt(std::uint32_t value) const;
    std::uint32_t decrypt(std::uint32_t value) const;
    std::uint32_t block_bits() const { return block_bits_; }
    std::uint32_t block_mask() const { return block_mask_; }

private:
    std::uint32_t round(std::uint32_t half, int r) const;

    std::uint32_t round_keys_[4];
    std::uint32_t block_bits_;
    std::uint32_t half_bits_;
    std::uint32_t half_mask_;
    std::uint32_t block_mask_;
};

// Uniform draw of `bits` random bits (1..32) from an entropy source.
std::uint32_t draw_bits(EntropySource& entropy, std::uint32_t bits);

// ---------------------------------------------------------------------------
// Session forms. All techniques expose the same open/answer/accept surface
// (duck-typed), so the attack-rate kernels are technique-agnostic.
// `Tokens` is the over-the-air payload: challenge words or answer words.
// ---------------------------------------------------------------------------

using Tokens = std::vector<std::uint32_t>;

struct FixedCodeSession {
    std::uint32_t code = 0;
    std::uint32_t code_bits = 32;

    Tokens open(EntropySource&) { return {}; }
    Tokens answer(const Tokens&) { return {code}; }
    bool accept(const Tokens&, const Tokens& answer) {
        return answer.size() == 1 && answer[0] == code;
    }
    Tokens random_answer(EntropySource& entropy) { return {draw_bits(entropy, code_bits)}; }
};

struct RollingCodeSession {
    enum class Verdict : std::uint8_t { Accept, Reject, Desync };

    RollingCodeSession(std::uint64_t key, std::uint32_t block_bits, std::uint32_t window = 16)
        : perm(key, block_bits), window(window) {}

    FeistelPermutation perm;
    std::uint32_t window;
    std::uint32_t counter = 0;       // transmitter side
    std::uint32_t last_accepted = 0; // receiver side

    Tokens open(EntropySource&) { return {}; }
    Tokens answer(const Tokens&) { return {perm.encrypt(++counter & perm.block_mask())}; }
    Verdict judge(std::uint32_t ciphertext) {
        const std::uint32_t value = perm.decrypt(ciphertext & perm.block_mask());
        if (value <= last_accepted) return Verdict::Reject; // replay or stale
        if (value > last_accepted + window) return Verdict::Desync;
        last_accepted = value;
        return Verdict::Accept;
    }
    bool accept(const Tokens&, const Tokens& answer) {
        return answer.size() == 1 && judge(answer[0]) == Verdict::Accept;
    }
    Tokens random_answer(EntropySource& entropy) {
        return {draw_bits(entropy, perm.block_bits())};
    }
};

struct PassiveCrSession {
    PassiveCrSession(std::uint64_t key, std::uint32_t challenge_bits)
        : perm(key, challenge_bits), challenge_bits(challenge_bits) {}

    FeistelPermutation perm;
    std::uint32_t challenge_bits;

    Tokens open(EntropySource& entropy) { return {draw_bits(entropy, challenge_bits)}; }
    Tokens answer(const Tokens& challenge) { return {perm.encrypt(challenge.at(0))}; }
    bool accept(const Tokens& challenge, const Tokens& answer) {
        return answer.size() == 1 && answer[0] == perm.encrypt(challenge.at(0));
    }
    Tokens random_answer(EntropySource& entropy) { return {draw_bits(entropy, challenge_bits)}; }
};

// ---------------------------------------------------------------------------
// Endpoint forms, for scenarios run over a channel (relay demonstrations
// and the like). Accepting receivers unlock the doors.
// ---------------------------------------------------------------------------

class FixedCodeFobEndpoint final : public Endpoint {
public:
    FixedCodeFobEndpoint(std::string name, std::uint32_t code)
        : Endpoint(std::move(name)), code_(code) {}
    const char* role() const override { return "fob"; }
    void on_button(Button button, Ms now, EndpointOut& out) override;

private:
    std::uint32_t code_;
};

class FixedCodeCarEndpoint final : public Endpoint {
public:
    FixedCodeCarEndpoint(std::string name, std::uint32_t code)
        : Endpoint(std::move(name)), code_(code) {}
    const char* role() const override { return "car"; }
    void on_frame(const Frame& frame, Ms now, EndpointOut& out) override;

private:
    std::uint32_t code_;
};

class RollingCodeFobEndpoint final : public Endpoint {
public:
    RollingCodeFobEndpoint(std::string name, std::uint64_t key, std::uint32_t block_bits = 32)
        : Endpoint(std::move(name)), perm_(key, block_bits) {}
    const char* role() const override { return "fob"; }
    void on_button(Button button, Ms now, EndpointOut& out) override;

private:
    FeistelPermutation perm_;
    std::uint32_t counter_ = 0;
};

class RollingCodeCarEndpoint final : public Endpoint {
public:
    RollingCodeCarEndpoint(std::string name, std::uint64_t key, std::uint32_t block_bits = 32,
                           std::uint32_t window = 16)
        : Endpoint(std::move(name)), perm_(key, block_bits), window_(window) {}
    const char* role() const override { return "car"; }
    void on_frame(const Frame& frame, Ms now, EndpointOut& out) override;

    std::uint32_t last_accepted() const { return last_accepted_; }

private:
    FeistelPermutation perm_;
    std::uint32_t window_;
    std::uint32_t last_accepted_ = 0;
};

// Interrogates on handle pull; no button anywhere. This is the relayable
// design the two-thief comparison needs.
class PassiveCrCarEndpoint final : public Endpoint {
public:
    PassiveCrCarEndpoint(std::string name, std::uint64_t key,
                         std::unique_ptr<EntropySource> entropy,
                         std::uint32_t challenge_bits = 32, Ms session_timeout = 500)
        : Endpoint(std::move(name)),
          perm_(key, challenge_bits),
          entropy_(std::move(entropy)),
          challenge_bits_(challenge_bits),
          timeout_(session_timeout) {}

    const char* role() const override { return "car"; }
    void on_vehicle(VehicleEvent event, Ms now, EndpointOut& out) override;
    void on_frame(const Frame& frame, Ms now, EndpointOut& out) override;
    void on_tick(Ms now, EndpointOut& out) override;
    std::optional<Ms> next_deadline() const override;
    std::string state_name() const override;

private:
    FeistelPermutation perm_;
    std::unique_ptr<EntropySource> entropy_;
    std::uint32_t challenge_bits_;
    Ms timeout_;
    std::optional<std::uint32_t> pending_;
    Ms deadline_ = 0;
};

class PassiveCrFobEndpoint final : public Endpoint {
public:
    PassiveCrFobEndpoint(std::string name, std::uint64_t key, std::uint32_t challenge_bits = 32)
        : Endpoint(std::move(name)), perm_(key, challenge_bits) {}
    const char* role() const override { return "fob"; }
    void on_frame(const Frame& frame, Ms now, EndpointOut& out) override;

private:
    FeistelPermutation perm_;
};

} // namespace rke

#endif
