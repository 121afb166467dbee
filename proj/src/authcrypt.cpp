#include "rke/authcrypt.hpp"

#include <stdexcept>

namespace rke {

bool challenge_valid(const Challenge& challenge, const TableParams& params) {
    if (challenge.indices.size() != params.challenge_len()) return false;
    for (std::uint16_t index : challenge.indices) {
        if (index >= params.table_len) return false;
    }
    return true;
}

Challenge generate_challenge(EntropySource& entropy, const TableParams& params) {
    Challenge challenge;
    challenge.indices.reserve(params.challenge_len());
    for (std::uint32_t i = 0; i < params.challenge_len(); ++i) {
        challenge.indices.push_back(static_cast<std::uint16_t>(entropy.next_uniform(params.table_len)));
    }
    return challenge;
}

AuthMessage build_auth_message(const KeyTable& table, const Challenge& challenge,
                               const TableParams& params) {
    if (challenge.indices.size() != params.challenge_len()) {
        throw std::invalid_argument("build_auth_message: challenge has wrong index count");
    }
    const std::uint32_t k = params.sum_count;
    const std::uint32_t mask = params.word_mod() - 1;
    AuthMessage message;
    message.sums.reserve(k);
    for (std::uint32_t j = 0; j < k; ++j) {
        const std::uint32_t key_part = read_slot(table, challenge.indices[j]);
        const std::uint32_t enc_part = read_slot(table, challenge.indices[j + k]);
        message.sums.push_back(static_cast<std::uint16_t>((key_part + enc_part) & mask));
    }
    return message;
}

bool verify_auth_message(const KeyTable& table, const Challenge& challenge,
                         const AuthMessage& received, const TableParams& params) {
    if (received.sums.size() != params.sum_count) return false;
    return build_auth_message(table, challenge, params) == received;
}

AuthMessage random_auth_message(EntropySource& entropy, const TableParams& params) {
    AuthMessage message;
    message.sums.reserve(params.sum_count);
    for (std::uint32_t j = 0; j < params.sum_count; ++j) {
        message.sums.push_back(static_cast<std::uint16_t>(entropy.next_uniform(params.word_mod())));
    }
    return message;
}

} // namespace rke
