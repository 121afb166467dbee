#ifndef RKE_AUTHCRYPT_HPP
#define RKE_AUTHCRYPT_HPP

#include <cstdint>
#include <vector>

#include "rke/keystore.hpp"

namespace rke {

// A challenge is an ordered list of 2k slot indices. The first k select
// the "key" slots, the last k the "encryption" slots; the j-th sum adds
// slot indices[j] to slot indices[j+k]. Duplicates are allowed, including
// the same slot in both halves.
struct Challenge {
    std::vector<std::uint16_t> indices;

    friend bool operator==(const Challenge&, const Challenge&) = default;
    friend auto operator<=>(const Challenge&, const Challenge&) = default;
};

// k modular sums proving knowledge of the table. At full scale this is
// five 16-bit words, 80 bits total.
struct AuthMessage {
    std::vector<std::uint16_t> sums;

    friend bool operator==(const AuthMessage&, const AuthMessage&) = default;
};

bool challenge_valid(const Challenge& challenge, const TableParams& params = TableParams::full());

// 2k independent draws of next_uniform(table_len).
Challenge generate_challenge(EntropySource& entropy, const TableParams& params = TableParams::full());

// sums[j] = (table[indices[j]] + table[indices[j+k]]) mod 2^word_bits.
// The challenge must be valid for the params; out-of-range indices throw
// from read_slot.
AuthMessage build_auth_message(const KeyTable& table, const Challenge& challenge,
                               const TableParams& params = TableParams::full());

// True iff the locally built message equals `received` element-wise.
bool verify_auth_message(const KeyTable& table, const Challenge& challenge,
                         const AuthMessage& received,
                         const TableParams& params = TableParams::full());

// Uniform random guess over the full message space, as a scan attacker
// with no table knowledge would produce.
AuthMessage random_auth_message(EntropySource& entropy, const TableParams& params = TableParams::full());

} // namespace rke

#endif
