#ifndef RKE_KEYSTORE_HPP
#define RKE_KEYSTORE_HPP

#include <compare>
#include <cstdint>
#include <vector>

#include "rke/entropy.hpp"

namespace rke {

// Unique per-car identity, burned into ROM at manufacture time.
struct CarKeyId {
    std::uint32_t value = 0;

    friend bool operator==(const CarKeyId&, const CarKeyId&) = default;
};

// Geometry of the shared table and of the sums computed from it. The
// deployed system uses the full-scale values; reduced widths exist so the
// guessing-probability experiments can run at desk scale through the same
// code path.
struct TableParams {
    std::uint32_t table_len = 2000; // slots in the shared table
    std::uint32_t word_bits = 16;   // bits per slot value, <= 16
    std::uint32_t sum_count = 5;    // sums per auth message; a challenge has twice this many indices

    std::uint32_t word_mod() const { return 1u << word_bits; }
    std::uint32_t challenge_len() const { return 2 * sum_count; }

    static TableParams full() { return TableParams{}; }

    friend bool operator==(const TableParams&, const TableParams&) = default;
};

// The shared secret: a table of uniformly drawn words held by the car
// transceiver, the board computer and both key fobs. `generation` counts
// successful re-provisionings so tests can tell which table version a
// device ended up with after a rollback.
struct KeyTable {
    std::vector<std::uint16_t> values;
    std::uint32_t generation = 0;

    std::uint32_t size() const { return static_cast<std::uint32_t>(values.size()); }

    friend bool operator==(const KeyTable&, const KeyTable&) = default;
};

// Fills a table with size() == params.table_len values, each drawn via
// next_uniform(2^word_bits). Generation starts at 0; provisioning assigns
// the real generation when it commits.
KeyTable new_key_table(EntropySource& entropy, const TableParams& params = TableParams::full());

// Plain indexed read. Throws std::out_of_range when the index does not
// address a slot, which signals a malformed challenge that slipped past
// frame validation.
std::uint16_t read_slot(const KeyTable& table, std::uint32_t index);

} // namespace rke

#endif
