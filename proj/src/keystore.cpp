#include "rke/keystore.hpp"

#include <stdexcept>

namespace rke {

KeyTable new_key_table(EntropySource& entropy, const TableParams& params) {
    KeyTable table;
    table.values.reserve(params.table_len);
    for (std::uint32_t i = 0; i < params.table_len; ++i) {
        table.values.push_back(static_cast<std::uint16_t>(entropy.next_uniform(params.word_mod())));
    }
    table.generation = 0;
    return table;
}

std::uint16_t read_slot(const KeyTable& table, std::uint32_t index) {
    if (index >= table.values.size()) {
        throw std::out_of_range("read_slot: index " + std::to_string(index) +
                                " outside table of " + std::to_string(table.values.size()));
    }
    return table.values[index];
}

} // namespace rke
