#ifndef RKE_CRC16_HPP
#define RKE_CRC16_HPP

#include <cstdint>
#include <span>

namespace rke {

// CRC-16/CCITT-FALSE: polynomial 0x1021, init 0xFFFF, no reflection, no
// final xor. Check value: crc16("123456789") == 0x29B1.
std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> data);

} // namespace rke

#endif
