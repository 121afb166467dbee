#ifndef RKE_UTIL_HPP
#define RKE_UTIL_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rke {

// Simulated time in milliseconds.
using Ms = std::uint64_t;

// SplitMix64 finalizer. Used for deriving independent seed streams, never
// as a session RNG.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Stable FNV-1a so stream names hash identically on every platform.
constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Derive a per-entity seed from a scenario master seed. Same inputs give
// the same stream on every platform; distinct names give unrelated streams.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view stream) {
    return mix64(base ^ fnv1a(stream));
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return mix64(base ^ mix64(index));
}

std::string to_hex(std::span<const std::uint8_t> bytes);
std::optional<std::vector<std::uint8_t>> from_hex(std::string_view text);

} // namespace rke

#endif
