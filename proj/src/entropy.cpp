#include "rke/entropy.hpp"

#include <stdexcept>

namespace rke {

std::uint32_t StrongSource::next_uniform(std::uint32_t bound) {
    if (bound == 0) throw std::invalid_argument("next_uniform: bound must be >= 1");
    if (bound == 1) return 0;
    // Reject the top sliver of the 64-bit range that would bias the modulo.
    const std::uint64_t rem = (~std::uint64_t{0} % bound + 1) % bound; // 2^64 mod bound
    std::uint64_t r = rng_();
    if (rem != 0) {
        const std::uint64_t limit = std::uint64_t{0} - rem; // 2^64 - rem
        while (r >= limit) r = rng_();
    }
    return static_cast<std::uint32_t>(r % bound);
}

std::uint32_t WeakSource::next_uniform(std::uint32_t bound) {
    if (bound == 0) throw std::invalid_argument("next_uniform: bound must be >= 1");
    state_ = state_ * kMultiplier + kIncrement;
    return state_ % bound;
}

std::unique_ptr<EntropySource> make_entropy(EntropyKind kind, std::uint64_t seed) {
    if (kind == EntropyKind::Strong) return std::make_unique<StrongSource>(seed);
    return std::make_unique<WeakSource>(static_cast<std::uint32_t>(seed));
}

} // namespace rke
