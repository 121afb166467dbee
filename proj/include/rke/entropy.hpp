#ifndef RKE_ENTROPY_HPP
#define RKE_ENTROPY_HPP

#include <cstdint>
#include <memory>
#include <random>

namespace rke {

// Randomness contract shared by every component that draws numbers.
// Implementations must be reproducible: the same seed and call sequence
// yields the same outputs, which is what makes whole simulation runs
// replayable from a single seed.
class EntropySource {
  public:
    virtual ~EntropySource() = default;

    // Uniform draw on [0, bound). bound must be >= 1.
    virtual std::uint32_t next_uniform(std::uint32_t bound) = 0;
};

// High-quality seedable generator standing in for a hardware RNG.
// Bounded draws use rejection sampling, so they are exactly uniform and,
// because mt19937_64 is fully specified by the standard, bit-identical
// across platforms.
class StrongSource final : public EntropySource {
  public:
    explicit StrongSource(std::uint64_t seed) : rng_(seed) {}

    std::uint32_t next_uniform(std::uint32_t bound) override;

  private:
    std::mt19937_64 rng_;
};

// Deliberately predictable linear congruential generator (the classic
// 32-bit Numerical Recipes parameters). Bounded draws expose the raw
// state modulo the bound, so an observer can reconstruct the internal
// state from a handful of outputs. Exists to demonstrate what happens
// when a keyless-entry system ships with a weak RNG.
class WeakSource final : public EntropySource {
  public:
    static constexpr std::uint32_t kMultiplier = 1664525u;
    static constexpr std::uint32_t kIncrement = 1013904223u;

    explicit WeakSource(std::uint32_t seed) : state_(seed) {}

    std::uint32_t next_uniform(std::uint32_t bound) override;

    std::uint32_t state() const { return state_; }

  private:
    std::uint32_t state_;
};

enum class EntropyKind { Strong, Weak };

std::unique_ptr<EntropySource> make_entropy(EntropyKind kind, std::uint64_t seed);

} // namespace rke

#endif
