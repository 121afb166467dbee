#include "rke/predictor.hpp"

#include "rke/entropy.hpp"

namespace rke {

std::optional<std::uint32_t> recover_lcg_state(std::span<const std::uint32_t> observed,
                                               std::uint32_t bound) {
    if (observed.size() < 2 || bound == 0) return std::nullopt;
    std::optional<std::uint32_t> survivor;
    // Every state emitting observed[0] is observed[0] + k*bound; chain each
    // candidate forward and keep it only if it reproduces the whole series.
    for (std::uint64_t base = observed[0]; base < (std::uint64_t{1} << 32); base += bound) {
        std::uint32_t state = static_cast<std::uint32_t>(base);
        bool consistent = true;
        for (std::size_t i = 1; i < observed.size(); ++i) {
            state = state * WeakSource::kMultiplier + WeakSource::kIncrement;
            if (state % bound != observed[i]) {
                consistent = false;
                break;
            }
        }
        if (!consistent) continue;
        if (!survivor) {
            survivor = state;
            continue;
        }
        // A second survivor is harmless when it forecasts the same stream:
        // for power-of-two bounds the low bits evolve on their own, so every
        // survivor shares one future. Distinct futures are real ambiguity.
        std::uint32_t a = *survivor;
        std::uint32_t b = state;
        bool same_future = true;
        for (int step = 0; step < 16; ++step) {
            a = a * WeakSource::kMultiplier + WeakSource::kIncrement;
            b = b * WeakSource::kMultiplier + WeakSource::kIncrement;
            if (a % bound != b % bound) {
                same_future = false;
                break;
            }
        }
        if (!same_future) return std::nullopt; // need more observations
    }
    return survivor;
}

std::vector<std::uint32_t> lcg_forecast(std::uint32_t state, std::uint32_t bound, std::size_t n) {
    std::vector<std::uint32_t> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        state = state * WeakSource::kMultiplier + WeakSource::kIncrement;
        out.push_back(state % bound);
    }
    return out;
}

std::optional<Challenge> predict_next_challenge(std::span<const Challenge> observed,
                                                const TableParams& params) {
    std::vector<std::uint32_t> outputs;
    for (const Challenge& challenge : observed) {
        for (std::uint16_t index : challenge.indices) outputs.push_back(index);
    }
    const auto state = recover_lcg_state(outputs, params.table_len);
    if (!state) return std::nullopt;
    const auto next = lcg_forecast(*state, params.table_len, params.challenge_len());
    Challenge prediction;
    prediction.indices.assign(next.begin(), next.end());
    return prediction;
}

} // namespace rke
