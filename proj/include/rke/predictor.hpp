#ifndef RKE_PREDICTOR_HPP
#define RKE_PREDICTOR_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rke/authcrypt.hpp"
#include "rke/keystore.hpp"

namespace rke {

// State recovery for the predictable generator family (32-bit LCG with the
// WeakSource constants). Observations are next_uniform(bound) outputs in
// emission order. Returns the generator state as of the LAST observation —
// unique survivor of a full scan over all states congruent with the first
// output — or nullopt when none or several survive (e.g. the outputs did
// not come from that generator).
std::optional<std::uint32_t> recover_lcg_state(std::span<const std::uint32_t> observed,
                                               std::uint32_t bound);

// Next n outputs of next_uniform(bound) from a recovered state.
std::vector<std::uint32_t> lcg_forecast(std::uint32_t state, std::uint32_t bound, std::size_t n);

// Challenge-level wrapper: feeds every index of the observed challenges to
// the recovery scan and forecasts one full challenge ahead.
std::optional<Challenge> predict_next_challenge(std::span<const Challenge> observed,
                                                const TableParams& params);

} // namespace rke

#endif
