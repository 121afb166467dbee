#ifndef RKE_STATS_HPP
#define RKE_STATS_HPP

#include <cstdint>
#include <span>

namespace rke {

// Survival probability of a chi-square statistic: P[X >= stat] at the
// given degrees of freedom.
double chi_square_p_value(double stat, double dof);

// Pearson statistic of observed counts against a flat expectation.
double chi_square_uniform(std::span<const std::uint64_t> counts);

// p-value for counts drawn uniformly over counts.size() bins.
double chi_square_uniform_p(std::span<const std::uint64_t> counts);

// Half-width of the 3-sigma band around the expected hit count of n
// Bernoulli(p) draws.
double binomial_3sigma(double n, double p);

} // namespace rke

#endif
