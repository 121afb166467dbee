#ifndef RKE_EXPERIMENTS_HPP
#define RKE_EXPERIMENTS_HPP

#include <cstdint>
#include <string>
#include <type_traits>
#include <vector>

#include "rke/keystore.hpp"
#include "rke/util.hpp"

namespace rke {

// Monte-Carlo driver. Every trial derives its own seed from (base_seed,
// index) and writes only its own slot, so the result vector is a pure
// function of the arguments — the parallel schedule can change wall time,
// never values. The serial path is the reference the parity tests pin the
// parallel one against.
template <typename Fn>
auto run_trials(std::uint64_t n, std::uint64_t base_seed, Fn&& trial, bool parallel = true)
    -> std::vector<std::invoke_result_t<Fn&, std::uint64_t, std::uint64_t>> {
    using R = std::invoke_result_t<Fn&, std::uint64_t, std::uint64_t>;
    // vector<bool> packs bits; neighboring writes would race under OpenMP.
    static_assert(!std::is_same_v<R, bool>, "return std::uint8_t, not bool");
    std::vector<R> results(n);
    if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
            const auto index = static_cast<std::uint64_t>(i);
            results[index] = trial(index, derive_seed(base_seed, index));
        }
    } else {
        for (std::uint64_t i = 0; i < n; ++i) {
            results[i] = trial(i, derive_seed(base_seed, i));
        }
    }
    return results;
}

struct RateResult {
    std::uint64_t trials = 0;
    std::uint64_t hits = 0;

    double rate() const {
        return trials == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(trials);
    }
};

// Attack-rate kernels, one per matrix cell. Baseline widths are reduced
// per technique so every nonzero rate is measurable inside a desk-scale
// budget (8-bit fixed code, 16-bit rolling/challenge widths); the proposed
// column runs whatever TableParams the caller picks.

RateResult scan_rate_fixed(std::uint64_t seed, std::uint64_t trials, bool parallel = true);
RateResult scan_rate_rolling(std::uint64_t seed, std::uint64_t trials, bool parallel = true);
RateResult scan_rate_passive_cr(std::uint64_t seed, std::uint64_t trials, bool parallel = true);
RateResult scan_rate_proposed(std::uint64_t seed, std::uint64_t trials, const TableParams& params,
                              bool parallel = true);

RateResult playback_rate_fixed(std::uint64_t seed, std::uint64_t trials, bool parallel = true);
// Rolljam-style model: the recorded press reached the receiver with
// probability p_heard; an unheard recording is still fresh when replayed.
RateResult playback_rate_rolling(std::uint64_t seed, std::uint64_t trials, double p_heard = 0.75,
                                 bool parallel = true);
RateResult playback_rate_passive_cr(std::uint64_t seed, std::uint64_t trials,
                                    std::uint32_t n_record = 100, bool parallel = true);
RateResult playback_rate_proposed(std::uint64_t seed, std::uint64_t trials, std::uint32_t n_record,
                                  const TableParams& params, bool parallel = true);

RateResult forward_rate_fixed(std::uint64_t seed, std::uint64_t trials, bool parallel = true);
RateResult forward_rate_rolling(std::uint64_t seed, std::uint64_t trials, bool parallel = true);
RateResult forward_rate_passive_cr(std::uint64_t seed, std::uint64_t trials, bool parallel = true);
RateResult forward_rate_proposed(std::uint64_t seed, std::uint64_t trials,
                                 const TableParams& params, bool parallel = true);

// One car, n_record recorded sessions, then n_replay fresh challenges each
// answered with the matching recording (or the newest one; with
// abstain_on_miss the attacker skips instead, which is the variant with a
// closed-form success probability).
RateResult playback_study(std::uint64_t seed, std::uint32_t n_record, std::uint32_t n_replay,
                          const TableParams& params, bool abstain_on_miss);

// Exact success probability of one abstaining replay: the fresh challenge
// is uniform over `space` possibilities, the recording holds n_record
// independent draws. Computed two unrelated ways as a cross-check.
double playback_collision_closed_form(std::uint64_t space, std::uint32_t n_record);
double playback_collision_occupancy(std::uint64_t space, std::uint32_t n_record);

// Weak-generator challenge prediction: per trial, observe n_observe
// challenges, reconstruct the state, forecast the next full challenge.
RateResult weak_prediction_rate(std::uint64_t seed, std::uint64_t trials, std::uint32_t n_observe,
                                const TableParams& params, bool parallel = true);

// Strong-source control: one recovery attempt over the first observations
// (it fails — the model is wrong), then uniform fallback guesses for every
// later index. Returns per-index hits over `indices` predictions.
RateResult strong_prediction_accuracy(std::uint64_t seed, std::uint64_t indices,
                                      const TableParams& params);

// Chi-square p-value of the high-byte histogram of auth sums over random
// challenges against one random full-scale table.
double proposed_sum_chi2_p(std::uint64_t seed, std::uint64_t samples);

// Randomized-fault provisioning sweep. silent_divergence counts runs whose
// three tables disagree without the exchange reporting Inconsistent — the
// count the atomicity claim requires to be zero.
struct SweepResult {
    std::uint64_t runs = 0;
    std::uint64_t done = 0;
    std::uint64_t id_mismatch = 0;
    std::uint64_t aborted_clean = 0;
    std::uint64_t rolled_back = 0;
    std::uint64_t inconsistent = 0;
    std::uint64_t silent_divergence = 0;
};

SweepResult provisioning_sweep(std::uint64_t seed, std::uint64_t runs, double p_fail,
                               bool parallel = true);

// The Table I grid: three attack rows by four technique columns.
struct MatrixCell {
    std::string attack;
    std::string technique;
    std::uint64_t trials = 0;
    std::uint64_t hits = 0;
    double rate = 0.0;
    // Resistance rank within the row: number of techniques this attack
    // cracked strictly more often. 0 = weakest; ties share a rank, which
    // in practice happens only between measured-zero rates.
    std::uint32_t rank = 0;
};

struct MatrixBudgets {
    std::uint64_t seed = 1;
    std::uint64_t scan_trials = 200000;
    std::uint64_t playback_trials = 50000;
    std::uint64_t forward_trials = 200000;
    std::uint32_t playback_n_record = 100;
    bool parallel = true;
};

struct MatrixReport {
    std::vector<MatrixCell> cells; // row-major, techniques left to right
    bool ordering_ok = false;      // within every row, rates never increase

    std::string csv() const;
    std::string json() const;
};

MatrixReport run_matrix(const MatrixBudgets& budgets);

} // namespace rke

#endif
