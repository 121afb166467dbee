#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "rke/experiments.hpp"
#include "rke/stats.hpp"

using namespace rke;

namespace {

const TableParams kToy{16, 4, 2};     // 256 answer values: rates measurable fast
const TableParams kTiny{8, 4, 1};     // 64 possible challenges

bool within_3sigma(const RateResult& r, double p) {
    const double expected = static_cast<double>(r.trials) * p;
    const double band = binomial_3sigma(static_cast<double>(r.trials), p);
    return std::abs(static_cast<double>(r.hits) - expected) <= band;
}

} // namespace

TEST_CASE("run_trials gives identical vectors serial and parallel") {
    const auto kernel = [](std::uint64_t index, std::uint64_t seed) -> std::uint64_t {
        // Arbitrary but seed-dependent: any divergence in seeding or slot
        // assignment between the two schedules shows up immediately.
        return mix64(seed) ^ index;
    };
    const auto serial = run_trials(10000, 7, kernel, false);
    const auto parallel = run_trials(10000, 7, kernel, true);
    CHECK(serial == parallel);
    REQUIRE(serial.size() == 10000);
    CHECK(serial[0] != serial[1]);

    // Same base seed, same vector; different base seed, different draws.
    CHECK(run_trials(100, 7, kernel, true) == run_trials(100, 7, kernel, false));
    CHECK(run_trials(100, 8, kernel, true) != run_trials(100, 7, kernel, true));
}

TEST_CASE("attack kernels agree between serial and parallel runs") {
    const RateResult a = scan_rate_proposed(3, 20000, kToy, false);
    const RateResult b = scan_rate_proposed(3, 20000, kToy, true);
    CHECK(a.hits == b.hits);
    CHECK(a.trials == b.trials);

    const RateResult c = weak_prediction_rate(3, 50, 3, TableParams::full(), false);
    const RateResult d = weak_prediction_rate(3, 50, 3, TableParams::full(), true);
    CHECK(c.hits == d.hits);

    const SweepResult e = provisioning_sweep(3, 200, 0.05, false);
    const SweepResult f = provisioning_sweep(3, 200, 0.05, true);
    CHECK(e.done == f.done);
    CHECK(e.aborted_clean == f.aborted_clean);
    CHECK(e.rolled_back == f.rolled_back);
    CHECK(e.inconsistent == f.inconsistent);
    CHECK(e.silent_divergence == f.silent_divergence);
}

TEST_CASE("scan rates sit on their models") {
    // 8-bit fixed code: guessing hits 1 in 256.
    CHECK(within_3sigma(scan_rate_fixed(11, 50000), 1.0 / 256));
    // Rolling code with a 16-value window over 16 bits: 16 in 65536.
    CHECK(within_3sigma(scan_rate_rolling(11, 50000), 16.0 / 65536));
    // 16-bit challenge-response: 1 in 65536.
    CHECK(within_3sigma(scan_rate_passive_cr(11, 200000), 1.0 / 65536));
    // Toy-scale proposed: two 4-bit sums, 1 in 256.
    CHECK(within_3sigma(scan_rate_proposed(11, 50000, kToy), 1.0 / 256));
    // Full-scale proposed: 2^-80 is zero for any feasible budget.
    CHECK(scan_rate_proposed(11, 20000, TableParams::full()).hits == 0);
}

TEST_CASE("playback rates sit on their models") {
    const RateResult fixed = playback_rate_fixed(13, 2000);
    CHECK(fixed.hits == fixed.trials); // replay is a master key

    // Rolljam model: replay works only when the recording never reached
    // the receiver, i.e. with probability 1 - p_heard.
    CHECK(within_3sigma(playback_rate_rolling(13, 50000, 0.75), 0.25));
    CHECK(within_3sigma(playback_rate_rolling(13, 50000, 0.5), 0.5));

    // 16-bit challenge-response with 100 recordings: the fresh challenge
    // must collide with a recorded one.
    const double cr_model = playback_collision_closed_form(1ull << 16, 100);
    CHECK(within_3sigma(playback_rate_passive_cr(13, 50000, 100), cr_model));

    CHECK(playback_rate_proposed(13, 5000, 100, TableParams::full()).hits == 0);
}

TEST_CASE("forward prediction rates sit on their models") {
    const RateResult fixed = forward_rate_fixed(17, 2000);
    CHECK(fixed.hits == fixed.trials); // one observation reveals the code

    // Rolling code: the counter is known, but the guess must also land
    // inside the acceptance window of an unsynchronized receiver.
    CHECK(within_3sigma(forward_rate_rolling(17, 50000), 16.0 / 65536));
    CHECK(within_3sigma(forward_rate_passive_cr(17, 200000), 1.0 / 65536));
    CHECK(forward_rate_proposed(17, 20000, TableParams::full()).hits == 0);
}

TEST_CASE("the two playback collision oracles agree to machine precision") {
    for (std::uint64_t space : {64ull, 256ull, 65536ull}) {
        for (std::uint32_t n : {1u, 16u, 100u, 1000u}) {
            const double closed = playback_collision_closed_form(space, n);
            const double occupancy = playback_collision_occupancy(space, n);
            CHECK(std::abs(closed - occupancy) < 1e-12);
            CHECK(closed > 0.0);
            CHECK(closed < 1.0);
        }
    }
    CHECK(playback_collision_closed_form(64, 0) == 0.0);
}

TEST_CASE("the abstaining replay study matches its closed form") {
    // The closed form averages over recording sets, so each trial needs a
    // fresh one: a single set only converges to its own occupancy, not to
    // the ensemble mean. One study = one world, sixteen tapes, one replay.
    const double model = playback_collision_closed_form(64, 16);
    const std::uint64_t trials = 20000;
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < trials; ++i) {
        hits += playback_study(derive_seed(19, i), 16, 1, kTiny, true).hits;
    }
    const double band = binomial_3sigma(static_cast<double>(trials), model);
    CHECK(std::abs(static_cast<double>(hits) - trials * model) <= band);

    // Full scale: no collision will ever be seen.
    const RateResult full = playback_study(19, 100, 2000, TableParams::full(), false);
    CHECK(full.hits == 0);
}

TEST_CASE("weak generators fall to observation, strong ones do not") {
    const RateResult weak = weak_prediction_rate(23, 200, 3, TableParams::full());
    CHECK(weak.trials == 200);
    CHECK(weak.hits == 200); // state reconstruction is exact

    const RateResult strong = strong_prediction_accuracy(23, 20000, TableParams::full());
    // Uniform guessing over 2000 slots: individual index hits near 1/2000.
    const double band = binomial_3sigma(static_cast<double>(strong.trials), 1.0 / 2000);
    CHECK(std::abs(static_cast<double>(strong.hits) - strong.trials / 2000.0) <= band);
}

TEST_CASE("auth sums pass a uniformity screen") {
    const double p = proposed_sum_chi2_p(29, 100000);
    CHECK(p > 0.001);
    CHECK(p <= 1.0);
    CHECK(proposed_sum_chi2_p(29, 100000) == p); // seeded, deterministic
}

TEST_CASE("chi-square helpers behave at the edges") {
    // A perfectly flat histogram has statistic 0 and p-value 1.
    std::vector<std::uint64_t> flat(256, 100);
    CHECK(chi_square_uniform(flat) == 0.0);
    CHECK(chi_square_uniform_p(flat) == 1.0);

    // An absurdly lumpy one is rejected outright.
    std::vector<std::uint64_t> lumpy(256, 0);
    lumpy[0] = 25600;
    CHECK(chi_square_uniform_p(lumpy) < 1e-9);

    CHECK(binomial_3sigma(1000000, 0.5) == doctest::Approx(3 * std::sqrt(250000.0)));
}

TEST_CASE("provisioning sweep classifies every run and sees no silent splits") {
    const SweepResult sweep = provisioning_sweep(31, 2000, 0.02);
    CHECK(sweep.runs == 2000);
    CHECK(sweep.done + sweep.id_mismatch + sweep.aborted_clean + sweep.rolled_back +
              sweep.inconsistent ==
          sweep.runs);
    CHECK(sweep.id_mismatch == 0); // the bench always connects the right fobs
    CHECK(sweep.done > 0);
    CHECK(sweep.aborted_clean + sweep.rolled_back > 0); // 2% faults do bite
    CHECK(sweep.silent_divergence == 0);

    // No faults, no drama.
    const SweepResult calm = provisioning_sweep(31, 50, 0.0);
    CHECK(calm.done == 50);
    CHECK(calm.silent_divergence == 0);
}

TEST_CASE("the matrix has three rows, four columns and sane ordering") {
    MatrixBudgets budgets;
    budgets.seed = 1;
    budgets.scan_trials = 20000;
    budgets.playback_trials = 10000;
    budgets.forward_trials = 20000;
    const MatrixReport report = run_matrix(budgets);

    REQUIRE(report.cells.size() == 12);
    const std::vector<std::string> attacks = {"scan", "playback", "forward_prediction"};
    const std::vector<std::string> techniques = {"fixed_code", "rolling_code",
                                                 "challenge_response", "proposed"};
    for (int row = 0; row < 3; ++row) {
        for (int col = 0; col < 4; ++col) {
            const MatrixCell& cell = report.cells[row * 4 + col];
            CHECK(cell.attack == attacks[row]);
            CHECK(cell.technique == techniques[col]);
            CHECK(cell.trials > 0);
            CHECK(cell.rate == doctest::Approx(static_cast<double>(cell.hits) /
                                               static_cast<double>(cell.trials)));
        }
        // Within a row rates never increase and ranks never decrease.
        for (int col = 0; col + 1 < 4; ++col) {
            const MatrixCell& left = report.cells[row * 4 + col];
            const MatrixCell& right = report.cells[row * 4 + col + 1];
            CHECK(left.rate >= right.rate);
            CHECK(left.rank <= right.rank);
        }
        // The proposed column never loses to a baseline.
        CHECK(report.cells[row * 4 + 3].rate == 0.0);
    }
    CHECK(report.ordering_ok);

    // Determinism: the same budgets give byte-identical reports.
    const MatrixReport again = run_matrix(budgets);
    CHECK(report.csv() == again.csv());
    CHECK(report.json() == again.json());
}

TEST_CASE("matrix outputs parse back") {
    MatrixBudgets budgets;
    budgets.scan_trials = 2000;
    budgets.playback_trials = 2000;
    budgets.forward_trials = 2000;
    const MatrixReport report = run_matrix(budgets);

    const std::string csv = report.csv();
    CHECK(csv.rfind("attack,technique,trials,hits,rate,rank", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 13); // header + 12 rows

    const auto parsed = nlohmann::json::parse(report.json());
    CHECK(parsed.contains("ordering_ok"));
    REQUIRE(parsed.at("cells").size() == 12);
    CHECK(parsed.at("cells").at(0).at("attack") == "scan");
    CHECK(parsed.at("cells").at(11).at("technique") == "proposed");
}
