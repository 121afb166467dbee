#include <chrono>
#include <iomanip>
#include <iostream>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rke/experiments.hpp"

namespace {

using Clock = std::chrono::steady_clock;

template <typename Fn>
double timed(Fn&& fn) {
    const auto start = Clock::now();
    fn();
    const auto stop = Clock::now();
    return std::chrono::duration<double>(stop - start).count();
}

bool report(const std::string& name, const rke::RateResult& serial, double serial_s,
            const rke::RateResult& parallel, double parallel_s) {
    const bool match = serial.hits == parallel.hits && serial.trials == parallel.trials;
    std::cout << std::left << std::setw(28) << name << std::right << std::fixed
              << std::setprecision(3) << "serial " << std::setw(8) << serial_s << " s   parallel "
              << std::setw(8) << parallel_s << " s   speedup " << std::setw(5)
              << std::setprecision(2) << (parallel_s > 0 ? serial_s / parallel_s : 0.0) << "x   "
              << (match ? "results identical" : "RESULTS DIFFER") << "\n";
    return match;
}

} // namespace

int main() {
#ifdef _OPENMP
    std::cout << "OpenMP enabled, " << omp_get_max_threads() << " threads\n";
#else
    std::cout << "built without OpenMP; both paths run serially\n";
#endif

    bool all_match = true;
    const rke::TableParams full = rke::TableParams::full();

    {
        rke::RateResult serial_r, parallel_r;
        const double s = timed([&] { serial_r = rke::scan_rate_proposed(1, 200000, full, false); });
        const double p = timed([&] { parallel_r = rke::scan_rate_proposed(1, 200000, full, true); });
        all_match = report("scan vs proposed (200k)", serial_r, s, parallel_r, p) && all_match;
    }
    {
        rke::RateResult serial_r, parallel_r;
        const double s =
            timed([&] { serial_r = rke::playback_rate_proposed(1, 20000, 100, full, false); });
        const double p =
            timed([&] { parallel_r = rke::playback_rate_proposed(1, 20000, 100, full, true); });
        all_match = report("playback vs proposed (20k)", serial_r, s, parallel_r, p) && all_match;
    }
    {
        rke::RateResult serial_r, parallel_r;
        const double s =
            timed([&] { serial_r = rke::weak_prediction_rate(1, 200, 3, full, false); });
        const double p =
            timed([&] { parallel_r = rke::weak_prediction_rate(1, 200, 3, full, true); });
        all_match = report("weak prediction (200)", serial_r, s, parallel_r, p) && all_match;
    }
    {
        rke::SweepResult serial_r, parallel_r;
        const double s = timed([&] { serial_r = rke::provisioning_sweep(1, 4000, 0.02, false); });
        const double p = timed([&] { parallel_r = rke::provisioning_sweep(1, 4000, 0.02, true); });
        const bool match = serial_r.done == parallel_r.done &&
                           serial_r.aborted_clean == parallel_r.aborted_clean &&
                           serial_r.rolled_back == parallel_r.rolled_back &&
                           serial_r.inconsistent == parallel_r.inconsistent &&
                           serial_r.silent_divergence == parallel_r.silent_divergence;
        std::cout << std::left << std::setw(28) << "provisioning sweep (4k)" << std::right
                  << std::fixed << std::setprecision(3) << "serial " << std::setw(8) << s
                  << " s   parallel " << std::setw(8) << p << " s   speedup " << std::setw(5)
                  << std::setprecision(2) << (p > 0 ? s / p : 0.0) << "x   "
                  << (match ? "results identical" : "RESULTS DIFFER") << "\n";
        all_match = match && all_match;
    }

    std::cout << (all_match ? "parallel results match the serial reference\n"
                            : "MISMATCH between serial and parallel results\n");
    return all_match ? 0 : 1;
}
