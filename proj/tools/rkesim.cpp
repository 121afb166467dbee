#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "rke/audit.hpp"
#include "rke/devices.hpp"
#include "rke/experiments.hpp"
#include "rke/provisioning.hpp"
#include "rke/scenario.hpp"

namespace {

int do_simulate(const std::string& path, const rke::RunOptions& options) {
    const rke::ScenarioLoad load = rke::load_scenario_file(path);
    if (!load) {
        std::cout << rke::render_errors(load.errors);
        return 2;
    }
    const rke::RunResult run = rke::run_scenario(*load.scenario, options);
    std::cout << run.summary << "\n";
    if (!run.trace_path.empty()) std::cout << "trace:  " << run.trace_path.string() << "\n";
    std::cout << "report: " << run.report_path.string() << "\n";
    return run.exit_code;
}

int do_matrix(const std::string& path, std::optional<std::uint64_t> seed_override,
              const std::filesystem::path& out_dir) {
    const rke::MatrixConfigLoad load = rke::load_matrix_config(path);
    if (!load) {
        std::cout << rke::render_errors(load.errors);
        return 2;
    }
    rke::MatrixBudgets budgets = *load.budgets;
    if (seed_override.has_value()) budgets.seed = *seed_override;
    const rke::MatrixReport report = rke::run_matrix(budgets);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    const auto csv_path = out_dir / "matrix.csv";
    const auto json_path = out_dir / "matrix.json";
    std::ofstream(csv_path) << report.csv();
    std::ofstream(json_path) << report.json();

    std::cout << report.csv();
    std::cout << (report.ordering_ok ? "resistance ordering holds in every row"
                                     : "resistance ordering VIOLATED")
              << "\n";
    std::cout << "csv:  " << csv_path.string() << "\n";
    std::cout << "json: " << json_path.string() << "\n";
    return report.ordering_ok ? 0 : 1;
}

int do_audit(const std::string& path) {
    const rke::AuditReport report = rke::audit_trace_file(path);
    std::cout << rke::render_report(report);
    if (!report.format_ok) return 2;
    return report.violations.empty() ? 0 : 1;
}

int do_provision_demo(const std::string& path, std::optional<std::uint64_t> seed_override,
                      const std::filesystem::path& out_dir) {
    const rke::ProvisionConfigLoad load = rke::load_provision_config(path);
    if (!load) {
        std::cout << rke::render_errors(load.errors);
        return 2;
    }
    rke::ProvisionConfig config = *load.config;
    if (seed_override.has_value()) config.seed = *seed_override;

    // One narrated exchange first, so the wired flow is visible.
    const std::uint64_t demo_seed = rke::derive_seed(config.seed, "demo");
    rke::StrongSource old_src(rke::derive_seed(demo_seed, "old-table"));
    rke::KeyTable old_table = rke::new_key_table(old_src);
    old_table.generation = 3;
    const rke::CarKeyId id{0x11223344};
    rke::KeyFob fob0("fob0", id, old_table,
                     std::make_unique<rke::StrongSource>(rke::derive_seed(demo_seed, "fob0")));
    rke::KeyFob fob1("fob1", id, old_table,
                     std::make_unique<rke::StrongSource>(rke::derive_seed(demo_seed, "fob1")));
    rke::BoardComputer board(id, old_table, "2468");
    board.connect(0, fob0);
    board.connect(1, fob1);
    board.begin_programming("2468");
    rke::StrongSource fresh(rke::derive_seed(demo_seed, "fresh-table"));
    const rke::ExchangeReport demo = board.run_key_exchange(
        fresh, rke::FaultPlan::random(rke::derive_seed(demo_seed, "faults"), config.p_fail));
    for (const std::string& line : demo.transcript) std::cout << "  " << line << "\n";
    std::cout << "demo exchange: " << rke::to_string(demo.outcome) << " (generation "
              << demo.old_generation << " -> " << demo.new_generation << ")\n";

    std::cout << "sweeping " << config.runs << " fault plans at p_fail " << config.p_fail
              << "...\n";
    const rke::SweepResult sweep =
        rke::provisioning_sweep(config.seed, config.runs, config.p_fail, config.parallel);
    std::cout << "done " << sweep.done << ", aborted_clean " << sweep.aborted_clean
              << ", rolled_back " << sweep.rolled_back << ", inconsistent " << sweep.inconsistent
              << ", silent divergence " << sweep.silent_divergence << "\n";

    nlohmann::json j;
    j["seed"] = config.seed;
    j["runs"] = sweep.runs;
    j["p_fail"] = config.p_fail;
    j["done"] = sweep.done;
    j["id_mismatch"] = sweep.id_mismatch;
    j["aborted_clean"] = sweep.aborted_clean;
    j["rolled_back"] = sweep.rolled_back;
    j["inconsistent"] = sweep.inconsistent;
    j["silent_divergence"] = sweep.silent_divergence;
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    const auto json_path = out_dir / "provision.report.json";
    std::ofstream(json_path) << j.dump(2) << "\n";
    std::cout << "report: " << json_path.string() << "\n";

    return sweep.silent_divergence == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Keyless-entry protocol simulator, attack bench, and trace auditor"};
    app.require_subcommand(1);

    std::string scn_path;
    std::string matrix_path;
    std::string trace_path;
    std::string provision_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool write_trace = true;

    CLI::App* simulate = app.add_subcommand("simulate", "Run one scenario file");
    simulate->add_option("scenario", scn_path, "scenario (.scn) file")->required();
    CLI::Option* sim_seed = simulate->add_option("--seed", seed, "override the scenario seed");
    simulate->add_option("--out-dir", out_dir, "output directory (default .)");
    simulate->add_flag("--trace,!--no-trace", write_trace, "write the trace file (default on)");

    CLI::App* matrix = app.add_subcommand("matrix", "Run the attack-vs-technique rate grid");
    matrix->add_option("config", matrix_path, "matrix config (.cfg) file")->required();
    CLI::Option* matrix_seed = matrix->add_option("--seed", seed, "override the config seed");
    matrix->add_option("--out-dir", out_dir, "output directory (default .)");

    CLI::App* audit = app.add_subcommand("audit", "Re-check a trace file's invariants");
    audit->add_option("trace", trace_path, "trace file to audit")->required();

    CLI::App* provision =
        app.add_subcommand("provision-demo", "Narrate one key exchange, then sweep fault plans");
    provision->add_option("config", provision_path, "provision config (.cfg) file")->required();
    CLI::Option* provision_seed =
        provision->add_option("--seed", seed, "override the config seed");
    provision->add_option("--out-dir", out_dir, "output directory (default .)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (simulate->parsed()) {
        rke::RunOptions options;
        options.out_dir = out_dir;
        options.write_trace = write_trace;
        if (sim_seed->count() > 0) options.seed_override = seed;
        return do_simulate(scn_path, options);
    }
    if (matrix->parsed()) {
        std::optional<std::uint64_t> seed_override;
        if (matrix_seed->count() > 0) seed_override = seed;
        return do_matrix(matrix_path, seed_override, out_dir);
    }
    if (audit->parsed()) return do_audit(trace_path);
    if (provision->parsed()) {
        std::optional<std::uint64_t> seed_override;
        if (provision_seed->count() > 0) seed_override = seed;
        return do_provision_demo(provision_path, seed_override, out_dir);
    }
    return 2;
}
