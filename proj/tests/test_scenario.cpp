#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "rke/scenario.hpp"

using namespace rke;
namespace fs = std::filesystem;

namespace {

#ifndef RKE_SCENARIO_DIR
#error "RKE_SCENARIO_DIR must point at the bundled scenarios"
#endif

const fs::path kScenarioDir = RKE_SCENARIO_DIR;

bool has_error_field(const std::vector<ConfigError>& errors, std::string_view field) {
    for (const auto& e : errors) {
        if (e.field == field) return true;
    }
    return false;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path temp_dir(const char* tag) {
    const fs::path dir = fs::temp_directory_path() / (std::string("rke-test-") + tag);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("a full scenario file parses field by field") {
    const std::string text = R"(
; weekend regression rig
[scenario]
name = kitchen_sink
technique = rolling
seed = 99
repetitions = 4
horizon = 123456

[table]
table_len = 64
word_bits = 8
sum_count = 5

[timeouts]
t_jam = 9000
t_ping = 1500

[car]
lockout = off
defense = on
entropy = weak

[fob]
entropy = strong

[attack]
kind = none

[script]
event = 1000 press_unlock
event = 2000 press_lock
event = 3000 motor_off
)";
    const ScenarioLoad load = parse_scenario(text);
    REQUIRE(static_cast<bool>(load));
    CHECK(load.errors.empty());
    const Scenario& s = *load.scenario;
    CHECK(s.name == "kitchen_sink");
    CHECK(s.technique == Technique::Rolling);
    CHECK(s.seed == 99);
    CHECK(s.repetitions == 4);
    CHECK(s.horizon == 123456);
    CHECK(s.params.table_len == 64);
    CHECK(s.params.word_bits == 8);
    CHECK(s.timeouts.t_jam == 9000);
    CHECK(s.timeouts.t_ping == 1500);
    CHECK(s.timeouts.t_block == 180000); // untouched default
    CHECK_FALSE(s.options.lockout_enabled);
    CHECK(s.options.defense_enabled);
    CHECK(s.car_entropy == EntropyKind::Weak);
    CHECK(s.fob_entropy == EntropyKind::Strong);
    CHECK(s.attack == AttackKind::None);
    REQUIRE(s.script.size() == 3);
    CHECK(s.script[0].at == 1000);
    CHECK(s.script[0].is_button);
    CHECK(s.script[0].button == Button::Unlock);
    CHECK(s.script[2].at == 3000);
    CHECK_FALSE(s.script[2].is_button);
    CHECK(s.script[2].vehicle == VehicleEvent::MotorOff);
}

TEST_CASE("unknown fields are named, not ignored") {
    const ScenarioLoad load = parse_scenario("[scenario]\nname = x\nflavor = vanilla\n");
    CHECK_FALSE(static_cast<bool>(load));
    CHECK(has_error_field(load.errors, "scenario.flavor"));
}

TEST_CASE("bad numbers point at the exact field") {
    const ScenarioLoad load = parse_scenario("[timeouts]\nt_jam = soon\n");
    CHECK_FALSE(static_cast<bool>(load));
    CHECK(has_error_field(load.errors, "timeouts.t_jam"));
    const std::string rendered = render_errors(load.errors);
    CHECK(rendered.find("timeouts.t_jam") != std::string::npos);
}

TEST_CASE("bad enum values list the valid choices") {
    const ScenarioLoad load = parse_scenario("[scenario]\ntechnique = quantum\n");
    CHECK_FALSE(static_cast<bool>(load));
    REQUIRE(has_error_field(load.errors, "scenario.technique"));
    const std::string rendered = render_errors(load.errors);
    CHECK(rendered.find("proposed") != std::string::npos);
    CHECK(rendered.find("rolling") != std::string::npos);
}

TEST_CASE("several broken fields are all reported at once") {
    const ScenarioLoad load =
        parse_scenario("[scenario]\nseed = never\nrepetitions = 0\n[car]\nentropy = dicey\n");
    CHECK_FALSE(static_cast<bool>(load));
    CHECK(has_error_field(load.errors, "scenario.seed"));
    CHECK(has_error_field(load.errors, "scenario.repetitions"));
    CHECK(has_error_field(load.errors, "car.entropy"));
}

TEST_CASE("attacks that stage their own world refuse a script") {
    const ScenarioLoad load = parse_scenario(
        "[attack]\nkind = jam\n[script]\nevent = 1000 press_lock\n");
    CHECK_FALSE(static_cast<bool>(load));
    CHECK(has_error_field(load.errors, "script.event"));
}

TEST_CASE("radio attacks accept button presses but not vehicle events") {
    const ScenarioLoad ok = parse_scenario(
        "[attack]\nkind = scan\n[script]\nevent = 60000 press_unlock\n");
    CHECK(static_cast<bool>(ok));

    const ScenarioLoad bad = parse_scenario(
        "[attack]\nkind = scan\n[script]\nevent = 60000 door_open\n");
    CHECK_FALSE(static_cast<bool>(bad));
    CHECK(has_error_field(bad.errors, "script.event"));
}

TEST_CASE("the wire format pins the challenge width at full scale") {
    const ScenarioLoad load = parse_scenario("[table]\nsum_count = 2\n");
    CHECK_FALSE(static_cast<bool>(load));
    CHECK(has_error_field(load.errors, "table.sum_count"));
}

TEST_CASE("attack and technique must be a story that makes sense") {
    CHECK_FALSE(static_cast<bool>(
        parse_scenario("[scenario]\ntechnique = fixed\n[attack]\nkind = scan\n")));
    CHECK_FALSE(static_cast<bool>(
        parse_scenario("[scenario]\ntechnique = rolling\n[attack]\nkind = playback\n")));
    CHECK(static_cast<bool>(
        parse_scenario("[scenario]\ntechnique = fixed\n[attack]\nkind = playback\n")));
    CHECK(static_cast<bool>(
        parse_scenario("[scenario]\ntechnique = passive_cr\n[attack]\nkind = relay\n")));
    CHECK_FALSE(static_cast<bool>(
        parse_scenario("[scenario]\ntechnique = passive_cr\n[attack]\nkind = jam\n")));
}

TEST_CASE("matrix and provision configs load with defaults and overrides") {
    const MatrixConfigLoad defaults = parse_matrix_config("");
    REQUIRE(static_cast<bool>(defaults));
    CHECK(defaults.budgets->scan_trials == 200000);

    const MatrixConfigLoad tuned =
        parse_matrix_config("[matrix]\nseed = 5\nscan_trials = 1000\nparallel = off\n");
    REQUIRE(static_cast<bool>(tuned));
    CHECK(tuned.budgets->seed == 5);
    CHECK(tuned.budgets->scan_trials == 1000);
    CHECK_FALSE(tuned.budgets->parallel);

    const ProvisionConfigLoad prov =
        parse_provision_config("[provision]\nruns = 123\np_fail = 0.5\n");
    REQUIRE(static_cast<bool>(prov));
    CHECK(prov.config->runs == 123);
    CHECK(prov.config->p_fail == doctest::Approx(0.5));

    CHECK_FALSE(static_cast<bool>(parse_provision_config("[provision]\np_fail = 1.5\n")));
    CHECK_FALSE(static_cast<bool>(parse_matrix_config("[matrix]\nscan_trials = none\n")));
}

TEST_CASE("every bundled scenario file loads") {
    int found = 0;
    for (const auto& entry : fs::directory_iterator(kScenarioDir)) {
        if (entry.path().extension() != ".scn") continue;
        ++found;
        const ScenarioLoad load = load_scenario_file(entry.path());
        INFO(entry.path().string(), ": ", render_errors(load.errors));
        CHECK(static_cast<bool>(load));
    }
    CHECK(found >= 10);

    // The deliberately broken example must fail and name the bad field.
    const ScenarioLoad broken = load_scenario_file(kScenarioDir / "broken.scn.txt");
    CHECK_FALSE(static_cast<bool>(broken));
    CHECK(render_errors(broken.errors).find("timeouts.t_jam") != std::string::npos);
}

TEST_CASE("running a bundled scenario produces a trace, a report and a verdict") {
    const ScenarioLoad load = load_scenario_file(kScenarioDir / "unlock_happy.scn");
    REQUIRE(static_cast<bool>(load));

    RunOptions options;
    options.out_dir = temp_dir("run");
    const RunResult run = run_scenario(*load.scenario, options);

    CHECK(run.exit_code == 0);
    CHECK(fs::exists(run.trace_path));
    CHECK(fs::exists(run.report_path));
    CHECK(run.summary.find("audit clean") != std::string::npos);

    const auto report = nlohmann::json::parse(run.report_json);
    CHECK(report.at("scenario") == "unlock_happy");
    CHECK(report.at("audit_ok") == true);
    CHECK(report.at("reps").size() == load.scenario->repetitions);
    CHECK(report.at("actuator_log").size() > 0);
    CHECK(report.at("actuator_log").at(0).at("action") == "UNLOCK_DOORS");

    // The written trace audits clean on its own.
    const std::string trace_text = slurp(run.trace_path);
    CHECK(trace_text.find("UNLOCK_DOORS") != std::string::npos);
}

TEST_CASE("the same scenario runs to byte-identical outputs") {
    const ScenarioLoad load = load_scenario_file(kScenarioDir / "start_happy.scn");
    REQUIRE(static_cast<bool>(load));

    RunOptions first_opts;
    first_opts.out_dir = temp_dir("rerun-a");
    RunOptions second_opts;
    second_opts.out_dir = temp_dir("rerun-b");
    const RunResult first = run_scenario(*load.scenario, first_opts);
    const RunResult second = run_scenario(*load.scenario, second_opts);

    CHECK(slurp(first.trace_path) == slurp(second.trace_path));
    CHECK(first.report_json == second.report_json);
}

TEST_CASE("a seed override changes the transcript") {
    const ScenarioLoad load = load_scenario_file(kScenarioDir / "unlock_happy.scn");
    REQUIRE(static_cast<bool>(load));

    RunOptions base;
    base.out_dir = temp_dir("seed-a");
    RunOptions other;
    other.out_dir = temp_dir("seed-b");
    other.seed_override = 424242;

    const RunResult a = run_scenario(*load.scenario, base);
    const RunResult b = run_scenario(*load.scenario, other);
    CHECK(a.exit_code == 0);
    CHECK(b.exit_code == 0);
    CHECK(slurp(a.trace_path) != slurp(b.trace_path));
}

TEST_CASE("attack scenarios report the auditor's verdict") {
    const ScenarioLoad load = load_scenario_file(kScenarioDir / "relay_passive.scn");
    REQUIRE(static_cast<bool>(load));

    RunOptions options;
    options.out_dir = temp_dir("relay");
    const RunResult run = run_scenario(*load.scenario, options);
    CHECK(run.exit_code == 0);

    const auto report = nlohmann::json::parse(run.report_json);
    CHECK(report.at("attack") == "relay");
    CHECK(report.at("successes") == report.at("repetitions"));
    CHECK(report.at("reps").at(0).at("succeeded") == true);
}

TEST_CASE("trace writing can be turned off") {
    const ScenarioLoad load = load_scenario_file(kScenarioDir / "unlock_happy.scn");
    REQUIRE(static_cast<bool>(load));
    RunOptions options;
    options.out_dir = temp_dir("no-trace");
    options.write_trace = false;
    const RunResult run = run_scenario(*load.scenario, options);
    CHECK(run.exit_code == 0);
    CHECK(run.trace_path.empty());
    CHECK(fs::exists(run.report_path));
}
