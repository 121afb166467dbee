#ifndef RKE_SCENARIO_HPP
#define RKE_SCENARIO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rke/adversaries.hpp"
#include "rke/devices.hpp"
#include "rke/entropy.hpp"
#include "rke/experiments.hpp"
#include "rke/keystore.hpp"
#include "rke/sim.hpp"

namespace rke {

enum class Technique : std::uint8_t { Proposed, Fixed, Rolling, PassiveCr };
enum class AttackKind : std::uint8_t { None, Scan, Playback, ForwardPrediction, Relay, Jam };

const char* to_string(Technique technique);
const char* to_string(AttackKind kind);

// One scripted owner action: a fob button press or a vehicle event.
struct ScriptEvent {
    Ms at = 0;
    bool is_button = true;
    Button button = Button::Unlock;
    VehicleEvent vehicle = VehicleEvent::MotorOff;
};

// Everything a run needs. A scenario file plus the binary version uniquely
// determines the output trace.
struct Scenario {
    std::string name = "scenario";
    Technique technique = Technique::Proposed;
    AttackKind attack = AttackKind::None;
    std::uint64_t seed = 1;
    std::uint32_t repetitions = 1;
    Ms horizon = 10000; // plain runs; attacks size their own timeline

    TableParams params;
    Timeouts timeouts;
    CarOptions options;
    EntropyKind car_entropy = EntropyKind::Strong;
    EntropyKind fob_entropy = EntropyKind::Strong;

    std::uint64_t scan_budget = 16;
    std::uint32_t n_record = 3;
    std::uint32_t n_replay = 1;
    std::uint32_t n_observe = 3;
    Ms relay_delay = 20;
    std::optional<Ms> victim_press_at;
    JamScript jam;

    std::vector<ScriptEvent> script;
};

struct ConfigError {
    std::size_t line = 0; // 0 = whole-file problem
    std::string field;    // "section.key" when the error has one
    std::string message;
};

// One line per error, every invalid field listed.
std::string render_errors(const std::vector<ConfigError>& errors);

struct ScenarioLoad {
    std::optional<Scenario> scenario;
    std::vector<ConfigError> errors;

    explicit operator bool() const { return scenario.has_value(); }
};

ScenarioLoad parse_scenario(std::string_view text);
ScenarioLoad load_scenario_file(const std::filesystem::path& path);

struct MatrixConfigLoad {
    std::optional<MatrixBudgets> budgets;
    std::vector<ConfigError> errors;

    explicit operator bool() const { return budgets.has_value(); }
};

MatrixConfigLoad parse_matrix_config(std::string_view text);
MatrixConfigLoad load_matrix_config(const std::filesystem::path& path);

struct ProvisionConfig {
    std::uint64_t seed = 1;
    std::uint64_t runs = 1000;
    double p_fail = 0.02;
    bool parallel = true;
};

struct ProvisionConfigLoad {
    std::optional<ProvisionConfig> config;
    std::vector<ConfigError> errors;

    explicit operator bool() const { return config.has_value(); }
};

ProvisionConfigLoad parse_provision_config(std::string_view text);
ProvisionConfigLoad load_provision_config(const std::filesystem::path& path);

struct RunOptions {
    std::optional<std::uint64_t> seed_override;
    std::filesystem::path out_dir = ".";
    bool write_trace = true;
};

struct RunResult {
    int exit_code = 0; // 0 clean, 1 = the produced trace violates an invariant
    std::filesystem::path trace_path; // empty when not written
    std::filesystem::path report_path;
    std::string report_json;
    std::string summary; // short human text for stdout
};

// Executes every repetition (repetition r runs at seed for r == 0, at
// derive_seed(seed, r) after), audits each transcript, writes the first
// repetition's trace plus a JSON report, and returns the verdict.
RunResult run_scenario(const Scenario& scenario, const RunOptions& options);

} // namespace rke

#endif
