#include "rke/scenario.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <memory>
#include <sstream>

#include "json.hpp"

#include "rke/audit.hpp"
#include "rke/baselines.hpp"
#include "rke/trace.hpp"

namespace rke {

const char* to_string(Technique technique) {
    switch (technique) {
        case Technique::Proposed: return "proposed";
        case Technique::Fixed: return "fixed";
        case Technique::Rolling: return "rolling";
        case Technique::PassiveCr: return "passive_cr";
    }
    return "?";
}

const char* to_string(AttackKind kind) {
    switch (kind) {
        case AttackKind::None: return "none";
        case AttackKind::Scan: return "scan";
        case AttackKind::Playback: return "playback";
        case AttackKind::ForwardPrediction: return "forward_prediction";
        case AttackKind::Relay: return "relay";
        case AttackKind::Jam: return "jam";
    }
    return "?";
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())) != 0) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())) != 0) {
        s.remove_suffix(1);
    }
    return s;
}

struct IniItem {
    std::size_t line = 0;
    std::string section;
    std::string key;
    std::string value;
};

std::vector<IniItem> scan_ini(std::string_view text, std::vector<ConfigError>& errors) {
    std::vector<IniItem> items;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        if (line.front() == '[') {
            if (line.size() < 3 || line.back() != ']') {
                errors.push_back({line_no, std::string(line), "malformed section header"});
                continue;
            }
            section = std::string(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            errors.push_back({line_no, section, "expected 'key = value'"});
            continue;
        }
        IniItem item;
        item.line = line_no;
        item.section = section;
        item.key = std::string(trim(line.substr(0, eq)));
        item.value = std::string(trim(line.substr(eq + 1)));
        if (item.key.empty()) {
            errors.push_back({line_no, section, "empty key before '='"});
            continue;
        }
        items.push_back(std::move(item));
    }
    return items;
}

// Typed, consuming access to the scanned items. Every parse failure lands
// in the shared error list under its "section.key" name; leftovers become
// unknown-field errors so a typo can never silently fall back to a default.
class Fields {
public:
    Fields(std::vector<IniItem> items, std::vector<ConfigError>& errors)
        : items_(std::move(items)), used_(items_.size(), 0), errors_(errors) {}

    bool get_u64(const char* section, const char* key, std::uint64_t& out) {
        const auto i = find(section, key);
        if (!i.has_value()) return false;
        return parse_u64(items_[*i], out);
    }

    bool get_u32(const char* section, const char* key, std::uint32_t& out) {
        const auto i = find(section, key);
        if (!i.has_value()) return false;
        std::uint64_t wide = 0;
        if (!parse_u64(items_[*i], wide)) return false;
        if (wide > 0xFFFFFFFFull) {
            fail(items_[*i], "value does not fit in 32 bits");
            return false;
        }
        out = static_cast<std::uint32_t>(wide);
        return true;
    }

    bool get_double(const char* section, const char* key, double& out) {
        const auto i = find(section, key);
        if (!i.has_value()) return false;
        const std::string& v = items_[*i].value;
        double parsed = 0.0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), parsed);
        if (ec != std::errc{} || ptr != v.data() + v.size()) {
            fail(items_[*i], "expected a number, got '" + v + "'");
            return false;
        }
        out = parsed;
        return true;
    }

    bool get_bool(const char* section, const char* key, bool& out) {
        const auto i = find(section, key);
        if (!i.has_value()) return false;
        const std::string& v = items_[*i].value;
        if (v == "on" || v == "true" || v == "yes" || v == "1") {
            out = true;
            return true;
        }
        if (v == "off" || v == "false" || v == "no" || v == "0") {
            out = false;
            return true;
        }
        fail(items_[*i], "expected on/off, got '" + v + "'");
        return false;
    }

    bool get_string(const char* section, const char* key, std::string& out) {
        const auto i = find(section, key);
        if (!i.has_value()) return false;
        out = items_[*i].value;
        return true;
    }

    template <typename T>
    bool get_choice(const char* section, const char* key,
                    std::initializer_list<std::pair<const char*, T>> choices, T& out) {
        const auto i = find(section, key);
        if (!i.has_value()) return false;
        for (const auto& [name, value] : choices) {
            if (items_[*i].value == name) {
                out = value;
                return true;
            }
        }
        std::string valid;
        for (const auto& [name, value] : choices) {
            if (!valid.empty()) valid += ", ";
            valid += name;
        }
        fail(items_[*i], "expected one of " + valid + "; got '" + items_[*i].value + "'");
        return false;
    }

    std::vector<IniItem> take_repeated(const char* section, const char* key) {
        std::vector<IniItem> hits;
        for (std::size_t i = 0; i < items_.size(); ++i) {
            if (items_[i].section == section && items_[i].key == key) {
                used_[i] = 1;
                hits.push_back(items_[i]);
            }
        }
        return hits;
    }

    // Line of the item that set section.key, for semantic errors raised
    // after parsing. 0 when the key never appeared.
    std::size_t line_hint(const char* section, const char* key) const {
        std::size_t line = 0;
        for (const IniItem& item : items_) {
            if (item.section == section && item.key == key) line = item.line;
        }
        return line;
    }

    void fail(const IniItem& item, std::string message) {
        errors_.push_back({item.line, item.section + "." + item.key, std::move(message)});
    }

    void finish() {
        for (std::size_t i = 0; i < items_.size(); ++i) {
            if (used_[i] == 0) {
                errors_.push_back(
                    {items_[i].line, items_[i].section + "." + items_[i].key, "unknown field"});
            }
        }
    }

private:
    std::optional<std::size_t> find(std::string_view section, std::string_view key) {
        std::optional<std::size_t> hit;
        for (std::size_t i = 0; i < items_.size(); ++i) {
            if (items_[i].section == section && items_[i].key == key) {
                used_[i] = 1;
                hit = i; // repeated scalar: last one wins
            }
        }
        return hit;
    }

    bool parse_u64(const IniItem& item, std::uint64_t& out) {
        const std::string& v = item.value;
        std::uint64_t parsed = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), parsed);
        if (ec != std::errc{} || ptr != v.data() + v.size()) {
            fail(item, "expected an unsigned number, got '" + v + "'");
            return false;
        }
        out = parsed;
        return true;
    }

    std::vector<IniItem> items_;
    std::vector<char> used_;
    std::vector<ConfigError>& errors_;
};

std::optional<std::string> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
    return static_cast<bool>(out);
}

void parse_script(Fields& fields, Scenario& s) {
    for (const IniItem& item : fields.take_repeated("script", "event")) {
        if (s.attack != AttackKind::None && s.attack != AttackKind::Scan &&
            s.attack != AttackKind::Playback) {
            fields.fail(item, "this attack stages its own timeline; remove the script section");
            continue;
        }
        std::istringstream in{item.value};
        std::string at_text;
        std::string action;
        std::string extra;
        in >> at_text >> action;
        if (at_text.empty() || action.empty() || (in >> extra)) {
            fields.fail(item, "expected '<ms> <action>', got '" + item.value + "'");
            continue;
        }
        ScriptEvent event;
        const auto [ptr, ec] =
            std::from_chars(at_text.data(), at_text.data() + at_text.size(), event.at);
        if (ec != std::errc{} || ptr != at_text.data() + at_text.size()) {
            fields.fail(item, "expected an unsigned time, got '" + at_text + "'");
            continue;
        }
        if (action == "press_lock") {
            event.button = Button::Lock;
        } else if (action == "press_unlock") {
            event.button = Button::Unlock;
        } else if (action == "press_boot") {
            event.button = Button::Boot;
        } else if (action == "motor_off" || action == "door_open" || action == "door_close" ||
                   action == "start_button" || action == "handle_pull") {
            event.is_button = false;
            if (action == "motor_off") event.vehicle = VehicleEvent::MotorOff;
            if (action == "door_open") event.vehicle = VehicleEvent::DoorOpened;
            if (action == "door_close") event.vehicle = VehicleEvent::DoorClosed;
            if (action == "start_button") event.vehicle = VehicleEvent::StartButton;
            if (action == "handle_pull") event.vehicle = VehicleEvent::HandlePull;
        } else {
            fields.fail(item, "unknown action '" + action +
                                  "' (press_lock, press_unlock, press_boot, motor_off, "
                                  "door_open, door_close, start_button, handle_pull)");
            continue;
        }
        if (!event.is_button && (s.attack == AttackKind::Scan || s.attack == AttackKind::Playback)) {
            fields.fail(item, "only button presses mix with a radio attack");
            continue;
        }
        s.script.push_back(event);
    }
}

void validate_scenario(const Scenario& s, const Fields& fields,
                       std::vector<ConfigError>& errors) {
    const auto field_error = [&](const char* section, const char* key, std::string message) {
        errors.push_back({fields.line_hint(section, key),
                          std::string(section) + "." + key, std::move(message)});
    };

    if (s.name.empty()) field_error("scenario", "name", "must not be empty");
    if (s.repetitions == 0) field_error("scenario", "repetitions", "must be at least 1");
    if (s.horizon == 0) field_error("scenario", "horizon", "must be at least 1 ms");
    if (s.params.word_bits < 1 || s.params.word_bits > 16) {
        field_error("table", "word_bits", "must be 1..16");
    }
    if (s.params.table_len < 2 || s.params.table_len > 65536) {
        field_error("table", "table_len", "must be 2..65536");
    }
    if (s.technique == Technique::Proposed && s.params.sum_count != 5) {
        field_error("table", "sum_count",
                    "wire challenges carry exactly 10 indices (5 sums); reduced widths run in "
                    "the desk-scale experiments, not over the air");
    }
    if (s.timeouts.t_ping == 0) field_error("timeouts", "t_ping", "must be nonzero");
    if (s.timeouts.honk_spacing == 0) field_error("timeouts", "honk_spacing", "must be nonzero");

    switch (s.attack) {
        case AttackKind::None:
            break;
        case AttackKind::Scan:
            if (s.technique != Technique::Proposed) {
                field_error("attack", "kind", "scan drives the challenge flow; set technique = proposed");
            }
            if (s.scan_budget == 0) field_error("attack", "budget", "must be at least 1");
            break;
        case AttackKind::Playback:
            if (s.technique != Technique::Proposed && s.technique != Technique::Fixed) {
                field_error("attack", "kind", "playback runs against technique = proposed or fixed");
            }
            if (s.n_record == 0) field_error("attack", "n_record", "must be at least 1");
            if (s.n_replay == 0) field_error("attack", "n_replay", "must be at least 1");
            break;
        case AttackKind::ForwardPrediction:
            if (s.technique != Technique::Proposed && s.technique != Technique::PassiveCr) {
                field_error("attack", "kind",
                            "forward_prediction runs against technique = proposed or passive_cr");
            }
            if (s.n_observe == 0) field_error("attack", "n_observe", "must be at least 1");
            break;
        case AttackKind::Relay:
            if (s.technique != Technique::Proposed && s.technique != Technique::PassiveCr) {
                field_error("attack", "kind", "relay runs against technique = proposed or passive_cr");
            }
            break;
        case AttackKind::Jam:
            if (s.technique != Technique::Proposed) {
                field_error("attack", "kind", "jam targets the door watcher; set technique = proposed");
            }
            if (s.jam.motor_off > s.jam.door_open || s.jam.door_open > s.jam.door_close) {
                field_error("jam", "door_close",
                            "park sequence must be ordered motor_off <= door_open <= door_close");
            }
            if (s.jam.horizon <= s.jam.lock_press) {
                field_error("jam", "horizon", "must extend past lock_press");
            }
            break;
    }
}

AttackOutcome plain_run(const Scenario& s, std::uint64_t seed) {
    Simulation sim;
    const ChannelId lot = sim.add_channel();
    std::vector<std::unique_ptr<Endpoint>> owned;
    const CarKeyId id{0x11223344};

    switch (s.technique) {
        case Technique::Proposed: {
            StrongSource table_src(derive_seed(seed, "table"));
            KeyTable table = new_key_table(table_src, s.params);
            owned.push_back(std::make_unique<CarTransceiver>(
                "car", id, table, make_entropy(s.car_entropy, derive_seed(seed, "car")), s.params,
                s.timeouts, s.options));
            owned.push_back(std::make_unique<KeyFob>(
                "fob", id, table, make_entropy(s.fob_entropy, derive_seed(seed, "fob")), s.params,
                s.timeouts));
            emit_trace_params(sim.trace(), s.timeouts, s.options);
            break;
        }
        case Technique::Fixed: {
            StrongSource src(derive_seed(seed, "code"));
            const std::uint32_t code = draw_bits(src, 32);
            owned.push_back(std::make_unique<FixedCodeCarEndpoint>("car", code));
            owned.push_back(std::make_unique<FixedCodeFobEndpoint>("fob", code));
            break;
        }
        case Technique::Rolling: {
            const std::uint64_t key = derive_seed(seed, "key");
            owned.push_back(std::make_unique<RollingCodeCarEndpoint>("car", key));
            owned.push_back(std::make_unique<RollingCodeFobEndpoint>("fob", key));
            break;
        }
        case Technique::PassiveCr: {
            const std::uint64_t key = derive_seed(seed, "cr-key");
            owned.push_back(std::make_unique<PassiveCrCarEndpoint>(
                "car", key, make_entropy(s.car_entropy, derive_seed(seed, "car"))));
            owned.push_back(std::make_unique<PassiveCrFobEndpoint>("fob", key));
            break;
        }
    }
    for (auto& endpoint : owned) sim.attach(*endpoint, lot);
    for (const ScriptEvent& event : s.script) {
        if (event.is_button) {
            sim.schedule_button(event.at, "fob", event.button);
        } else {
            sim.schedule_vehicle(event.at, "car", event.vehicle);
        }
    }
    sim.run_until(s.horizon);

    AttackOutcome out;
    out.trace_text = sim.trace().render();
    out.audit = audit_trace(out.trace_text);
    out.elapsed = sim.now();
    return out;
}

AttackOutcome run_attack(const Scenario& s, std::uint64_t seed) {
    TargetConfig target;
    target.seed = seed;
    target.car_entropy = s.car_entropy;
    target.fob_entropy = s.fob_entropy;
    target.params = s.params;
    target.timeouts = s.timeouts;
    target.options = s.options;
    for (const ScriptEvent& event : s.script) {
        if (event.is_button) target.owner_presses.emplace_back(event.at, event.button);
    }
    switch (s.attack) {
        case AttackKind::Scan:
            return scan_attack(target, s.scan_budget,
                               make_entropy(EntropyKind::Strong, derive_seed(seed, "guess")));
        case AttackKind::Playback:
            if (s.technique == Technique::Fixed) return playback_attack_fixed_code(seed);
            return playback_attack(target, s.n_record, s.n_replay);
        case AttackKind::ForwardPrediction:
            if (s.technique == Technique::PassiveCr) {
                return forward_prediction_attack_passive_cr(seed, s.car_entropy, s.n_observe);
            }
            return forward_prediction_attack(target, s.n_observe);
        case AttackKind::Relay:
            return relay_attack(target,
                                s.technique == Technique::PassiveCr ? RelayTechnique::PassiveCr
                                                                    : RelayTechnique::Proposed,
                                s.relay_delay, s.victim_press_at);
        case AttackKind::Jam:
            return jam_attack(target, s.jam);
        case AttackKind::None:
            break;
    }
    return plain_run(s, seed);
}

} // namespace

std::string render_errors(const std::vector<ConfigError>& errors) {
    std::ostringstream out;
    for (const ConfigError& e : errors) {
        out << "config error: ";
        if (e.line > 0) out << "line " << e.line << ": ";
        if (!e.field.empty()) out << e.field << ": ";
        out << e.message << "\n";
    }
    return out.str();
}

ScenarioLoad parse_scenario(std::string_view text) {
    ScenarioLoad load;
    Fields fields(scan_ini(text, load.errors), load.errors);
    Scenario s;

    fields.get_string("scenario", "name", s.name);
    fields.get_choice("scenario", "technique",
                      {{"proposed", Technique::Proposed},
                       {"fixed", Technique::Fixed},
                       {"rolling", Technique::Rolling},
                       {"passive_cr", Technique::PassiveCr}},
                      s.technique);
    fields.get_u64("scenario", "seed", s.seed);
    fields.get_u32("scenario", "repetitions", s.repetitions);
    fields.get_u64("scenario", "horizon", s.horizon);

    fields.get_u32("table", "table_len", s.params.table_len);
    fields.get_u32("table", "word_bits", s.params.word_bits);
    fields.get_u32("table", "sum_count", s.params.sum_count);

    fields.get_u64("timeouts", "t_challenge", s.timeouts.t_challenge);
    fields.get_u64("timeouts", "t_auth_ok", s.timeouts.t_auth_ok);
    fields.get_u64("timeouts", "t_auth", s.timeouts.t_auth);
    fields.get_u64("timeouts", "t_command", s.timeouts.t_command);
    fields.get_u64("timeouts", "t_start", s.timeouts.t_start);
    fields.get_u64("timeouts", "t_jam", s.timeouts.t_jam);
    fields.get_u64("timeouts", "t_autolock", s.timeouts.t_autolock);
    fields.get_u64("timeouts", "t_block", s.timeouts.t_block);
    fields.get_u64("timeouts", "w_fail", s.timeouts.w_fail);
    fields.get_u64("timeouts", "t_ping", s.timeouts.t_ping);
    fields.get_u64("timeouts", "honk_spacing", s.timeouts.honk_spacing);

    fields.get_bool("car", "lockout", s.options.lockout_enabled);
    fields.get_bool("car", "defense", s.options.defense_enabled);
    fields.get_choice("car", "entropy",
                      {{"strong", EntropyKind::Strong}, {"weak", EntropyKind::Weak}},
                      s.car_entropy);
    fields.get_choice("fob", "entropy",
                      {{"strong", EntropyKind::Strong}, {"weak", EntropyKind::Weak}},
                      s.fob_entropy);

    fields.get_choice("attack", "kind",
                      {{"none", AttackKind::None},
                       {"scan", AttackKind::Scan},
                       {"playback", AttackKind::Playback},
                       {"forward_prediction", AttackKind::ForwardPrediction},
                       {"relay", AttackKind::Relay},
                       {"jam", AttackKind::Jam}},
                      s.attack);
    fields.get_u64("attack", "budget", s.scan_budget);
    fields.get_u32("attack", "n_record", s.n_record);
    fields.get_u32("attack", "n_replay", s.n_replay);
    fields.get_u32("attack", "n_observe", s.n_observe);
    fields.get_u64("attack", "relay_delay", s.relay_delay);
    std::uint64_t press_at = 0;
    if (fields.get_u64("attack", "victim_press_at", press_at)) s.victim_press_at = press_at;

    fields.get_u64("jam", "motor_off", s.jam.motor_off);
    fields.get_u64("jam", "door_open", s.jam.door_open);
    fields.get_u64("jam", "door_close", s.jam.door_close);
    fields.get_u64("jam", "lock_press", s.jam.lock_press);
    fields.get_u64("jam", "jam_from", s.jam.jam_from);
    fields.get_u64("jam", "jam_to", s.jam.jam_to);
    fields.get_u64("jam", "horizon", s.jam.horizon);

    parse_script(fields, s);
    fields.finish();
    validate_scenario(s, fields, load.errors);

    if (load.errors.empty()) load.scenario = std::move(s);
    return load;
}

ScenarioLoad load_scenario_file(const std::filesystem::path& path) {
    const auto text = slurp(path);
    if (!text.has_value()) {
        ScenarioLoad load;
        load.errors.push_back({0, path.string(), "cannot read file"});
        return load;
    }
    return parse_scenario(*text);
}

MatrixConfigLoad parse_matrix_config(std::string_view text) {
    MatrixConfigLoad load;
    Fields fields(scan_ini(text, load.errors), load.errors);
    MatrixBudgets b;
    fields.get_u64("matrix", "seed", b.seed);
    fields.get_u64("matrix", "scan_trials", b.scan_trials);
    fields.get_u64("matrix", "playback_trials", b.playback_trials);
    fields.get_u64("matrix", "forward_trials", b.forward_trials);
    fields.get_u32("matrix", "playback_n_record", b.playback_n_record);
    fields.get_bool("matrix", "parallel", b.parallel);
    fields.finish();
    const auto nonzero = [&](const char* key, std::uint64_t value) {
        if (value == 0) {
            load.errors.push_back(
                {fields.line_hint("matrix", key), std::string("matrix.") + key, "must be at least 1"});
        }
    };
    nonzero("scan_trials", b.scan_trials);
    nonzero("playback_trials", b.playback_trials);
    nonzero("forward_trials", b.forward_trials);
    nonzero("playback_n_record", b.playback_n_record);
    if (load.errors.empty()) load.budgets = b;
    return load;
}

MatrixConfigLoad load_matrix_config(const std::filesystem::path& path) {
    const auto text = slurp(path);
    if (!text.has_value()) {
        MatrixConfigLoad load;
        load.errors.push_back({0, path.string(), "cannot read file"});
        return load;
    }
    return parse_matrix_config(*text);
}

ProvisionConfigLoad parse_provision_config(std::string_view text) {
    ProvisionConfigLoad load;
    Fields fields(scan_ini(text, load.errors), load.errors);
    ProvisionConfig c;
    fields.get_u64("provision", "seed", c.seed);
    fields.get_u64("provision", "runs", c.runs);
    fields.get_double("provision", "p_fail", c.p_fail);
    fields.get_bool("provision", "parallel", c.parallel);
    fields.finish();
    if (c.runs == 0) {
        load.errors.push_back(
            {fields.line_hint("provision", "runs"), "provision.runs", "must be at least 1"});
    }
    if (c.p_fail < 0.0 || c.p_fail > 1.0) {
        load.errors.push_back({fields.line_hint("provision", "p_fail"), "provision.p_fail",
                               "must be between 0 and 1"});
    }
    if (load.errors.empty()) load.config = c;
    return load;
}

ProvisionConfigLoad load_provision_config(const std::filesystem::path& path) {
    const auto text = slurp(path);
    if (!text.has_value()) {
        ProvisionConfigLoad load;
        load.errors.push_back({0, path.string(), "cannot read file"});
        return load;
    }
    return parse_provision_config(*text);
}

RunResult run_scenario(const Scenario& scenario, const RunOptions& options) {
    Scenario s = scenario;
    if (options.seed_override.has_value()) s.seed = *options.seed_override;

    nlohmann::json rep_array = nlohmann::json::array();
    std::string first_trace;
    std::uint64_t successes = 0;
    bool any_violation = false;

    for (std::uint32_t rep = 0; rep < s.repetitions; ++rep) {
        const std::uint64_t rep_seed = rep == 0 ? s.seed : derive_seed(s.seed, rep);
        const AttackOutcome outcome =
            s.attack == AttackKind::None ? plain_run(s, rep_seed) : run_attack(s, rep_seed);
        if (rep == 0) first_trace = outcome.trace_text;
        if (!outcome.audit.clean()) any_violation = true;
        if (outcome.succeeded) ++successes;

        nlohmann::json r;
        r["seed"] = rep_seed;
        r["audit_clean"] = outcome.audit.clean();
        nlohmann::json violations = nlohmann::json::array();
        if (!outcome.audit.format_ok) violations.push_back(outcome.audit.format_error);
        for (const AuditViolation& v : outcome.audit.violations) {
            violations.push_back("line " + std::to_string(v.line) + ": " + v.message);
        }
        r["violations"] = violations;
        if (s.attack != AttackKind::None) {
            r["succeeded"] = outcome.succeeded;
            r["attempts"] = outcome.attempts;
            r["evidence"] = outcome.evidence;
            if (s.attack == AttackKind::ForwardPrediction) {
                r["predictor_failed"] = outcome.predictor_failed;
            }
        }
        r["car_locked_at_end"] = outcome.audit.car_locked_at_end;
        r["lock_press_unserved"] = outcome.audit.lock_press_unserved;
        r["honk_count"] = outcome.audit.honk_count;
        if (outcome.audit.first_honk_at.has_value()) {
            r["first_honk_at"] = *outcome.audit.first_honk_at;
        }
        if (outcome.audit.autolock_at.has_value()) r["autolock_at"] = *outcome.audit.autolock_at;
        rep_array.push_back(std::move(r));
    }

    nlohmann::json actuator_log = nlohmann::json::array();
    Ms final_event_at = 0;
    if (const auto parsed = parse_trace(first_trace)) {
        for (const TraceRecord& rec : parsed.trace->records) {
            final_event_at = rec.time;
            if (rec.dir == TraceDir::Act) {
                actuator_log.push_back(
                    {{"at", rec.time}, {"endpoint", rec.endpoint}, {"action", rec.detail}});
            }
        }
    }

    nlohmann::json report;
    report["scenario"] = s.name;
    report["technique"] = to_string(s.technique);
    report["attack"] = to_string(s.attack);
    report["seed"] = s.seed;
    report["repetitions"] = s.repetitions;
    report["audit_ok"] = !any_violation;
    if (s.attack != AttackKind::None) {
        report["successes"] = successes;
        report["success_rate"] = static_cast<double>(successes) / s.repetitions;
    }
    report["reps"] = rep_array;
    report["actuator_log"] = actuator_log;
    report["final_event_at"] = final_event_at;

    RunResult result;
    result.report_json = report.dump(2) + "\n";
    result.exit_code = any_violation ? 1 : 0;

    std::error_code ec;
    std::filesystem::create_directories(options.out_dir, ec);
    result.report_path = options.out_dir / (s.name + ".report.json");
    bool wrote = write_file(result.report_path, result.report_json);
    if (options.write_trace) {
        result.trace_path = options.out_dir / (s.name + ".trace");
        wrote = write_file(result.trace_path, first_trace) && wrote;
    }

    std::ostringstream summary;
    summary << s.name << ": technique " << to_string(s.technique) << ", attack "
            << to_string(s.attack) << ", " << s.repetitions
            << (s.repetitions == 1 ? " repetition" : " repetitions");
    if (s.attack != AttackKind::None) {
        summary << ", " << successes << " attack success" << (successes == 1 ? "" : "es");
    }
    summary << (any_violation ? ", audit FAILED" : ", audit clean");
    if (!wrote) {
        summary << " (cannot write outputs under " << options.out_dir.string() << ")";
        result.exit_code = 2;
    }
    result.summary = summary.str();
    return result;
}

} // namespace rke
