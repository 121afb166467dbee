#include "rke/provisioning.hpp"

#include <random>
#include <span>
#include <sstream>
#include <stdexcept>

#include "rke/wire.hpp"

namespace rke {

bool FaultPlan::fails(int fob, std::uint16_t block, std::uint32_t attempt) const {
    const auto it = outcomes.find(Key{fob, block, attempt});
    return it != outcomes.end() && it->second;
}

void FaultPlan::set(int fob, std::uint16_t block, std::uint32_t attempt, bool fail) {
    outcomes[Key{fob, block, attempt}] = fail;
}

FaultPlan FaultPlan::random(std::uint64_t seed, double p_fail) {
    FaultPlan plan;
    std::mt19937_64 rng(mix64(seed));
    // Two write passes (fresh + restore) with one retry each = up to 4
    // attempts per (fob, block).
    for (int fob = 0; fob < 2; ++fob) {
        for (std::uint16_t block = 0; block < kProgBlockCount; ++block) {
            for (std::uint32_t attempt = 1; attempt <= 4; ++attempt) {
                const double draw = static_cast<double>(rng() >> 11) * 0x1.0p-53;
                if (draw < p_fail) plan.set(fob, block, attempt, true);
            }
        }
    }
    return plan;
}

const char* to_string(ProgState state) {
    switch (state) {
    case ProgState::Locked: return "LOCKED";
    case ProgState::Ready: return "READY";
    case ProgState::VerifyIds: return "VERIFY_IDS";
    case ProgState::Writing: return "WRITING";
    case ProgState::Committing: return "COMMITTING";
    case ProgState::RollingBack: return "ROLLING_BACK";
    case ProgState::Done: return "DONE";
    case ProgState::Failed: return "FAILED";
    }
    return "?";
}

const char* to_string(ExchangeOutcome outcome) {
    switch (outcome) {
    case ExchangeOutcome::Done: return "DONE";
    case ExchangeOutcome::IdMismatch: return "ID_MISMATCH";
    case ExchangeOutcome::AbortedClean: return "ABORTED_CLEAN";
    case ExchangeOutcome::RolledBack: return "ROLLED_BACK";
    case ExchangeOutcome::Inconsistent: return "INCONSISTENT";
    }
    return "?";
}

BoardComputer::BoardComputer(CarKeyId id, KeyTable table, std::string password)
    : id_(id), table_(std::move(table)), password_(std::move(password)) {}

void BoardComputer::connect(int port, KeyFob& fob) { ports_.at(port) = &fob; }
void BoardComputer::disconnect(int port) { ports_.at(port) = nullptr; }

BeginResult BoardComputer::begin_programming(std::string_view password_attempt) {
    if (ports_[0] == nullptr || ports_[1] == nullptr) return BeginResult::PortEmpty;
    if (password_attempt != password_) return BeginResult::WrongPassword;
    state_ = ProgState::Ready;
    return BeginResult::Ready;
}

namespace {

std::string hex_id(std::uint32_t value) {
    std::ostringstream out;
    out << "0x" << std::hex << std::uppercase << value;
    return out.str();
}

} // namespace

bool BoardComputer::stream_table(int fob_index, const std::vector<std::uint16_t>& values,
                                 std::uint32_t generation, const FaultPlan& faults,
                                 std::map<std::pair<int, std::uint16_t>, std::uint32_t>& attempts,
                                 ExchangeReport& report) {
    KeyFob& fob = *ports_[fob_index];
    state_ = ProgState::Writing;
    for (std::uint16_t block = 0; block < kProgBlockCount; ++block) {
        const std::span<const std::uint16_t> slice(values.data() + block * kProgBlockValues,
                                                   kProgBlockValues);
        bool stored = false;
        for (int round = 0; round < 2 && !stored; ++round) { // one retry per block
            const std::uint32_t attempt = ++attempts[{fob_index, block}];
            const auto write_ok = [&](std::uint16_t seq) {
                return !faults.fails(fob_index, seq, attempt);
            };
            std::ostringstream line;
            line << "board->" << fob.name() << " PROG_WRITE seq=" << block
                 << " n=" << kProgBlockValues << " attempt=" << attempt;
            report.transcript.push_back(line.str());
            const Frame reply = fob.wired_exchange(make_prog_write(block, slice), write_ok);
            if (parse_prog_ack(reply)) {
                report.transcript.push_back(fob.name() + "->board PROG_ACK seq=" +
                                            std::to_string(block));
                stored = true;
            } else {
                report.transcript.push_back(fob.name() + "->board PROG_NACK seq=" +
                                            std::to_string(block));
            }
        }
        if (!stored) return false; // the retry failed too; stop writing this fob
    }
    state_ = ProgState::Committing;
    report.transcript.push_back("board->" + fob.name() +
                                " PROG_COMMIT generation=" + std::to_string(generation));
    const Frame reply = fob.wired_exchange(make_prog_commit(generation));
    const auto ack = parse_prog_ack(reply);
    if (!ack || *ack != kAckSeqCommit) {
        report.transcript.push_back(fob.name() + "->board PROG_NACK (commit)");
        return false;
    }
    report.transcript.push_back(fob.name() + "->board PROG_ACK (commit)");
    return true;
}

ExchangeReport BoardComputer::run_key_exchange(EntropySource& entropy, const FaultPlan& faults) {
    if (state_ != ProgState::Ready) {
        throw std::logic_error("run_key_exchange: begin_programming has not succeeded");
    }
    ExchangeReport report;
    report.old_generation = table_.generation;
    report.new_generation = table_.generation + 1;

    state_ = ProgState::VerifyIds;
    for (int port = 0; port < 2; ++port) {
        KeyFob& fob = *ports_[port];
        report.transcript.push_back("board->" + fob.name() + " PROG_ID_REQUEST");
        const Frame reply = fob.wired_exchange(make_prog_id_request());
        const auto fob_id = parse_prog_id_response(reply);
        report.transcript.push_back(fob.name() + "->board PROG_ID_RESPONSE id=" +
                                    hex_id(fob_id ? fob_id->value : 0));
        if (!fob_id || fob_id->value != id_.value) {
            report.outcome = ExchangeOutcome::IdMismatch;
            report.failed_fob = port;
            state_ = ProgState::Failed;
            return report;
        }
    }

    const std::vector<std::uint16_t> old_values = table_.values;
    const KeyTable fresh = new_key_table(entropy);
    std::map<std::pair<int, std::uint16_t>, std::uint32_t> attempts;

    const auto abort_fob = [&](int port) {
        KeyFob& fob = *ports_[port];
        report.transcript.push_back("board->" + fob.name() + " PROG_ROLLBACK");
        fob.wired_exchange(make_prog_rollback());
        report.transcript.push_back(fob.name() + "->board PROG_ACK (rollback)");
    };

    if (!stream_table(0, fresh.values, report.new_generation, faults, attempts, report)) {
        abort_fob(0); // staging discarded; its live table was never touched
        report.outcome = ExchangeOutcome::AbortedClean;
        report.failed_fob = 0;
        state_ = ProgState::Failed;
        return report;
    }
    if (!stream_table(1, fresh.values, report.new_generation, faults, attempts, report)) {
        abort_fob(1);
        report.failed_fob = 1;
        state_ = ProgState::RollingBack;
        report.transcript.push_back("board: restoring " + ports_[0]->name() +
                                    " to generation " + std::to_string(report.old_generation));
        if (stream_table(0, old_values, report.old_generation, faults, attempts, report)) {
            report.outcome = ExchangeOutcome::RolledBack;
        } else {
            abort_fob(0);
            report.outcome = ExchangeOutcome::Inconsistent;
            report.divergent_device = ports_[0]->name();
        }
        state_ = ProgState::Failed;
        return report;
    }

    table_.values = fresh.values;
    table_.generation = report.new_generation;
    report.transcript.push_back("board: wrote own table generation=" +
                                std::to_string(report.new_generation));
    report.outcome = ExchangeOutcome::Done;
    state_ = ProgState::Done;
    return report;
}

} // namespace rke
