#include "rke/wire.hpp"

#include <stdexcept>

#include "rke/crc16.hpp"

namespace rke {

namespace {

constexpr std::uint8_t kSync0 = 0xAA;
constexpr std::uint8_t kSync1 = 0x55;

// Full-scale challenge geometry is frozen on the wire.
constexpr std::uint32_t kWireIndices = 10;
constexpr std::uint32_t kWireSums = 5;
constexpr std::uint32_t kWireIndexSpace = 2000;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

std::uint16_t get_u16(std::span<const std::uint8_t> p, std::size_t at) {
    return static_cast<std::uint16_t>((p[at] << 8) | p[at + 1]);
}

std::uint32_t get_u32(std::span<const std::uint8_t> p, std::size_t at) {
    return (static_cast<std::uint32_t>(p[at]) << 24) | (static_cast<std::uint32_t>(p[at + 1]) << 16) |
           (static_cast<std::uint32_t>(p[at + 2]) << 8) | static_cast<std::uint32_t>(p[at + 3]);
}

// -1 means variable length (ProgWrite), checked separately.
int fixed_payload_len(MsgType type) {
    switch (type) {
    case MsgType::IdAnnounce: return 4;
    case MsgType::Challenge: return 2 * kWireIndices;
    case MsgType::AuthResponse: return 2 * kWireSums;
    case MsgType::AuthOk: return 0;
    case MsgType::Command: return 1;
    case MsgType::IdRequest: return 0;
    case MsgType::StartInit: return 4 + 2 * kWireIndices;
    case MsgType::StartAuth: return 2 * kWireSums + 2 * kWireIndices;
    case MsgType::StartConfirm: return 2 * kWireSums;
    case MsgType::Ping: return 0;
    case MsgType::PingReply: return 0;
    case MsgType::ProgIdRequest: return 0;
    case MsgType::ProgIdResponse: return 4;
    case MsgType::ProgWrite: return -1;
    case MsgType::ProgAck: return 2;
    case MsgType::ProgNack: return 2;
    case MsgType::ProgCommit: return 4;
    case MsgType::ProgRollback: return 0;
    case MsgType::FixedCode: return 4;
    case MsgType::RollCode: return 4;
    case MsgType::CrChallenge: return 4;
    case MsgType::CrResponse: return 4;
    }
    return -2; // not in catalog
}

bool known_type(std::uint8_t code) { return fixed_payload_len(static_cast<MsgType>(code)) != -2; }

} // namespace

const char* to_string(MsgType type) {
    switch (type) {
    case MsgType::IdAnnounce: return "ID_ANNOUNCE";
    case MsgType::Challenge: return "CHALLENGE";
    case MsgType::AuthResponse: return "AUTH_RESPONSE";
    case MsgType::AuthOk: return "AUTH_OK";
    case MsgType::Command: return "COMMAND";
    case MsgType::IdRequest: return "ID_REQUEST";
    case MsgType::StartInit: return "START_INIT";
    case MsgType::StartAuth: return "START_AUTH";
    case MsgType::StartConfirm: return "START_CONFIRM";
    case MsgType::Ping: return "PING";
    case MsgType::PingReply: return "PING_REPLY";
    case MsgType::ProgIdRequest: return "PROG_ID_REQUEST";
    case MsgType::ProgIdResponse: return "PROG_ID_RESPONSE";
    case MsgType::ProgWrite: return "PROG_WRITE";
    case MsgType::ProgAck: return "PROG_ACK";
    case MsgType::ProgNack: return "PROG_NACK";
    case MsgType::ProgCommit: return "PROG_COMMIT";
    case MsgType::ProgRollback: return "PROG_ROLLBACK";
    case MsgType::FixedCode: return "FIXED_CODE";
    case MsgType::RollCode: return "ROLL_CODE";
    case MsgType::CrChallenge: return "CR_CHALLENGE";
    case MsgType::CrResponse: return "CR_RESPONSE";
    }
    return "UNKNOWN";
}

const char* to_string(DecodeError error) {
    switch (error) {
    case DecodeError::BadSync: return "BadSync";
    case DecodeError::BadCrc: return "BadCrc";
    case DecodeError::UnknownType: return "UnknownType";
    case DecodeError::SchemaViolation: return "SchemaViolation";
    }
    return "?";
}

bool schema_ok(const Frame& frame) {
    const int want = fixed_payload_len(frame.type);
    if (want == -2) return false;
    if (want >= 0) return frame.payload.size() == static_cast<std::size_t>(want);
    // ProgWrite: seq(2) count(1) values(2*count), 1 <= count <= 100
    if (frame.payload.size() < 3) return false;
    const std::uint8_t count = frame.payload[2];
    if (count < 1 || count > kProgBlockValues) return false;
    return frame.payload.size() == 3u + 2u * count;
}

std::vector<std::uint8_t> encode(const Frame& frame) {
    if (!schema_ok(frame)) {
        throw std::invalid_argument(std::string("encode: schema violation for ") + to_string(frame.type));
    }
    std::vector<std::uint8_t> out;
    out.reserve(6 + frame.payload.size());
    out.push_back(kSync0);
    out.push_back(kSync1);
    out.push_back(static_cast<std::uint8_t>(frame.type));
    out.push_back(static_cast<std::uint8_t>(frame.payload.size()));
    out.insert(out.end(), frame.payload.begin(), frame.payload.end());
    const std::uint16_t crc =
        crc16_ccitt_false(std::span<const std::uint8_t>(out).subspan(2)); // type + len + payload
    put_u16(out, crc);
    return out;
}

DecodeResult decode(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 6 || bytes[0] != kSync0 || bytes[1] != kSync1) {
        return {std::nullopt, DecodeError::BadSync};
    }
    const std::uint8_t len = bytes[3];
    if (bytes.size() != 6u + len) {
        return {std::nullopt, DecodeError::SchemaViolation};
    }
    const std::uint16_t want_crc = get_u16(bytes, 4 + len);
    const std::uint16_t got_crc = crc16_ccitt_false(bytes.subspan(2, 2u + len));
    if (want_crc != got_crc) {
        return {std::nullopt, DecodeError::BadCrc};
    }
    if (!known_type(bytes[2])) {
        return {std::nullopt, DecodeError::UnknownType};
    }
    Frame frame;
    frame.type = static_cast<MsgType>(bytes[2]);
    frame.payload.assign(bytes.begin() + 4, bytes.begin() + 4 + len);
    if (!schema_ok(frame)) {
        return {std::nullopt, DecodeError::SchemaViolation};
    }
    return {std::move(frame), DecodeError::BadSync};
}

Frame make_id_announce(CarKeyId id) {
    Frame f{MsgType::IdAnnounce, {}};
    put_u32(f.payload, id.value);
    return f;
}

Frame make_challenge_frame(const Challenge& challenge) {
    Frame f{MsgType::Challenge, {}};
    for (std::uint16_t index : challenge.indices) put_u16(f.payload, index);
    return f;
}

Frame make_auth_response(const AuthMessage& message) {
    Frame f{MsgType::AuthResponse, {}};
    for (std::uint16_t sum : message.sums) put_u16(f.payload, sum);
    return f;
}

Frame make_auth_ok() { return Frame{MsgType::AuthOk, {}}; }

Frame make_command(CommandCode code) {
    return Frame{MsgType::Command, {static_cast<std::uint8_t>(code)}};
}

Frame make_id_request() { return Frame{MsgType::IdRequest, {}}; }

Frame make_start_init(CarKeyId id, const Challenge& challenge) {
    Frame f{MsgType::StartInit, {}};
    put_u32(f.payload, id.value);
    for (std::uint16_t index : challenge.indices) put_u16(f.payload, index);
    return f;
}

Frame make_start_auth(const AuthMessage& message, const Challenge& challenge) {
    Frame f{MsgType::StartAuth, {}};
    for (std::uint16_t sum : message.sums) put_u16(f.payload, sum);
    for (std::uint16_t index : challenge.indices) put_u16(f.payload, index);
    return f;
}

Frame make_start_confirm(const AuthMessage& message) {
    Frame f{MsgType::StartConfirm, {}};
    for (std::uint16_t sum : message.sums) put_u16(f.payload, sum);
    return f;
}

Frame make_ping() { return Frame{MsgType::Ping, {}}; }
Frame make_ping_reply() { return Frame{MsgType::PingReply, {}}; }
Frame make_prog_id_request() { return Frame{MsgType::ProgIdRequest, {}}; }

Frame make_prog_id_response(CarKeyId id) {
    Frame f{MsgType::ProgIdResponse, {}};
    put_u32(f.payload, id.value);
    return f;
}

Frame make_prog_write(std::uint16_t block_seq, std::span<const std::uint16_t> values) {
    if (values.empty() || values.size() > kProgBlockValues) {
        throw std::invalid_argument("make_prog_write: 1..100 values per block");
    }
    Frame f{MsgType::ProgWrite, {}};
    put_u16(f.payload, block_seq);
    f.payload.push_back(static_cast<std::uint8_t>(values.size()));
    for (std::uint16_t v : values) put_u16(f.payload, v);
    return f;
}

Frame make_prog_ack(std::uint16_t seq) {
    Frame f{MsgType::ProgAck, {}};
    put_u16(f.payload, seq);
    return f;
}

Frame make_prog_nack(std::uint16_t seq) {
    Frame f{MsgType::ProgNack, {}};
    put_u16(f.payload, seq);
    return f;
}

Frame make_prog_commit(std::uint32_t generation) {
    Frame f{MsgType::ProgCommit, {}};
    put_u32(f.payload, generation);
    return f;
}

Frame make_prog_rollback() { return Frame{MsgType::ProgRollback, {}}; }

Frame make_baseline(MsgType type, std::uint32_t value) {
    Frame f{type, {}};
    put_u32(f.payload, value);
    return f;
}

std::optional<CarKeyId> parse_id_announce(const Frame& frame) {
    if (frame.type != MsgType::IdAnnounce || !schema_ok(frame)) return std::nullopt;
    return CarKeyId{get_u32(frame.payload, 0)};
}

namespace {

std::optional<Challenge> read_challenge(std::span<const std::uint8_t> payload, std::size_t at) {
    Challenge challenge;
    challenge.indices.reserve(kWireIndices);
    for (std::uint32_t i = 0; i < kWireIndices; ++i) {
        const std::uint16_t index = get_u16(payload, at + 2 * i);
        if (index >= kWireIndexSpace) return std::nullopt;
        challenge.indices.push_back(index);
    }
    return challenge;
}

AuthMessage read_sums(std::span<const std::uint8_t> payload, std::size_t at) {
    AuthMessage message;
    message.sums.reserve(kWireSums);
    for (std::uint32_t i = 0; i < kWireSums; ++i) {
        message.sums.push_back(get_u16(payload, at + 2 * i));
    }
    return message;
}

} // namespace

std::optional<Challenge> parse_challenge_frame(const Frame& frame) {
    if (frame.type != MsgType::Challenge || !schema_ok(frame)) return std::nullopt;
    return read_challenge(frame.payload, 0);
}

std::optional<AuthMessage> parse_auth_response(const Frame& frame) {
    if (frame.type != MsgType::AuthResponse || !schema_ok(frame)) return std::nullopt;
    return read_sums(frame.payload, 0);
}

std::optional<CommandCode> parse_command(const Frame& frame) {
    if (frame.type != MsgType::Command || !schema_ok(frame)) return std::nullopt;
    switch (frame.payload[0]) {
    case 0x01: return CommandCode::Lock;
    case 0x02: return CommandCode::Unlock;
    case 0x03: return CommandCode::OpenBoot;
    default: return std::nullopt;
    }
}

std::optional<StartInitPayload> parse_start_init(const Frame& frame) {
    if (frame.type != MsgType::StartInit || !schema_ok(frame)) return std::nullopt;
    auto challenge = read_challenge(frame.payload, 4);
    if (!challenge) return std::nullopt;
    return StartInitPayload{CarKeyId{get_u32(frame.payload, 0)}, std::move(*challenge)};
}

std::optional<StartAuthPayload> parse_start_auth(const Frame& frame) {
    if (frame.type != MsgType::StartAuth || !schema_ok(frame)) return std::nullopt;
    auto challenge = read_challenge(frame.payload, 2 * kWireSums);
    if (!challenge) return std::nullopt;
    return StartAuthPayload{read_sums(frame.payload, 0), std::move(*challenge)};
}

std::optional<AuthMessage> parse_start_confirm(const Frame& frame) {
    if (frame.type != MsgType::StartConfirm || !schema_ok(frame)) return std::nullopt;
    return read_sums(frame.payload, 0);
}

std::optional<CarKeyId> parse_prog_id_response(const Frame& frame) {
    if (frame.type != MsgType::ProgIdResponse || !schema_ok(frame)) return std::nullopt;
    return CarKeyId{get_u32(frame.payload, 0)};
}

std::optional<ProgWritePayload> parse_prog_write(const Frame& frame) {
    if (frame.type != MsgType::ProgWrite || !schema_ok(frame)) return std::nullopt;
    ProgWritePayload payload;
    payload.block_seq = get_u16(frame.payload, 0);
    const std::uint8_t count = frame.payload[2];
    payload.values.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        payload.values.push_back(get_u16(frame.payload, 3 + 2 * i));
    }
    return payload;
}

std::optional<std::uint16_t> parse_prog_ack(const Frame& frame) {
    if (frame.type != MsgType::ProgAck || !schema_ok(frame)) return std::nullopt;
    return get_u16(frame.payload, 0);
}

std::optional<std::uint16_t> parse_prog_nack(const Frame& frame) {
    if (frame.type != MsgType::ProgNack || !schema_ok(frame)) return std::nullopt;
    return get_u16(frame.payload, 0);
}

std::optional<std::uint32_t> parse_prog_commit(const Frame& frame) {
    if (frame.type != MsgType::ProgCommit || !schema_ok(frame)) return std::nullopt;
    return get_u32(frame.payload, 0);
}

std::optional<std::uint32_t> parse_baseline(const Frame& frame, MsgType expected) {
    if (frame.type != expected || !schema_ok(frame)) return std::nullopt;
    if (fixed_payload_len(expected) != 4) return std::nullopt;
    return get_u32(frame.payload, 0);
}

} // namespace rke
