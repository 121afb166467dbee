#ifndef RKE_WIRE_HPP
#define RKE_WIRE_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rke/authcrypt.hpp"
#include "rke/keystore.hpp"

namespace rke {

/* Frame layout, all multi-byte integers big-endian:
 *
 *   +------+------+----------+-------------+---------+--------+
 *   | 0xAA | 0x55 | msg_type | payload_len | payload | crc16  |
 *   +------+------+----------+-------------+---------+--------+
 *      1      1        1           1          0..255     2
 *
 * The CRC is CRC-16/CCITT-FALSE over msg_type, payload_len and payload.
 */

enum class MsgType : std::uint8_t {
    IdAnnounce = 0x01,   // fob -> car: 4-byte car key id
    Challenge = 0x02,    // car -> fob: 10 big-endian u16 slot indices
    AuthResponse = 0x03, // fob -> car: 5 big-endian u16 sums
    AuthOk = 0x04,       // car -> fob: empty
    Command = 0x05,      // fob -> car: 1 byte (lock/unlock/open-boot)
    IdRequest = 0x06,    // car -> fob: empty (start transaction)
    StartInit = 0x07,    // fob -> car: 4-byte id + 10 u16 fob challenge
    StartAuth = 0x08,    // car -> fob: 5 u16 sums + 10 u16 car challenge
    StartConfirm = 0x09, // fob -> car: 5 u16 sums
    Ping = 0x0A,         // car -> fob: empty (anti-jam defense)
    PingReply = 0x0B,    // fob -> car: empty

    ProgIdRequest = 0x20,  // board -> fob: empty
    ProgIdResponse = 0x21, // fob -> board: 4-byte id
    ProgWrite = 0x22,      // board -> fob: u16 block seq, u8 count n (1..100), n u16 values
    ProgAck = 0x23,        // fob -> board: u16 seq being acknowledged
    ProgNack = 0x24,       // fob -> board: u16 seq being rejected
    ProgCommit = 0x25,     // board -> fob: u32 table generation
    ProgRollback = 0x26,   // board -> fob: empty

    // Baseline techniques share the framing with reserved types.
    FixedCode = 0x30,   // 4-byte code
    RollCode = 0x31,    // 4-byte encrypted counter
    CrChallenge = 0x32, // 4-byte random challenge
    CrResponse = 0x33,  // 4-byte keyed response
};

const char* to_string(MsgType type);

enum class CommandCode : std::uint8_t { Lock = 0x01, Unlock = 0x02, OpenBoot = 0x03 };

// Acks for non-data exchanges reuse the seq field with reserved values.
constexpr std::uint16_t kAckSeqCommit = 0xFFFF;
constexpr std::uint16_t kAckSeqRollback = 0xFFFE;

constexpr std::uint32_t kProgBlockValues = 100; // values per ProgWrite block
constexpr std::uint32_t kProgBlockCount = 20;   // blocks per full table

struct Frame {
    MsgType type{};
    std::vector<std::uint8_t> payload;

    friend bool operator==(const Frame&, const Frame&) = default;
};

enum class DecodeError : std::uint8_t {
    BadSync,         // missing AA 55 preamble
    BadCrc,          // checksum mismatch
    UnknownType,     // msg_type not in the catalog
    SchemaViolation, // payload length inconsistent with type or buffer
};

const char* to_string(DecodeError error);

struct DecodeResult {
    std::optional<Frame> frame;
    DecodeError error = DecodeError::BadSync;

    explicit operator bool() const { return frame.has_value(); }
};

// True iff the payload length (and for ProgWrite, the internal count)
// matches the type's schema.
bool schema_ok(const Frame& frame);

// Canonical byte encoding. Throws std::invalid_argument if the frame
// violates its schema.
std::vector<std::uint8_t> encode(const Frame& frame);

// Strict inverse of encode: bad sync, bad CRC, unknown type and schema
// mismatches are each rejected with a distinguishable error.
DecodeResult decode(std::span<const std::uint8_t> bytes);

// Typed constructors. These produce schema-valid frames by construction.
Frame make_id_announce(CarKeyId id);
Frame make_challenge_frame(const Challenge& challenge);
Frame make_auth_response(const AuthMessage& message);
Frame make_auth_ok();
Frame make_command(CommandCode code);
Frame make_id_request();
Frame make_start_init(CarKeyId id, const Challenge& challenge);
Frame make_start_auth(const AuthMessage& message, const Challenge& challenge);
Frame make_start_confirm(const AuthMessage& message);
Frame make_ping();
Frame make_ping_reply();
Frame make_prog_id_request();
Frame make_prog_id_response(CarKeyId id);
Frame make_prog_write(std::uint16_t block_seq, std::span<const std::uint16_t> values);
Frame make_prog_ack(std::uint16_t seq);
Frame make_prog_nack(std::uint16_t seq);
Frame make_prog_commit(std::uint32_t generation);
Frame make_prog_rollback();
Frame make_baseline(MsgType type, std::uint32_t value); // FixedCode/RollCode/CrChallenge/CrResponse

// Typed accessors. Each returns nullopt when the frame is not of the
// expected type or its payload violates a domain invariant (for
// challenges: every index < 2000). Devices treat nullopt as a malformed
// frame and drop it.
std::optional<CarKeyId> parse_id_announce(const Frame& frame);
std::optional<Challenge> parse_challenge_frame(const Frame& frame);
std::optional<AuthMessage> parse_auth_response(const Frame& frame);
std::optional<CommandCode> parse_command(const Frame& frame);

struct StartInitPayload {
    CarKeyId id;
    Challenge challenge;
};
std::optional<StartInitPayload> parse_start_init(const Frame& frame);

struct StartAuthPayload {
    AuthMessage message;
    Challenge challenge;
};
std::optional<StartAuthPayload> parse_start_auth(const Frame& frame);
std::optional<AuthMessage> parse_start_confirm(const Frame& frame);
std::optional<CarKeyId> parse_prog_id_response(const Frame& frame);

struct ProgWritePayload {
    std::uint16_t block_seq = 0;
    std::vector<std::uint16_t> values;
};
std::optional<ProgWritePayload> parse_prog_write(const Frame& frame);
std::optional<std::uint16_t> parse_prog_ack(const Frame& frame);
std::optional<std::uint16_t> parse_prog_nack(const Frame& frame);
std::optional<std::uint32_t> parse_prog_commit(const Frame& frame);
std::optional<std::uint32_t> parse_baseline(const Frame& frame, MsgType expected);

} // namespace rke

#endif
