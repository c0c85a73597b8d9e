#pragma once

#include <cstdint>
#include <string_view>

#include "mo/core/bytes.hpp"

namespace mo::net {

enum class MessageType : std::uint8_t {
    fetch = 1,
    fetch_resp = 2,
    assent = 3,
    assent_resp = 4,
    busy = 5,
    request_payload = 16,
    adopt = 17,
    replicate = 18,
    update = 19,
    local_resp = 20,
    error = 255,
};

inline constexpr std::uint16_t kMagic = 0x4D4F; // "MO"
inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kHeaderSize = 16;
inline constexpr std::uint32_t kMaxBodySize = 16u << 20;

struct Message {
    MessageType type = MessageType::error;
    std::uint64_t request_id = 0;
    Bytes body;

    friend bool operator==(const Message&, const Message&) = default;
};

struct FrameHeader {
    MessageType type;
    std::uint64_t request_id;
    std::uint32_t body_length;
};

bool is_known_type(std::uint8_t raw) noexcept;
// Types that may only arrive on the trusted local channel.
bool is_local_type(MessageType type) noexcept;
std::string_view message_type_name(MessageType type) noexcept;

// Frame: magic(2) version(1) type(1) request_id(8) body_length(4) body.
Bytes encode_message(const Message& m);

// Validates the 16 header bytes (magic, version, type, body bound).
FrameHeader decode_header(ByteView header);

// Decodes exactly one frame. Errors: bad_magic, bad_version, unknown_type,
// length_mismatch (truncated, trailing bytes, or oversized body).
Message decode_message(ByteView frame);

} // namespace mo::net
