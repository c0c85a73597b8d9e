#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "mo/core/bytes.hpp"
#include "mo/core/hash.hpp"

namespace mo {

inline constexpr std::uint8_t kTokenVersion = 1;
inline constexpr std::size_t kDefaultMaxPayloadSize = 65536;

// Contact address of an MO server. Doubles as the server address type on
// both the simulated and the real network. Always held in canonical form:
// host lowercased, single trailing dot removed.
class HomeLocation {
public:
    HomeLocation() = default;
    HomeLocation(std::string_view host, std::uint16_t port); // throws Error(invalid_home)

    // "host:port"; the last colon separates the port.
    static HomeLocation parse(std::string_view text);

    const std::string& host() const noexcept { return host_; }
    std::uint16_t port() const noexcept { return port_; }
    bool valid() const noexcept { return !host_.empty() && port_ != 0; }
    std::string to_string() const;

    friend bool operator==(const HomeLocation&, const HomeLocation&) = default;
    friend auto operator<=>(const HomeLocation&, const HomeLocation&) = default;

private:
    std::string host_;
    std::uint16_t port_ = 0;
};

using Address = HomeLocation;

// Milliseconds since the Unix epoch (UTC). Zero is reserved as invalid.
struct ExpireDate {
    std::uint64_t millis = 0;

    bool valid() const noexcept { return millis != 0; }
    friend auto operator<=>(const ExpireDate&, const ExpireDate&) = default;
};

using AuxTag = std::uint16_t;

// Immutable, size-limited payload bytes. Copies share the buffer.
class Payload {
public:
    Payload() : data_(std::make_shared<const Bytes>()) {}
    explicit Payload(Bytes bytes, std::size_t max_size = kDefaultMaxPayloadSize);

    ByteView view() const noexcept { return *data_; }
    std::size_t size() const noexcept { return data_->size(); }
    const Bytes& bytes() const noexcept { return *data_; }

    friend bool operator==(const Payload& a, const Payload& b) { return *a.data_ == *b.data_; }

private:
    std::shared_ptr<const Bytes> data_;
};

struct Token {
    std::uint8_t version = kTokenVersion;
    HomeLocation home;
    ExpireDate expire;
    AuxTag aux = 0;
    Digest hash{};

    friend bool operator==(const Token&, const Token&) = default;
};

Token token_create(const HomeLocation& home, ExpireDate expire, AuxTag aux, ByteView payload,
                   std::size_t max_payload_size = kDefaultMaxPayloadSize);
inline Token token_create(const HomeLocation& home, ExpireDate expire, AuxTag aux, const Payload& payload) {
    return token_create(home, expire, aux, payload.view(), SIZE_MAX);
}

bool token_verify(const Token& token, ByteView payload);

// Wire layout (big-endian):
//   version(1) host_len(1) host(host_len) port(2) expire(8) aux(2) hash(32)
Bytes token_encode(const Token& token);
void token_encode_to(ByteWriter& out, const Token& token);
Token token_decode(ByteView bytes); // whole buffer must be exactly one token
Token token_read(ByteReader& in);   // reads one token, errors use in.error_code()
std::size_t token_encoded_size(const Token& token) noexcept;

// Expire ascending, then hash bytes, then canonical encoding.
std::strong_ordering token_order(const Token& a, const Token& b);

inline bool operator<(const Token& a, const Token& b) { return token_order(a, b) < 0; }

// First four hash bytes in hex; used for traces and logs.
std::string token_prefix(const Token& token);

struct TokenHash {
    std::size_t operator()(const Token& t) const noexcept {
        std::size_t h = 0;
        for (int i = 0; i < 8; ++i) h = h << 8 | t.hash[i];
        return h ^ static_cast<std::size_t>(t.expire.millis);
    }
};

} // namespace mo
