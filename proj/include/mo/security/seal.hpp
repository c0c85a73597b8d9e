#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "mo/core/bytes.hpp"
#include "mo/core/token.hpp"

namespace mo {

enum class SealMode : std::uint8_t {
    none = 0,
    authenticate = 1,
    encrypt = 2,
    encrypt_authenticate = 3,
};

using SecretKey = std::array<std::uint8_t, 32>;

inline constexpr std::size_t kTagSize = 32;
inline constexpr std::size_t kNonceSize = 24;

// Closed-shared section of a micro object: how payload (or cluster) bytes are
// protected. Lives only in the application address space.
class SecurityPolicy {
public:
    SecurityPolicy() = default; // mode none
    SecurityPolicy(SealMode mode, const SecretKey& key);

    static SecurityPolicy none() { return {}; }

    SealMode mode() const noexcept { return mode_; }
    const std::optional<SecretKey>& key() const noexcept { return key_; }

private:
    SealMode mode_ = SealMode::none;
    std::optional<SecretKey> key_;
};

bool is_authenticating(SealMode mode) noexcept;
std::optional<SealMode> seal_mode_from(std::uint8_t raw) noexcept;

// Layout on the wire: mode(1) || body. Authenticating modes put a 32-byte
// tag in front of the plaintext or ciphertext; plain encryption puts the
// 24-byte nonce there instead.
struct SealedBuffer {
    SealMode mode = SealMode::none;
    Bytes body;

    Bytes to_bytes() const;
    static SealedBuffer from_bytes(ByteView bytes); // throws Error(malformed_sealed)

    std::size_t wire_size() const noexcept { return 1 + body.size(); }
};

std::size_t seal_overhead(SealMode mode) noexcept;

// Deterministic: the nonce is derived from key and content, so identical
// input yields identical bytes (and therefore identical tokens).
SealedBuffer seal(const SecurityPolicy& policy, ByteView plaintext,
                  std::size_t max_payload_size = kDefaultMaxPayloadSize);

Bytes open(const SecurityPolicy& policy, const SealedBuffer& sealed);

} // namespace mo
