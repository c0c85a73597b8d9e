#pragma once

#include <array>
#include <cstdint>

#include "mo/core/bytes.hpp"

namespace mo {

using Digest = std::array<std::uint8_t, 32>;

// The systemwide token digest. SHA-256; changing it changes every token.
class TokenHasher {
public:
    TokenHasher();
    TokenHasher(const TokenHasher&) = delete;
    TokenHasher& operator=(const TokenHasher&) = delete;
    ~TokenHasher();

    void update(ByteView data);
    Digest finish();

private:
    alignas(16) std::array<std::uint8_t, 128> state_{};
};

Digest hash_bytes(ByteView data);

// Must be called before any libsodium primitive; idempotent and thread-safe.
void ensure_crypto_ready();

} // namespace mo
