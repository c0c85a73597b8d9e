#include "mo/core/hash.hpp"

#include <cstring>
#include <mutex>

#include <sodium.h>

namespace mo {

static_assert(sizeof(crypto_hash_sha256_state) <= 128);

void ensure_crypto_ready() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
    });
}

TokenHasher::TokenHasher() {
    ensure_crypto_ready();
    crypto_hash_sha256_init(reinterpret_cast<crypto_hash_sha256_state*>(state_.data()));
}

TokenHasher::~TokenHasher() { sodium_memzero(state_.data(), state_.size()); }

void TokenHasher::update(ByteView data) {
    crypto_hash_sha256_update(reinterpret_cast<crypto_hash_sha256_state*>(state_.data()), data.data(),
                              data.size());
}

Digest TokenHasher::finish() {
    Digest out{};
    crypto_hash_sha256_final(reinterpret_cast<crypto_hash_sha256_state*>(state_.data()), out.data());
    return out;
}

Digest hash_bytes(ByteView data) {
    TokenHasher h;
    h.update(data);
    return h.finish();
}

} // namespace mo
