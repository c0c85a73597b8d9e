#include "mo/security/seal.hpp"

#include <sodium.h>

#include "mo/core/hash.hpp"

namespace mo {

namespace {

using Tag = std::array<std::uint8_t, kTagSize>;

Tag hmac(const SecretKey& key, ByteView a, ByteView b = {}) {
    crypto_auth_hmacsha256_state st;
    crypto_auth_hmacsha256_init(&st, key.data(), key.size());
    crypto_auth_hmacsha256_update(&st, a.data(), a.size());
    crypto_auth_hmacsha256_update(&st, b.data(), b.size());
    Tag out{};
    crypto_auth_hmacsha256_final(&st, out.data());
    sodium_memzero(&st, sizeof st);
    return out;
}

struct DerivedKeys {
    SecretKey enc{};
    SecretKey mac{};
    ~DerivedKeys() {
        sodium_memzero(enc.data(), enc.size());
        sodium_memzero(mac.data(), mac.size());
    }
};

DerivedKeys derive(const SecretKey& key) {
    DerivedKeys k;
    k.enc = hmac(key, as_bytes("mo-seal-enc"));
    k.mac = hmac(key, as_bytes("mo-seal-mac"));
    return k;
}

void xor_stream(Bytes& out, ByteView in, ByteView nonce, const SecretKey& key) {
    std::size_t base = out.size();
    out.resize(base + in.size());
    crypto_stream_xchacha20_xor(out.data() + base, in.data(), in.size(), nonce.data(), key.data());
}

const SecretKey& require_key(const SecurityPolicy& p) {
    if (!p.key()) throw Error(Errc::invalid_policy, "key required");
    return *p.key();
}

} // namespace

SecurityPolicy::SecurityPolicy(SealMode mode, const SecretKey& key) : mode_(mode) {
    if (mode != SealMode::none) key_ = key;
}

bool is_authenticating(SealMode mode) noexcept {
    return mode == SealMode::authenticate || mode == SealMode::encrypt_authenticate;
}

std::optional<SealMode> seal_mode_from(std::uint8_t raw) noexcept {
    if (raw > 3) return std::nullopt;
    return static_cast<SealMode>(raw);
}

std::size_t seal_overhead(SealMode mode) noexcept {
    switch (mode) {
    case SealMode::none: return 1;
    case SealMode::encrypt: return 1 + kNonceSize;
    case SealMode::authenticate:
    case SealMode::encrypt_authenticate: return 1 + kTagSize;
    }
    return 1;
}

Bytes SealedBuffer::to_bytes() const {
    Bytes out;
    out.reserve(wire_size());
    out.push_back(static_cast<std::uint8_t>(mode));
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

SealedBuffer SealedBuffer::from_bytes(ByteView bytes) {
    if (bytes.empty()) throw Error(Errc::malformed_sealed, "empty");
    auto mode = seal_mode_from(bytes[0]);
    if (!mode) throw Error(Errc::malformed_sealed, "unknown mode tag");
    return SealedBuffer{*mode, Bytes(bytes.begin() + 1, bytes.end())};
}

SealedBuffer seal(const SecurityPolicy& policy, ByteView plaintext, std::size_t max_payload_size) {
    ensure_crypto_ready();
    if (plaintext.size() + seal_overhead(policy.mode()) > max_payload_size) throw Error(Errc::oversize_after_seal);
    SealedBuffer out{policy.mode(), {}};
    if (policy.mode() == SealMode::none) {
        out.body.assign(plaintext.begin(), plaintext.end());
        return out;
    }
    auto keys = derive(require_key(policy));
    switch (policy.mode()) {
    case SealMode::authenticate: {
        auto tag = hmac(keys.mac, plaintext);
        out.body.assign(tag.begin(), tag.end());
        out.body.insert(out.body.end(), plaintext.begin(), plaintext.end());
        break;
    }
    case SealMode::encrypt: {
        auto nonce_src = hmac(keys.mac, as_bytes("nonce"), plaintext);
        ByteView nonce(nonce_src.data(), kNonceSize);
        out.body.assign(nonce.begin(), nonce.end());
        xor_stream(out.body, plaintext, nonce, keys.enc);
        break;
    }
    case SealMode::encrypt_authenticate: {
        // Synthetic IV: the authentication tag doubles as the nonce source.
        auto tag = hmac(keys.mac, plaintext);
        out.body.assign(tag.begin(), tag.end());
        xor_stream(out.body, plaintext, ByteView(tag.data(), kNonceSize), keys.enc);
        break;
    }
    case SealMode::none: break;
    }
    return out;
}

Bytes open(const SecurityPolicy& policy, const SealedBuffer& sealed) {
    ensure_crypto_ready();
    if (sealed.mode != policy.mode()) throw Error(Errc::mode_mismatch);
    if (policy.mode() == SealMode::none) return sealed.body;
    auto keys = derive(require_key(policy));
    ByteView body(sealed.body);
    switch (policy.mode()) {
    case SealMode::authenticate: {
        if (body.size() < kTagSize) throw Error(Errc::authentication_failure, "short body");
        auto plaintext = body.subspan(kTagSize);
        auto tag = hmac(keys.mac, plaintext);
        if (sodium_memcmp(tag.data(), body.data(), kTagSize) != 0) throw Error(Errc::authentication_failure);
        return Bytes(plaintext.begin(), plaintext.end());
    }
    case SealMode::encrypt: {
        if (body.size() < kNonceSize) throw Error(Errc::malformed_sealed, "short body");
        Bytes plaintext;
        xor_stream(plaintext, body.subspan(kNonceSize), body.first(kNonceSize), keys.enc);
        return plaintext;
    }
    case SealMode::encrypt_authenticate: {
        if (body.size() < kTagSize) throw Error(Errc::authentication_failure, "short body");
        Bytes plaintext;
        xor_stream(plaintext, body.subspan(kTagSize), body.first(kNonceSize), keys.enc);
        auto tag = hmac(keys.mac, plaintext);
        if (sodium_memcmp(tag.data(), body.data(), kTagSize) != 0) {
            sodium_memzero(plaintext.data(), plaintext.size());
            throw Error(Errc::authentication_failure);
        }
        return plaintext;
    }
    case SealMode::none: break;
    }
    return {};
}

} // namespace mo
