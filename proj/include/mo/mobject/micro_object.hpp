#pragma once

#include <optional>

#include "mo/cluster/cluster.hpp"
#include "mo/mobject/replication.hpp"
#include "mo/security/seal.hpp"

namespace mo {

// The part of a micro object that is copied between servers: token, the
// sealed payload (absent in a token-only copy) and the cluster.
struct DistributedPart {
    Token token;
    std::optional<Bytes> payload; // sealed bytes; token_verify holds when present
    Cluster cluster;

    friend bool operator==(const DistributedPart&, const DistributedPart&) = default;
};

// token || payload_len(4) || sealed payload || cluster. A length of zero
// marks an absent payload; a sealed buffer is never empty.
void distributed_encode_to(ByteWriter& out, const DistributedPart& part);
Bytes distributed_encode(const DistributedPart& part);
DistributedPart distributed_read(ByteReader& in);
DistributedPart distributed_decode(ByteView bytes);

struct MicroObject {
    DistributedPart dist;
    SecurityPolicy psec;
    SecurityPolicy csec;
    ReplicationData repl;

    const Token& token() const noexcept { return dist.token; }
    bool has_payload() const noexcept { return dist.payload.has_value(); }
};

MicroObject mo_new(const HomeLocation& home, ExpireDate expire, ByteView plaintext, const SecurityPolicy& psec,
                   const SecurityPolicy& csec, AuxTag aux = 0,
                   std::size_t max_payload_size = kDefaultMaxPayloadSize);

MicroObject mo_from_token(const Token& token, const SecurityPolicy& psec, const SecurityPolicy& csec);
MicroObject mo_from_token(ByteView token_bytes, const SecurityPolicy& psec, const SecurityPolicy& csec);

// Installs fetched sealed bytes; throws Error(verify_failed) if they do not
// hash to the token.
void mo_attach_payload(MicroObject& mo, Bytes sealed);

// Throws payload_absent, or authentication_failure for a bogus object.
Bytes mo_plaintext(const MicroObject& mo);

} // namespace mo
