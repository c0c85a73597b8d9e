#include "mo/mobject/micro_object.hpp"

namespace mo {

void distributed_encode_to(ByteWriter& out, const DistributedPart& part) {
    token_encode_to(out, part.token);
    if (part.payload) {
        out.u32(static_cast<std::uint32_t>(part.payload->size()));
        out.raw(*part.payload);
    } else {
        out.u32(0);
    }
    cluster_encode_to(out, part.cluster);
}

Bytes distributed_encode(const DistributedPart& part) {
    Bytes out;
    ByteWriter w(out);
    distributed_encode_to(w, part);
    return out;
}

DistributedPart distributed_read(ByteReader& in) {
    DistributedPart part;
    part.token = token_read(in);
    auto len = in.u32();
    if (len > 0) {
        auto bytes = in.raw(len);
        part.payload = Bytes(bytes.begin(), bytes.end());
    }
    part.cluster = cluster_read(in);
    return part;
}

DistributedPart distributed_decode(ByteView bytes) {
    ByteReader r(bytes, Errc::malformed_message);
    auto part = distributed_read(r);
    r.expect_done();
    return part;
}

MicroObject mo_new(const HomeLocation& home, ExpireDate expire, ByteView plaintext, const SecurityPolicy& psec,
                   const SecurityPolicy& csec, AuxTag aux, std::size_t max_payload_size) {
    if (!expire.valid()) throw Error(Errc::invalid_expire);
    auto sealed = seal(psec, plaintext, max_payload_size).to_bytes();
    MicroObject mo;
    mo.dist.token = token_create(home, expire, aux, sealed, max_payload_size);
    mo.dist.payload = std::move(sealed);
    mo.psec = psec;
    mo.csec = csec;
    return mo;
}

MicroObject mo_from_token(const Token& token, const SecurityPolicy& psec, const SecurityPolicy& csec) {
    if (!token.home.valid() || !token.expire.valid() || token.version != kTokenVersion)
        throw Error(Errc::malformed_token);
    MicroObject mo;
    mo.dist.token = token;
    mo.psec = psec;
    mo.csec = csec;
    return mo;
}

MicroObject mo_from_token(ByteView token_bytes, const SecurityPolicy& psec, const SecurityPolicy& csec) {
    return mo_from_token(token_decode(token_bytes), psec, csec);
}

void mo_attach_payload(MicroObject& mo, Bytes sealed) {
    if (!token_verify(mo.dist.token, sealed)) throw Error(Errc::verify_failed);
    mo.dist.payload = std::move(sealed);
}

Bytes mo_plaintext(const MicroObject& mo) {
    if (!mo.dist.payload) throw Error(Errc::payload_absent);
    SealedBuffer sealed;
    try {
        sealed = SealedBuffer::from_bytes(*mo.dist.payload);
    } catch (const Error&) {
        throw Error(Errc::authentication_failure, "unreadable sealed payload");
    }
    return open(mo.psec, sealed);
}

} // namespace mo
