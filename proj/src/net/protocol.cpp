#include "mo/net/protocol.hpp"

#include <algorithm>

namespace mo::net {

namespace {

template <class F>
Message build(MessageType type, std::uint64_t id, F&& write) {
    Message m{type, id, {}};
    ByteWriter w(m.body);
    write(w);
    return m;
}

ByteReader body_reader(const Message& m, MessageType expected) {
    if (m.type != expected) throw Error(Errc::malformed_message, "unexpected message type");
    return ByteReader(m.body, Errc::malformed_message);
}

void secret_read(ByteReader& r, LocalSecret& s) {
    auto v = r.raw(s.size());
    std::copy(v.begin(), v.end(), s.begin());
}

void ditto_encode_to(ByteWriter& w, const DittoList& d) {
    w.u8(static_cast<std::uint8_t>(std::min<std::size_t>(d.size(), 255)));
    for (std::size_t i = 0; i < d.size() && i < 255; ++i) address_encode_to(w, d[i]);
}

DittoList ditto_read(ByteReader& r) {
    DittoList d(r.u8());
    for (auto& a : d) a = address_read(r);
    return d;
}

} // namespace

void address_encode_to(ByteWriter& out, const Address& a) {
    out.u8(static_cast<std::uint8_t>(a.host().size()));
    out.raw(as_bytes(a.host()));
    out.u16(a.port());
}

Address address_read(ByteReader& in) {
    auto len = in.u8();
    auto host = to_string(in.raw(len));
    auto port = in.u16();
    try {
        return Address(host, port);
    } catch (const Error&) {
        in.fail("bad address");
    }
}

Message FetchRequest::to_message(std::uint64_t id) const {
    return build(MessageType::fetch, id, [&](ByteWriter& w) {
        address_encode_to(w, sender);
        token_encode_to(w, token);
    });
}

FetchRequest FetchRequest::from(const Message& m) {
    auto r = body_reader(m, MessageType::fetch);
    FetchRequest f;
    f.sender = address_read(r);
    f.token = token_read(r);
    r.expect_done();
    return f;
}

Message FetchResponse::to_message(std::uint64_t id) const {
    return build(MessageType::fetch_resp, id, [&](ByteWriter& w) {
        w.u8(static_cast<std::uint8_t>(status));
        ditto_encode_to(w, ditto);
        if (status == FetchStatus::found) distributed_encode_to(w, *part);
    });
}

FetchResponse FetchResponse::from(const Message& m) {
    auto r = body_reader(m, MessageType::fetch_resp);
    FetchResponse f;
    auto status = r.u8();
    if (status > 1) r.fail("bad fetch status");
    f.status = static_cast<FetchStatus>(status);
    f.ditto = ditto_read(r);
    if (f.status == FetchStatus::found) f.part = distributed_read(r);
    r.expect_done();
    return f;
}

Message BusyResponse::to_message(std::uint64_t id) const {
    return build(MessageType::busy, id, [&](ByteWriter& w) {
        token_encode_to(w, token);
        ditto_encode_to(w, ditto);
    });
}

BusyResponse BusyResponse::from(const Message& m) {
    auto r = body_reader(m, MessageType::busy);
    BusyResponse b;
    b.token = token_read(r);
    b.ditto = ditto_read(r);
    r.expect_done();
    return b;
}

Message AssentRequest::to_message(std::uint64_t id) const {
    return build(MessageType::assent, id, [&](ByteWriter& w) {
        address_encode_to(w, sender);
        token_encode_to(w, token);
        digest_encode_to(w, digest);
        token_list_encode_to(w, sample);
    });
}

AssentRequest AssentRequest::from(const Message& m) {
    auto r = body_reader(m, MessageType::assent);
    AssentRequest a;
    a.sender = address_read(r);
    a.token = token_read(r);
    a.digest = digest_read(r);
    a.sample = token_list_read(r);
    r.expect_done();
    return a;
}

Message AssentResponse::to_message(std::uint64_t id) const {
    return build(MessageType::assent_resp, id, [&](ByteWriter& w) {
        w.u8(static_cast<std::uint8_t>(status));
        token_list_encode_to(w, missing);
        digest_encode_to(w, digest);
    });
}

AssentResponse AssentResponse::from(const Message& m) {
    auto r = body_reader(m, MessageType::assent_resp);
    AssentResponse a;
    auto status = r.u8();
    if (status > 2) r.fail("bad assent status");
    a.status = static_cast<AssentStatus>(status);
    a.missing = token_list_read(r);
    a.digest = digest_read(r);
    r.expect_done();
    return a;
}

Message RequestPayload::to_message(std::uint64_t id) const {
    return build(MessageType::request_payload, id, [&](ByteWriter& w) {
        w.raw(secret);
        w.u8(flags);
        token_encode_to(w, token);
    });
}

RequestPayload RequestPayload::from(const Message& m) {
    auto r = body_reader(m, MessageType::request_payload);
    RequestPayload p;
    secret_read(r, p.secret);
    p.flags = r.u8();
    p.token = token_read(r);
    r.expect_done();
    return p;
}

Message AdoptRequest::to_message(std::uint64_t id) const {
    return build(MessageType::adopt, id, [&](ByteWriter& w) {
        w.raw(secret);
        distributed_encode_to(w, part);
    });
}

AdoptRequest AdoptRequest::from(const Message& m) {
    auto r = body_reader(m, MessageType::adopt);
    AdoptRequest a;
    secret_read(r, a.secret);
    a.part = distributed_read(r);
    r.expect_done();
    return a;
}

Message ReplicateRequest::to_message(std::uint64_t id) const {
    return build(MessageType::replicate, id, [&](ByteWriter& w) {
        w.raw(secret);
        token_encode_to(w, token);
        w.u8(start ? 1 : 0);
        w.u8(kind);
        w.u8(level);
        w.u64(sustain_until);
    });
}

ReplicateRequest ReplicateRequest::from(const Message& m) {
    auto r = body_reader(m, MessageType::replicate);
    ReplicateRequest q;
    secret_read(r, q.secret);
    q.token = token_read(r);
    auto start = r.u8();
    if (start > 1) r.fail("bad start flag");
    q.start = start == 1;
    q.kind = r.u8();
    q.level = r.u8();
    q.sustain_until = r.u64();
    r.expect_done();
    return q;
}

Message UpdateRequest::to_message(std::uint64_t id) const {
    return build(MessageType::update, id, [&](ByteWriter& w) {
        w.raw(secret);
        token_encode_to(w, token);
        token_list_encode_to(w, tokens);
    });
}

UpdateRequest UpdateRequest::from(const Message& m) {
    auto r = body_reader(m, MessageType::update);
    UpdateRequest u;
    secret_read(r, u.secret);
    u.token = token_read(r);
    u.tokens = token_list_read(r);
    r.expect_done();
    return u;
}

Message LocalResponse::to_message(std::uint64_t id) const {
    return build(MessageType::local_resp, id, [&](ByteWriter& w) {
        w.u8(static_cast<std::uint8_t>(status));
        w.u8(part ? 1 : 0);
        if (part) distributed_encode_to(w, *part);
    });
}

LocalResponse LocalResponse::from(const Message& m) {
    auto r = body_reader(m, MessageType::local_resp);
    LocalResponse l;
    l.status = static_cast<Errc>(r.u8());
    auto has = r.u8();
    if (has > 1) r.fail("bad part flag");
    if (has) l.part = distributed_read(r);
    r.expect_done();
    return l;
}

Message ErrorBody::to_message(std::uint64_t id) const {
    return build(MessageType::error, id, [&](ByteWriter& w) {
        w.u8(static_cast<std::uint8_t>(code));
        auto n = std::min<std::size_t>(detail.size(), 0xffff);
        w.u16(static_cast<std::uint16_t>(n));
        w.raw(as_bytes(std::string_view(detail).substr(0, n)));
    });
}

ErrorBody ErrorBody::from(const Message& m) {
    auto r = body_reader(m, MessageType::error);
    ErrorBody e;
    e.code = static_cast<Errc>(r.u8());
    auto n = r.u16();
    e.detail = to_string(r.raw(n));
    r.expect_done();
    return e;
}

std::optional<Token> message_token(const Message& m) {
    try {
        switch (m.type) {
        case MessageType::fetch: return FetchRequest::from(m).token;
        case MessageType::fetch_resp: {
            auto f = FetchResponse::from(m);
            if (f.part) return f.part->token;
            return std::nullopt;
        }
        case MessageType::assent: return AssentRequest::from(m).token;
        case MessageType::busy: return BusyResponse::from(m).token;
        case MessageType::request_payload: return RequestPayload::from(m).token;
        case MessageType::adopt: return AdoptRequest::from(m).part.token;
        case MessageType::replicate: return ReplicateRequest::from(m).token;
        case MessageType::update: return UpdateRequest::from(m).token;
        case MessageType::local_resp: {
            auto l = LocalResponse::from(m);
            if (l.part) return l.part->token;
            return std::nullopt;
        }
        default: return std::nullopt;
        }
    } catch (const Error&) {
        return std::nullopt;
    }
}

} // namespace mo::net
