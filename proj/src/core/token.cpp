#include "mo/core/token.hpp"

#include <algorithm>
#include <charconv>

namespace mo {

namespace {

std::string canonical_host(std::string_view host) {
    if (!host.empty() && host.back() == '.') host.remove_suffix(1);
    std::string out(host);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
    });
    return out;
}

void write_home(ByteWriter& w, const HomeLocation& home) {
    w.u8(static_cast<std::uint8_t>(home.host().size()));
    w.raw(as_bytes(home.host()));
    w.u16(home.port());
}

} // namespace

HomeLocation::HomeLocation(std::string_view host, std::uint16_t port)
    : host_(canonical_host(host)), port_(port) {
    if (host_.empty()) throw Error(Errc::invalid_home, "empty host");
    if (host_.size() > 255) throw Error(Errc::invalid_home, "host longer than 255 bytes");
    if (port_ == 0) throw Error(Errc::invalid_home, "port must be 1-65535");
}

HomeLocation HomeLocation::parse(std::string_view text) {
    auto colon = text.rfind(':');
    if (colon == std::string_view::npos) throw Error(Errc::invalid_home, std::string(text));
    auto host = text.substr(0, colon);
    auto port_text = text.substr(colon + 1);
    unsigned port = 0;
    auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port == 0 || port > 65535)
        throw Error(Errc::invalid_home, std::string(text));
    if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
    return HomeLocation(host, static_cast<std::uint16_t>(port));
}

std::string HomeLocation::to_string() const {
    if (host_.find(':') != std::string::npos) return "[" + host_ + "]:" + std::to_string(port_);
    return host_ + ":" + std::to_string(port_);
}

Payload::Payload(Bytes bytes, std::size_t max_size) {
    if (bytes.size() > max_size) throw Error(Errc::payload_too_large);
    data_ = std::make_shared<const Bytes>(std::move(bytes));
}

namespace {

Digest compute_hash(std::uint8_t version, const HomeLocation& home, ExpireDate expire, AuxTag aux,
                    ByteView payload) {
    Bytes header;
    header.reserve(1 + 1 + home.host().size() + 2 + 8 + 2);
    ByteWriter w(header);
    w.u8(version);
    write_home(w, home);
    w.u64(expire.millis);
    w.u16(aux);
    TokenHasher h;
    h.update(header);
    h.update(payload);
    return h.finish();
}

} // namespace

Token token_create(const HomeLocation& home, ExpireDate expire, AuxTag aux, ByteView payload,
                   std::size_t max_payload_size) {
    if (!home.valid()) throw Error(Errc::invalid_home);
    if (!expire.valid()) throw Error(Errc::invalid_expire);
    if (payload.size() > max_payload_size) throw Error(Errc::payload_too_large);
    Token t;
    t.version = kTokenVersion;
    t.home = home;
    t.expire = expire;
    t.aux = aux;
    t.hash = compute_hash(t.version, home, expire, aux, payload);
    return t;
}

bool token_verify(const Token& token, ByteView payload) {
    if (!token.home.valid() || !token.expire.valid()) return false;
    return compute_hash(token.version, token.home, token.expire, token.aux, payload) == token.hash;
}

void token_encode_to(ByteWriter& w, const Token& t) {
    w.u8(t.version);
    write_home(w, t.home);
    w.u64(t.expire.millis);
    w.u16(t.aux);
    w.raw(t.hash);
}

Bytes token_encode(const Token& t) {
    Bytes out;
    out.reserve(token_encoded_size(t));
    ByteWriter w(out);
    token_encode_to(w, t);
    return out;
}

std::size_t token_encoded_size(const Token& t) noexcept { return 1 + 1 + t.home.host().size() + 2 + 8 + 2 + 32; }

Token token_read(ByteReader& in) {
    Token t;
    t.version = in.u8();
    if (t.version != kTokenVersion) in.fail("unsupported token version");
    auto host_len = in.u8();
    if (host_len == 0) in.fail("empty host");
    auto host = to_string(in.raw(host_len));
    auto port = in.u16();
    if (port == 0) in.fail("zero port");
    t.expire.millis = in.u64();
    if (!t.expire.valid()) in.fail("zero expire");
    t.aux = in.u16();
    auto hash = in.raw(32);
    std::copy(hash.begin(), hash.end(), t.hash.begin());
    try {
        t.home = HomeLocation(host, port);
    } catch (const Error&) {
        in.fail("bad host");
    }
    // Only canonical hosts are accepted so that encoding stays one-to-one.
    if (t.home.host() != host) in.fail("non-canonical host");
    return t;
}

Token token_decode(ByteView bytes) {
    if (bytes.empty()) throw Error(Errc::malformed_token, "empty buffer");
    ByteReader r(bytes, Errc::malformed_token);
    Token t = token_read(r);
    r.expect_done();
    return t;
}

std::strong_ordering token_order(const Token& a, const Token& b) {
    if (auto c = a.expire <=> b.expire; c != 0) return c;
    if (auto c = std::lexicographical_compare_three_way(a.hash.begin(), a.hash.end(), b.hash.begin(), b.hash.end());
        c != 0)
        return c;
    if (a == b) return std::strong_ordering::equal;
    auto ea = token_encode(a);
    auto eb = token_encode(b);
    return std::lexicographical_compare_three_way(ea.begin(), ea.end(), eb.begin(), eb.end());
}

std::string token_prefix(const Token& token) { return to_hex(ByteView(token.hash).first(4)); }

} // namespace mo
