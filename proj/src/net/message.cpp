#include "mo/net/message.hpp"

namespace mo::net {

bool is_known_type(std::uint8_t raw) noexcept {
    switch (raw) {
    case 1: case 2: case 3: case 4: case 5:
    case 16: case 17: case 18: case 19: case 20:
    case 255: return true;
    default: return false;
    }
}

bool is_local_type(MessageType type) noexcept {
    auto raw = static_cast<std::uint8_t>(type);
    return raw >= 16 && raw <= 20;
}

std::string_view message_type_name(MessageType type) noexcept {
    switch (type) {
    case MessageType::fetch: return "FETCH";
    case MessageType::fetch_resp: return "FETCH_RESP";
    case MessageType::assent: return "ASSENT";
    case MessageType::assent_resp: return "ASSENT_RESP";
    case MessageType::busy: return "BUSY";
    case MessageType::request_payload: return "REQUEST_PAYLOAD";
    case MessageType::adopt: return "ADOPT";
    case MessageType::replicate: return "REPLICATE";
    case MessageType::update: return "UPDATE";
    case MessageType::local_resp: return "LOCAL_RESP";
    case MessageType::error: return "ERROR";
    }
    return "UNKNOWN";
}

Bytes encode_message(const Message& m) {
    Bytes out;
    out.reserve(kHeaderSize + m.body.size());
    ByteWriter w(out);
    w.u16(kMagic);
    w.u8(kProtocolVersion);
    w.u8(static_cast<std::uint8_t>(m.type));
    w.u64(m.request_id);
    w.u32(static_cast<std::uint32_t>(m.body.size()));
    w.raw(m.body);
    return out;
}

FrameHeader decode_header(ByteView header) {
    if (header.size() < kHeaderSize) throw Error(Errc::length_mismatch, "short header");
    ByteReader r(header.first(kHeaderSize), Errc::length_mismatch);
    if (r.u16() != kMagic) throw Error(Errc::bad_magic);
    if (r.u8() != kProtocolVersion) throw Error(Errc::bad_version);
    auto raw_type = r.u8();
    if (!is_known_type(raw_type)) throw Error(Errc::unknown_type);
    FrameHeader h{static_cast<MessageType>(raw_type), r.u64(), r.u32()};
    if (h.body_length > kMaxBodySize) throw Error(Errc::length_mismatch, "body too large");
    return h;
}

Message decode_message(ByteView frame) {
    auto h = decode_header(frame);
    if (frame.size() - kHeaderSize != h.body_length) throw Error(Errc::length_mismatch);
    auto body = frame.subspan(kHeaderSize, h.body_length);
    return Message{h.type, h.request_id, Bytes(body.begin(), body.end())};
}

} // namespace mo::net
