#include "mo/server/store_file.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "mo/net/protocol.hpp"

namespace mo {

namespace {

constexpr std::uint32_t kStoreMagic = 0x4D4F5354; // "MOST"
constexpr std::uint8_t kStoreVersion = 1;

} // namespace

Bytes store_encode(const std::vector<StoreRecord>& records) {
    Bytes out;
    ByteWriter w(out);
    w.u32(kStoreMagic);
    w.u8(kStoreVersion);
    w.u32(static_cast<std::uint32_t>(records.size()));
    for (const auto& r : records) {
        distributed_encode_to(w, r.part);
        w.u8(r.adopted ? 1 : 0);
        w.u64(r.adopted_at);
        w.u8(static_cast<std::uint8_t>(r.policies.size()));
        for (const auto& p : r.policies) {
            w.u8(static_cast<std::uint8_t>(p.kind));
            w.u8(p.level);
            w.u64(p.sustain_until ? p.sustain_until->millis : 0);
        }
        w.u32(static_cast<std::uint32_t>(r.peers.size()));
        for (const auto& [addr, last] : r.peers) {
            net::address_encode_to(w, addr);
            w.u64(last);
        }
    }
    return out;
}

std::vector<StoreRecord> store_decode(ByteView bytes) {
    ByteReader in(bytes, Errc::malformed_message);
    if (in.u32() != kStoreMagic) in.fail("not a store file");
    if (in.u8() != kStoreVersion) in.fail("unsupported store version");
    auto count = in.u32();
    std::vector<StoreRecord> out;
    for (std::uint32_t i = 0; i < count; ++i) {
        StoreRecord r;
        r.part = distributed_read(in);
        r.adopted = in.u8() != 0;
        r.adopted_at = in.u64();
        auto policies = in.u8();
        for (unsigned k = 0; k < policies; ++k) {
            auto kind = policy_kind_from(in.u8());
            if (!kind) in.fail("unknown policy kind");
            ReplicationPolicy p{*kind, in.u8(), std::nullopt};
            if (auto until = in.u64()) p.sustain_until = ExpireDate{until};
            r.policies.push_back(p);
        }
        auto peers = in.u32();
        for (std::uint32_t k = 0; k < peers; ++k) {
            auto addr = net::address_read(in);
            r.peers[addr] = in.u64();
        }
        out.push_back(std::move(r));
    }
    in.expect_done();
    return out;
}

void store_save(const std::string& path, const std::vector<StoreRecord>& records) {
    auto bytes = store_encode(records);
    const auto tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        f.flush();
        if (!f) throw Error(Errc::bad_config, "cannot write " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error(Errc::bad_config, "cannot replace " + path);
}

std::vector<StoreRecord> store_load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return {};
    Bytes bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return store_decode(bytes);
}

std::string store_dump(const std::vector<StoreRecord>& records) {
    std::ostringstream out;
    for (const auto& r : records) {
        out << to_hex(token_encode(r.part.token)) << " payload="
            << (r.part.payload ? to_hex(*r.part.payload) : std::string("-")) << " cluster=[";
        bool first = true;
        for (const auto& t : r.part.cluster) {
            out << (first ? "" : ",") << token_prefix(t);
            first = false;
        }
        out << "] adopted=" << r.adopted << " policies=" << r.policies.size() << " peers=" << r.peers.size()
            << '\n';
    }
    return out.str();
}

} // namespace mo
