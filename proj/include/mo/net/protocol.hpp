#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mo/cluster/digest.hpp"
#include "mo/mobject/micro_object.hpp"
#include "mo/net/message.hpp"

// Typed bodies for every message type. Remote requests carry the sender's
// server address so the receiver can build ditto lists and learn peers; local
// requests start with the 32-byte channel secret. No body carries security
// policies, keys or replication data.
namespace mo::net {

using LocalSecret = std::array<std::uint8_t, 32>;
using DittoList = std::vector<Address>;

void address_encode_to(ByteWriter& out, const Address& a);
Address address_read(ByteReader& in);

struct FetchRequest {
    Address sender;
    Token token;

    Message to_message(std::uint64_t id) const;
    static FetchRequest from(const Message& m);
};

enum class FetchStatus : std::uint8_t { found = 0, not_found = 1 };

struct FetchResponse {
    FetchStatus status = FetchStatus::not_found;
    DittoList ditto;
    std::optional<DistributedPart> part; // present iff found

    Message to_message(std::uint64_t id) const;
    static FetchResponse from(const Message& m);
};

struct BusyResponse {
    Token token;
    DittoList ditto;

    Message to_message(std::uint64_t id) const;
    static BusyResponse from(const Message& m);
};

struct AssentRequest {
    Address sender;
    Token token;
    ClusterDigest digest;
    std::vector<Token> sample; // tokens the sender holds; the receiver merges them

    Message to_message(std::uint64_t id) const;
    static AssentRequest from(const Message& m);
};

enum class AssentStatus : std::uint8_t { ok = 0, not_found = 1, declined = 2 };

struct AssentResponse {
    AssentStatus status = AssentStatus::ok;
    std::vector<Token> missing; // tokens the sender appears to lack
    ClusterDigest digest;       // receiver's cluster after merging

    Message to_message(std::uint64_t id) const;
    static AssentResponse from(const Message& m);
};

inline constexpr std::uint8_t kClusterOnly = 0x01; // do not insist on the payload
inline constexpr std::uint8_t kLocalOnly = 0x02;   // never contact other servers

struct RequestPayload {
    LocalSecret secret{};
    std::uint8_t flags = 0;
    Token token;

    Message to_message(std::uint64_t id) const;
    static RequestPayload from(const Message& m);
};

struct AdoptRequest {
    LocalSecret secret{};
    DistributedPart part;

    Message to_message(std::uint64_t id) const;
    static AdoptRequest from(const Message& m);
};

struct ReplicateRequest {
    LocalSecret secret{};
    Token token;
    bool start = true;
    std::uint8_t kind = 1; // raw PolicyKind; validated by the server
    std::uint8_t level = 0;
    std::uint64_t sustain_until = 0; // 0 = none

    Message to_message(std::uint64_t id) const;
    static ReplicateRequest from(const Message& m);
};

struct UpdateRequest {
    LocalSecret secret{};
    Token token;
    std::vector<Token> tokens;

    Message to_message(std::uint64_t id) const;
    static UpdateRequest from(const Message& m);
};

struct LocalResponse {
    Errc status = Errc::ok;
    std::optional<DistributedPart> part;

    Message to_message(std::uint64_t id) const;
    static LocalResponse from(const Message& m);
};

struct ErrorBody {
    Errc code = Errc::protocol_error;
    std::string detail;

    Message to_message(std::uint64_t id) const;
    static ErrorBody from(const Message& m);
};

// Best-effort extraction of the token a message is about; used for traces.
std::optional<Token> message_token(const Message& m);

} // namespace mo::net
