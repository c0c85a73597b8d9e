#include <gtest/gtest.h>

#include "mo/net/message.hpp"
#include "mo/net/protocol.hpp"

#include "expect_errc.hpp"
#include "generators.hpp"

namespace mo::net {
namespace {

using testing::Gen;

const MessageType kTypes[] = {MessageType::fetch,           MessageType::fetch_resp, MessageType::assent,
                              MessageType::assent_resp,     MessageType::busy,       MessageType::request_payload,
                              MessageType::adopt,           MessageType::replicate,  MessageType::update,
                              MessageType::local_resp,      MessageType::error};

TEST(Frame, HeaderLayoutIsBitExact) {
    Message m{MessageType::assent, 0x0102030405060708, {0xAA, 0xBB}};
    auto f = encode_message(m);
    Bytes expected = {0x4D, 0x4F, 1, 3, 1, 2, 3, 4, 5, 6, 7, 8, 0, 0, 0, 2, 0xAA, 0xBB};
    EXPECT_EQ(f, expected);
}

TEST(Frame, RoundtripEveryType) {
    Gen g(1);
    for (auto t : kTypes) {
        for (int i = 0; i < 50; ++i) {
            Message m{t, g.u64(), g.bytes(0, 500)};
            ASSERT_EQ(decode_message(encode_message(m)), m);
        }
    }
}

TEST(Frame, StructuredErrors) {
    auto f = encode_message(Message{MessageType::fetch, 1, {1, 2, 3}});
    auto bad = f;
    bad[0] = 0;
    EXPECT_ERRC(decode_message(bad), Errc::bad_magic);
    bad = f;
    bad[2] = 2;
    EXPECT_ERRC(decode_message(bad), Errc::bad_version);
    bad = f;
    bad[3] = 7;
    EXPECT_ERRC(decode_message(bad), Errc::unknown_type);
    bad = f;
    bad.pop_back();
    EXPECT_ERRC(decode_message(bad), Errc::length_mismatch);
    bad = f;
    bad.push_back(0);
    EXPECT_ERRC(decode_message(bad), Errc::length_mismatch);
    EXPECT_ERRC(decode_message(Bytes{}), Errc::length_mismatch);
    bad = f;
    bad[12] = 0x7F; // body length far beyond the cap
    EXPECT_ERRC(decode_message(bad), Errc::length_mismatch);
}

TEST(Frame, EveryTruncationIsLengthMismatch) {
    auto f = encode_message(Message{MessageType::busy, 99, Bytes(40, 1)});
    for (std::size_t cut = 0; cut < f.size(); ++cut) {
        try {
            decode_message(ByteView(f.data(), cut));
            FAIL() << cut;
        } catch (const Error& e) {
            ASSERT_EQ(e.code(), Errc::length_mismatch) << cut;
        }
    }
}

TEST(Frame, LocalTypes) {
    for (auto t : kTypes) {
        auto raw = static_cast<int>(t);
        EXPECT_EQ(is_local_type(t), raw >= 16 && raw <= 20);
    }
}

// Random buffers, plus mutations of valid frames, through the frame decoder
// and every typed body parser. Only mo::Error may escape.
TEST(Frame, FuzzNeverCrashes) {
    Gen g(2);
    std::size_t parsed = 0, rejected = 0;
    auto seed_frame = [&] {
        auto t = g.token();
        switch (g.range(0, 3)) {
        case 0: return encode_message(FetchRequest{t.home, t}.to_message(g.u64()));
        case 1: return encode_message(AssentRequest{t.home, t, {}, {t}}.to_message(g.u64()));
        case 2: return encode_message(UpdateRequest{{}, t, {t, t}}.to_message(g.u64()));
        default: return encode_message(ErrorBody{Errc::timeout, "x"}.to_message(g.u64()));
        }
    };
    for (int i = 0; i < 10'000; ++i) {
        Bytes buf;
        if (g.coin(0.3)) {
            buf = g.bytes(0, 120);
        } else {
            buf = seed_frame();
            auto flips = g.range(0, 4);
            for (std::uint64_t k = 0; k < flips; ++k) buf[g.range(0, buf.size() - 1)] = static_cast<std::uint8_t>(g.u64());
            if (g.coin(0.2)) buf.resize(g.range(0, buf.size()));
        }
        try {
            auto m = decode_message(buf);
            ++parsed;
            try {
                switch (m.type) {
                case MessageType::fetch: FetchRequest::from(m); break;
                case MessageType::fetch_resp: FetchResponse::from(m); break;
                case MessageType::assent: AssentRequest::from(m); break;
                case MessageType::assent_resp: AssentResponse::from(m); break;
                case MessageType::busy: BusyResponse::from(m); break;
                case MessageType::request_payload: RequestPayload::from(m); break;
                case MessageType::adopt: AdoptRequest::from(m); break;
                case MessageType::replicate: ReplicateRequest::from(m); break;
                case MessageType::update: UpdateRequest::from(m); break;
                case MessageType::local_resp: LocalResponse::from(m); break;
                case MessageType::error: ErrorBody::from(m); break;
                }
            } catch (const Error&) {
            }
        } catch (const Error&) {
            ++rejected;
        }
    }
    EXPECT_EQ(parsed + rejected, 10'000u);
    EXPECT_GT(parsed, 0u);
    EXPECT_GT(rejected, 0u);
}

TEST(Bodies, RoundtripEveryType) {
    Gen g(3);
    auto t = g.token();
    Cluster c = testing::cluster_of(g.tokens(5));
    DistributedPart part{t, g.bytes(1, 30), c};
    LocalSecret secret;
    secret.fill(9);

    auto fr = FetchRequest::from(FetchRequest{t.home, t}.to_message(1));
    EXPECT_EQ(fr.token, t);
    EXPECT_EQ(fr.sender, t.home);

    auto resp = FetchResponse::from(FetchResponse{FetchStatus::found, {t.home}, part}.to_message(2));
    EXPECT_EQ(resp.status, FetchStatus::found);
    EXPECT_EQ(resp.part, part);
    EXPECT_EQ(resp.ditto, DittoList{t.home});
    auto nf = FetchResponse::from(FetchResponse{FetchStatus::not_found, {}, std::nullopt}.to_message(2));
    EXPECT_FALSE(nf.part);

    auto busy = BusyResponse::from(BusyResponse{t, {t.home, HomeLocation("x", 1)}}.to_message(3));
    EXPECT_EQ(busy.ditto.size(), 2u);

    std::vector<Token> sample(c.begin(), c.end());
    auto ar = AssentRequest::from(AssentRequest{t.home, t, cluster_digest(c), sample}.to_message(4));
    EXPECT_EQ(ar.digest, cluster_digest(c));
    EXPECT_EQ(ar.sample, sample);

    auto as = AssentResponse::from(AssentResponse{AssentStatus::declined, sample, cluster_digest(c)}.to_message(5));
    EXPECT_EQ(as.status, AssentStatus::declined);
    EXPECT_EQ(as.missing, sample);

    auto rp = RequestPayload::from(RequestPayload{secret, kClusterOnly, t}.to_message(6));
    EXPECT_EQ(rp.secret, secret);
    EXPECT_EQ(rp.flags, kClusterOnly);

    auto ad = AdoptRequest::from(AdoptRequest{secret, part}.to_message(7));
    EXPECT_EQ(ad.part, part);

    auto rr = ReplicateRequest::from(ReplicateRequest{secret, t, false, 2, 0, 777}.to_message(8));
    EXPECT_FALSE(rr.start);
    EXPECT_EQ(rr.kind, 2);
    EXPECT_EQ(rr.sustain_until, 777u);

    auto up = UpdateRequest::from(UpdateRequest{secret, t, sample}.to_message(9));
    EXPECT_EQ(up.tokens, sample);

    auto lr = LocalResponse::from(LocalResponse{Errc::unknown_object, std::nullopt}.to_message(10));
    EXPECT_EQ(lr.status, Errc::unknown_object);

    auto eb = ErrorBody::from(ErrorBody{Errc::untrusted_channel, "nope"}.to_message(11));
    EXPECT_EQ(eb.code, Errc::untrusted_channel);
    EXPECT_EQ(eb.detail, "nope");

    EXPECT_ERRC(FetchRequest::from(Message{MessageType::assent, 1, {}}), Errc::malformed_message);
    EXPECT_EQ(message_token(FetchRequest{t.home, t}.to_message(1)), t);
}

} // namespace
} // namespace mo::net
