#include <future>
#include <mutex>
#include <thread>

#include <gtest/gtest.h>

#include "mo/libserver/session.hpp"
#include "mo/net/protocol.hpp"
#include "mo/net/tcp.hpp"
#include "mo/scenario/testbed.hpp"
#include "mo/server/server.hpp"

#include "expect_errc.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "sim_helpers.hpp"

namespace mo {
namespace {

using scenario::Testbed;
using namespace std::chrono_literals;

ExpireDate in(Testbed& tb, std::uint64_t ms) { return ExpireDate{tb.sim().now_ms() + ms}; }
std::vector<Token> members(const Cluster& c) { return {c.begin(), c.end()}; }

SecretKey key(std::uint8_t fill) {
    SecretKey k;
    k.fill(fill);
    return k;
}

ServerConfig quiet() {
    ServerConfig c;
    c.flood_interval_ms = 0;
    c.gc_interval_ms = 0;
    return c;
}

// ---- simulated sessions ----------------------------------------------------

TEST(LibCreate, HomeIsLocalServer) {
    Testbed tb;
    tb.add_server("bob", quiet());
    auto n1 = tb.session("bob").create_new(in(tb, 60'000), as_bytes("N1"), {}, {});
    EXPECT_EQ(n1.home, tb.address("bob"));
    EXPECT_TRUE(tb.server("bob").in_store(n1));
    EXPECT_TRUE(tb.session("bob").has_payload(n1));
}

TEST(LibCreate, OversizeFailsBeforeTraffic) {
    Testbed tb;
    tb.add_server("bob", quiet());
    tb.sim().clear_trace();
    EXPECT_ERRC(tb.session("bob").create_new(in(tb, 1000), Bytes(kDefaultMaxPayloadSize), {}, {}),
                Errc::oversize_after_seal);
    EXPECT_TRUE(tb.sim().trace().empty());
}

TEST(LibCreate, IdenticalCreatesAreIdempotent) {
    Testbed tb;
    tb.add_server("bob", quiet());
    auto e = in(tb, 60'000);
    auto a = tb.session("bob").create_new(e, as_bytes("same"), {}, {});
    auto b = tb.session("bob").create_new(e, as_bytes("same"), {}, {});
    EXPECT_EQ(a, b);
    EXPECT_EQ(tb.server("bob").export_store().size(), 1u);
}

TEST(LibCreate, EncryptedClusterPolicyUnsupported) {
    Testbed tb;
    tb.add_server("bob", quiet());
    EXPECT_ERRC(tb.session("bob").create_new(in(tb, 1000), as_bytes("x"), {}, SecurityPolicy(SealMode::encrypt, key(1))),
                Errc::unsupported_policy);
}

TEST(LibCreate, DisconnectedWhenServerGone) {
    Testbed tb;
    tb.add_server("bob", quiet());
    tb.sim().set_online(tb.address("bob"), false);
    EXPECT_ERRC(tb.session("bob").create_new(in(tb, 1000), as_bytes("x"), {}, {}), Errc::disconnected);
}

TEST(LibCluster, AddOnceAndTokenOnlyParent) {
    Testbed tb;
    tb.add_server("alice", quiet());
    tb.add_server("bob", quiet());
    auto m = tb.session("alice").create_new(in(tb, 60'000), as_bytes("M"), {}, {});
    auto& bob = tb.session("bob");
    bob.create_copy(m, {}, {});
    tb.sim().set_online(tb.address("alice"), false); // bob can only hold the token
    auto n1 = bob.create_new(in(tb, 60'000), as_bytes("N1"), {}, {});
    bob.add_to_cluster(m, n1);
    bob.add_to_cluster(m, n1);
    EXPECT_EQ(members(bob.get_cluster(m)), std::vector<Token>{n1});
    EXPECT_EQ(members(tb.server("bob").find(m)->cluster), std::vector<Token>{n1});
    EXPECT_FALSE(bob.has_payload(m));
}

TEST(LibRepl, ForwardsAndValidates) {
    Testbed tb;
    for (auto n : {"alice", "bob", "clare"}) tb.add_server(n, quiet());
    auto m = tb.session("alice").create_new(in(tb, 60'000), as_bytes("M"), {}, {});
    for (auto n : {"alice", "bob", "clare"}) {
        tb.session(n).create_copy(m, {}, {});
        tb.session(n).put_repl(m, ReplicationPolicy::flooding(0));
        EXPECT_EQ(tb.server(n).policies(m), std::vector<ReplicationPolicy>{ReplicationPolicy::flooding(0)});
        EXPECT_EQ(tb.session(n).snapshot(m).repl.policies().size(), 1u);
    }
    tb.session("bob").stop_repl(m, PolicyKind::flooding);
    EXPECT_NO_THROW(tb.session("bob").stop_repl(m, PolicyKind::flooding));
    EXPECT_ERRC(tb.session("bob").put_repl_raw(m, true, 77, 0, 0), Errc::unknown_policy);
    EXPECT_ERRC(tb.session("bob").put_repl(testing::Gen(1).token(), ReplicationPolicy::flooding(0)),
                Errc::unknown_object);
}

TEST(LibPayload, LocalPayloadNoTraffic) {
    Testbed tb;
    tb.add_server("bob", quiet());
    auto n1 = tb.session("bob").create_new(in(tb, 60'000), as_bytes("N1"), {}, {});
    tb.sim().clear_trace();
    EXPECT_EQ(to_string(tb.session("bob").get_payload(n1)), "N1");
    EXPECT_TRUE(tb.sim().trace().empty());
}

TEST(LibPayload, FetchedFromHome) {
    Testbed tb;
    tb.add_server("bob", quiet());
    tb.add_server("clare", quiet());
    SecurityPolicy ea(SealMode::encrypt_authenticate, key(9));
    auto n1 = tb.session("bob").create_new(in(tb, 60'000), as_bytes("breaking news"), ea, {});
    tb.session("clare").create_copy(n1, ea, {});
    tb.sim().clear_trace();
    EXPECT_EQ(to_string(tb.session("clare").get_payload(n1)), "breaking news");
    EXPECT_EQ(testing::trace_count(tb.sim(), "FETCH", "clare", "bob"), 1u);
    EXPECT_TRUE(tb.session("clare").has_payload(n1));
}

TEST(LibPayload, BogusObjectIsNotKept) {
    Testbed tb;
    tb.add_server("bob", quiet());
    tb.add_server("clare", quiet());
    // Sealed under a key Clare does not hold: hashes fine, fails to open.
    auto n1 = tb.session("bob").create_new(in(tb, 60'000), as_bytes("forged"),
                                           SecurityPolicy(SealMode::authenticate, key(1)), {});
    tb.session("clare").create_copy(n1, SecurityPolicy(SealMode::authenticate, key(2)), {});
    EXPECT_ERRC(tb.session("clare").get_payload(n1), Errc::authentication_failure);
    EXPECT_FALSE(tb.session("clare").has_payload(n1));
}

TEST(LibPayload, ServerErrorsPropagate) {
    Testbed tb;
    tb.add_server("bob", quiet());
    tb.add_server("clare", quiet());
    auto n1 = tb.session("bob").create_new(in(tb, 60'000), as_bytes("x"), {}, {});
    tb.session("clare").create_copy(n1, {}, {});
    tb.sim().set_online(tb.address("bob"), false);
    EXPECT_ERRC(tb.session("clare").get_payload(n1), Errc::unreachable_home);
}

// Behind a partition every attempt times out instead of being refused; the
// application still gets the server's verdict rather than a dead link.
TEST(LibPayload, PartitionedHomeOutlastsLocalCall) {
    Testbed tb;
    tb.add_server("bob", quiet());
    tb.add_server("clare", quiet());
    auto n1 = tb.session("bob").create_new(in(tb, 60'000), as_bytes("x"), {}, {});
    tb.session("clare").create_copy(n1, {}, {});
    tb.sim().partition({{tb.address("bob")}, {tb.address("clare")}});
    const auto start = tb.sim().now_ms();
    EXPECT_ERRC(tb.session("clare").get_payload(n1), Errc::unreachable_home);
    EXPECT_GE(tb.sim().now_ms() - start, 3 * tb.sim().config().call_timeout_ms);
}

TEST(LibCallback, EmptyTrackerFiresForExisting) {
    Testbed tb;
    tb.add_server("bob", quiet());
    auto& s = tb.session("bob");
    auto m = s.create_new(in(tb, 60'000), as_bytes("M"), {}, {});
    auto n1 = s.create_new(in(tb, 60'000), as_bytes("N1"), {}, {});
    s.add_to_cluster(m, n1);
    std::vector<Token> got;
    auto sub = s.put_cluster_callback(m, Cluster{}, [&](const Token& t) { got.push_back(t); });
    EXPECT_EQ(got, std::vector<Token>{n1});
}

TEST(LibCallback, CurrentTrackerOnlyFutureAndUnsubscribe) {
    Testbed tb;
    tb.add_server("bob", quiet());
    auto& s = tb.session("bob");
    auto m = s.create_new(in(tb, 60'000), as_bytes("M"), {}, {});
    testing::Gen g(2);
    auto first = g.tokens(3);
    s.add_tokens(m, first);
    std::vector<Token> got;
    auto sub = s.put_cluster_callback(m, s.cached_cluster(m), [&](const Token& t) { got.push_back(t); });
    EXPECT_TRUE(got.empty());
    auto later = g.tokens(4);
    s.add_tokens(m, later);
    s.add_tokens(m, later); // no duplicates
    EXPECT_EQ(testing::sort_unique(got), testing::sort_unique(later));
    EXPECT_EQ(got.size(), later.size());
    sub.cancel();
    s.add_tokens(m, g.tokens(2));
    EXPECT_EQ(got.size(), later.size());
    EXPECT_FALSE(sub.active());
}

TEST(LibCallback, RemoteAdditionsDeliveredExactlyOnce) {
    Testbed tb;
    for (auto n : {"alice", "bob"}) tb.add_server(n, ServerConfig{});
    auto m = tb.session("alice").create_new(in(tb, 600'000), as_bytes("M"), {}, {});
    tb.session("bob").create_copy(m, {}, {});
    for (auto n : {"alice", "bob"}) tb.session(n).put_repl(m, ReplicationPolicy::flooding(0));
    std::vector<Token> got;
    auto sub = tb.session("alice").put_cluster_callback(m, Cluster{}, [&](const Token& t) { got.push_back(t); });
    testing::Gen g(3);
    std::vector<Token> added;
    for (int i = 0; i < 5; ++i) {
        auto batch = g.tokens(3);
        added.insert(added.end(), batch.begin(), batch.end());
        tb.session("bob").add_tokens(m, batch);
        tb.sim().run_for(300);
        tb.session("alice").poll_all();
    }
    tb.sim().run_for(3000);
    tb.session("alice").poll_all();
    EXPECT_EQ(got.size(), added.size());
    EXPECT_EQ(testing::sort_unique(got), testing::sort_unique(added));
}

TEST(LibWait, ImmediateAndTimeout) {
    Testbed tb;
    tb.add_server("bob", quiet());
    auto& s = tb.session("bob");
    auto m = s.create_new(in(tb, 60'000), as_bytes("M"), {}, {});
    testing::Gen g(4);
    auto ts = g.tokens(3);
    s.add_tokens(m, ts);
    auto sorted = testing::sort_unique(ts);
    EXPECT_EQ(s.cluster_wait(m, Cluster{}), sorted.front());
    EXPECT_EQ(s.cluster_wait(m, Cluster{sorted[0]}), sorted[1]);

    auto before = tb.sim().now_ms();
    EXPECT_FALSE(s.cluster_try_wait(m, s.cached_cluster(m), 250ms));
    EXPECT_GE(tb.sim().now_ms() - before, 250u);
}

TEST(LibWait, SeesAdditionFromPeer) {
    Testbed tb;
    for (auto n : {"alice", "bob"}) tb.add_server(n, ServerConfig{});
    auto m = tb.session("alice").create_new(in(tb, 600'000), as_bytes("M"), {}, {});
    tb.session("bob").create_copy(m, {}, {});
    for (auto n : {"alice", "bob"}) tb.session(n).put_repl(m, ReplicationPolicy::flooding(0));
    auto n1 = tb.session("bob").create_new(in(tb, 600'000), as_bytes("N1"), {}, {});
    tb.session("bob").add_to_cluster(m, n1);
    auto got = tb.session("alice").cluster_try_wait(m, Cluster{}, 5s);
    ASSERT_TRUE(got);
    EXPECT_EQ(*got, n1);
}

TEST(LibFilter, AuthenticatedClusterHook) {
    Testbed tb;
    tb.add_server("bob", quiet());
    auto& s = tb.session("bob");
    auto m = s.create_new(in(tb, 60'000), as_bytes("M"), {}, SecurityPolicy(SealMode::authenticate, key(3)));
    auto plain = s.create_new(in(tb, 60'000), as_bytes("P"), {}, {});
    auto good = s.create_new(in(tb, 60'000), as_bytes("G"), {}, {}, 7);
    auto bad = s.create_new(in(tb, 60'000), as_bytes("B"), {}, {}, 8);
    s.set_cluster_filter([](const Token&, const Token& member) { return member.aux == 7; });
    // Tokens arriving from the server go through the filter.
    testing::local_call(tb, "bob", net::UpdateRequest{Testbed::secret_for("bob"), m, {good, bad}}.to_message(1));
    s.refresh(m);
    EXPECT_EQ(members(s.cached_cluster(m)), std::vector<Token>{good});
    // Objects without an authenticating cluster policy are unaffected.
    testing::local_call(tb, "bob", net::UpdateRequest{Testbed::secret_for("bob"), plain, {bad}}.to_message(2));
    s.refresh(plain);
    EXPECT_EQ(members(s.cached_cluster(plain)), std::vector<Token>{bad});
}

// ---- threaded sessions -----------------------------------------------------

// In-process trusted channel onto a server driven by a real runtime.
class DirectLink : public net::LocalLink {
public:
    explicit DirectLink(Server& s) : server_(s) {}
    net::CallResult call(net::Message request) override {
        auto p = std::make_shared<std::promise<net::Message>>();
        auto f = p->get_future();
        server_.on_local(std::move(request), [p](net::Message m) { p->set_value(std::move(m)); });
        if (f.wait_for(5s) != std::future_status::ready) return {Errc::timeout, {}};
        return {Errc::ok, f.get()};
    }
    std::uint64_t now_ms() const override { return net::wall_clock_ms(); }

private:
    Server& server_;
};

struct Threaded {
    Threaded() : rt(2), server(config(), rt), link(server), session(link, SessionOptions{addr(), secret(), kDefaultMaxPayloadSize, 20}) {}
    static Address addr() { return Address("127.0.0.1", 1); }
    static net::LocalSecret secret() {
        net::LocalSecret s;
        s.fill(0x42);
        return s;
    }
    static ServerConfig config() {
        ServerConfig c;
        c.listen = addr();
        c.secret = secret();
        return c;
    }
    ~Threaded() {
        server.stop();
        rt.stop();
    }
    net::TcpRuntime rt;
    Server server;
    DirectLink link;
    Session session;
};

TEST(LibThreaded, CallbacksRunInBackground) {
    Threaded w;
    auto m = w.session.create_new(ExpireDate{net::wall_clock_ms() + 60'000}, as_bytes("M"), {}, {});
    std::mutex mu;
    std::vector<Token> got;
    std::thread::id cb_thread;
    std::promise<void> done;
    auto sub = w.session.put_cluster_callback(m, Cluster{}, [&](const Token& t) {
        std::lock_guard lock(mu);
        got.push_back(t);
        cb_thread = std::this_thread::get_id();
        if (got.size() == 10) done.set_value();
    });
    auto ts = testing::Gen(5).tokens(10);
    w.session.add_tokens(m, ts);
    ASSERT_EQ(done.get_future().wait_for(5s), std::future_status::ready);
    std::lock_guard lock(mu);
    EXPECT_NE(cb_thread, std::this_thread::get_id());
    // Tokens already present are delivered in token order.
    EXPECT_EQ(got, testing::sort_unique(ts));
}

TEST(LibThreaded, ConcurrentWaitersAllSeeNewToken) {
    Threaded w;
    auto m = w.session.create_new(ExpireDate{net::wall_clock_ms() + 60'000}, as_bytes("M"), {}, {});
    auto old = testing::Gen(6).tokens(3);
    w.session.add_tokens(m, old);
    const auto tracker = w.session.cached_cluster(m);
    std::vector<std::future<Token>> waiters;
    for (int i = 0; i < 6; ++i)
        waiters.push_back(std::async(std::launch::async, [&] { return w.session.cluster_wait(m, tracker); }));
    std::this_thread::sleep_for(50ms);
    auto fresh = testing::Gen(7).token();
    // Goes straight to the server, so waiters must learn it by polling.
    net::UpdateRequest up{Threaded::secret(), m, {fresh}};
    w.link.call(up.to_message(99));
    for (auto& f : waiters) {
        ASSERT_EQ(f.wait_for(5s), std::future_status::ready);
        EXPECT_EQ(f.get(), fresh);
    }
}

TEST(LibThreaded, TryWaitHonoursTimeout) {
    Threaded w;
    auto m = w.session.create_new(ExpireDate{net::wall_clock_ms() + 60'000}, as_bytes("M"), {}, {});
    auto start = std::chrono::steady_clock::now();
    EXPECT_FALSE(w.session.cluster_try_wait(m, Cluster{}, 120'000us));
    EXPECT_GE(std::chrono::steady_clock::now() - start, 120ms);
}

TEST(LibThreaded, ConcurrentApiStress) {
    Threaded w;
    auto m = w.session.create_new(ExpireDate{net::wall_clock_ms() + 60'000}, as_bytes("M"), {}, {});
    std::atomic<std::size_t> notified{0};
    auto sub = w.session.put_cluster_callback(m, Cluster{}, [&](const Token&) { ++notified; });
    std::vector<std::vector<Token>> batches;
    for (int i = 0; i < 4; ++i) batches.push_back(testing::Gen(200 + i).tokens(50));
    std::vector<std::thread> threads;
    for (int i = 0; i < 4; ++i)
        threads.emplace_back([&, i] {
            for (const auto& t : batches[i]) {
                w.session.add_to_cluster(m, t);
                if (t.hash[0] & 1) (void)w.session.get_cluster(m);
            }
        });
    for (auto& t : threads) t.join();
    std::vector<Token> all;
    for (auto& b : batches) all.insert(all.end(), b.begin(), b.end());
    EXPECT_EQ(members(w.session.get_cluster(m)), testing::sort_unique(all));
    for (int i = 0; i < 100 && notified < all.size(); ++i) std::this_thread::sleep_for(10ms);
    EXPECT_EQ(notified.load(), all.size());
}

} // namespace
} // namespace mo
