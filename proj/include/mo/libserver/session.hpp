#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "mo/mobject/micro_object.hpp"
#include "mo/net/environment.hpp"
#include "mo/net/protocol.hpp"

namespace mo {

struct SessionOptions {
    Address home;                 // remote address of the local server; home of created objects
    net::LocalSecret secret{};    // shared with the local server
    std::size_t max_payload_size = kDefaultMaxPayloadSize;
    std::uint64_t poll_interval_ms = 100;
};

using ClusterCallback = std::function<void(const Token&)>;

// Optional check applied to tokens entering the cluster of an object whose
// cluster policy is `authenticate`; rejected tokens are never reported.
using ClusterFilter = std::function<bool(const Token& object, const Token& member)>;

class Subscription {
public:
    Subscription() = default;
    ~Subscription() { cancel(); }
    Subscription(Subscription&&) noexcept = default;
    Subscription& operator=(Subscription&& other) noexcept {
        cancel();
        cancel_ = std::move(other.cancel_);
        return *this;
    }

    // Idempotent. After return no new callback starts for this subscription.
    void cancel() {
        if (cancel_) std::exchange(cancel_, nullptr)();
    }
    bool active() const noexcept { return static_cast<bool>(cancel_); }

private:
    friend class Session;
    explicit Subscription(std::function<void()> cancel) : cancel_(std::move(cancel)) {}
    std::function<void()> cancel_;
};

// The application-side library. Objects are named by their tokens; the
// session keeps the keys and the local view of every object it opened.
// All member functions are thread-safe. Callbacks run on a notification
// thread, except on a simulated link where they run inline on the calling
// thread while the simulation is pumped.
class Session {
public:
    Session(net::LocalLink& link, SessionOptions options);
    ~Session();
    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    // Seals, hashes and adopts a new object at the local server.
    // Errors: oversize_after_seal and friends before any traffic,
    // unsupported_policy, adopt_refused, disconnected.
    Token create_new(ExpireDate expire, ByteView plaintext, const SecurityPolicy& psec, const SecurityPolicy& csec,
                     AuxTag aux = 0);
    // Opens a copy known only by its token; nothing is fetched yet.
    Token create_copy(const Token& token, const SecurityPolicy& psec, const SecurityPolicy& csec);

    void add_to_cluster(const Token& parent, const Token& child);
    void add_tokens(const Token& parent, const std::vector<Token>& tokens);

    void put_repl(const Token& object, const ReplicationPolicy& policy);
    void stop_repl(const Token& object, PolicyKind kind);
    // Raw request, for policies the library cannot express itself.
    void put_repl_raw(const Token& object, bool start, std::uint8_t kind, std::uint8_t level,
                      std::uint64_t sustain_until);

    Token get_token(const Token& object) const;
    // Current cluster after asking the local server for news.
    Cluster get_cluster(const Token& object);
    // Local view without contacting the server.
    Cluster cached_cluster(const Token& object) const;
    // Plaintext; fetched through the local server when not yet present.
    Bytes get_payload(const Token& object);
    bool has_payload(const Token& object) const;
    MicroObject snapshot(const Token& object) const;

    Subscription put_cluster_callback(const Token& object, const Cluster& tracker, ClusterCallback callback);
    // Least token (in token order) of the cluster outside `tracker`.
    Token cluster_wait(const Token& object, const Cluster& tracker);
    std::optional<Token> cluster_try_wait(const Token& object, const Cluster& tracker,
                                          std::chrono::microseconds timeout);

    // Pulls the server's cluster for one or all open objects.
    void refresh(const Token& object);
    void poll_all();

    void set_cluster_filter(ClusterFilter filter);

    std::uint64_t now_ms() const;

    struct State;

private:
    std::shared_ptr<State> state_;
};

} // namespace mo
