#pragma once

#include <atomic>
#include <map>
#include <mutex>
#include <set>
#include <unordered_map>
#include <variant>

#include "mo/dao/subgraph.hpp"
#include "mo/server/lru_cache.hpp"
#include "mo/server/server.hpp"

namespace mo {

// Replication bookkeeping of one (entry, peer) pair.
struct PeerSync {
    bool synced = false;      // a harmonization has completed at least once
    std::size_t upto = 0;     // arrival-log prefix the peer is known to hold
    bool outstanding = false; // an ASSENT is in flight
    std::uint64_t last = 0;   // time of the last completed exchange
};

struct Entry {
    mutable std::mutex mu;
    DistributedPart dist;
    ReplicationData repl;
    bool stored = false;
    bool adopted = false;
    bool placeholder = false; // created for a caller while the home was unreachable
    std::uint64_t adopted_at = 0;
    std::vector<Token> arrival; // cluster members in the order they arrived here
    std::map<Address, PeerSync> sync;
    net::DittoList requesters; // most recent first
    std::size_t in_flight = 0; // FETCHes being served

    std::optional<ExpireDate> sustain_until() const {
        auto* p = repl.find(PolicyKind::sustain);
        return p ? p->sustain_until : std::nullopt;
    }
    // Adds tokens to the cluster and the arrival log; returns the new ones.
    std::vector<Token> absorb(std::span<const Token> tokens) {
        auto added = dist.cluster.add_all(tokens);
        arrival.insert(arrival.end(), added.begin(), added.end());
        return added;
    }
};

using EntryPtr = std::shared_ptr<Entry>;

struct FetchOutcome {
    Errc status = Errc::ok;
    std::optional<DistributedPart> part;
};
using FetchDone = std::function<void(FetchOutcome)>;

struct Server::Impl : std::enable_shared_from_this<Server::Impl> {
    Impl(ServerConfig c, net::Environment& e) : cfg(std::move(c)), env(e), cache(cfg.cache_capacity) {}

    ServerConfig cfg;
    net::Environment& env;

    mutable std::mutex index_mu;
    std::unordered_map<Token, EntryPtr, TokenHash> entries;
    LruCache<Token, std::monostate, TokenHash> cache; // entries not in the store

    std::mutex pending_mu;
    std::unordered_map<Token, std::vector<FetchDone>, TokenHash> pending; // coalesced remote fetches
    std::set<Token> flood_scheduled;

    std::atomic<bool> running{false};
    std::atomic<bool> stopped{false};
    std::atomic<std::uint64_t> next_id{1};

    std::uint64_t now() const { return env.now_ms(); }
    std::uint64_t request_id() { return next_id.fetch_add(1); }

    // Index.
    EntryPtr lookup(const Token& t, bool touch = false);
    EntryPtr get_or_create(const Token& t, bool stored);
    void move_to_store(const Token& t, const EntryPtr& e);
    std::optional<Cluster> cluster_of(const Token& t);
    std::vector<std::pair<Token, EntryPtr>> snapshot_entries() const;
    DistributedPart snapshot(const EntryPtr& e) const;

    // Replication engine.
    std::vector<std::pair<Token, ReplicationPolicy>> flooding_roots();
    std::vector<Token> roots_covering(const Token& x);
    void cluster_changed(const Token& x);
    void schedule_flood(const Token& root);
    void flood_step(const Token& root);
    void pull_payloads(const Token& root, unsigned level);
    void send_assent(const Token& x, const EntryPtr& e, const Address& peer, std::optional<std::vector<Token>> push);
    void on_assent_response(const Token& x, const EntryPtr& e, const Address& peer, std::vector<Token> sample,
                            bool was_push, net::CallResult r);
    void periodic_flood();
    void periodic_gc();
    std::vector<Token> gc_sweep();

    // Remote handlers.
    void handle_fetch(const net::Message& m, net::Reply reply);
    void handle_assent(const net::Message& m, net::Reply reply);

    // Local handlers.
    void check_secret(const net::LocalSecret& s) const;
    void handle_request_payload(const net::Message& m, net::Reply reply);
    void handle_adopt(const net::Message& m, net::Reply reply);
    void handle_replicate(const net::Message& m, net::Reply reply);
    void handle_update(const net::Message& m, net::Reply reply);

    // Fetching from other servers (fetcher.cpp).
    void remote_fetch(const Token& t, FetchDone done);
    void complete_fetch(const Token& t, FetchOutcome outcome);
    std::optional<DistributedPart> install_fetched(const DistributedPart& part);
};

} // namespace mo
