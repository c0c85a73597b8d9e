#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "mo/net/environment.hpp"
#include "mo/server/config.hpp"
#include "mo/server/store_file.hpp"

namespace mo {

// The MO server. Request handlers, the replication engine and the garbage
// collector share one set of entries; every entry has its own lock and the
// entry index has a global one. Callbacks scheduled on the environment keep
// the internals alive, so the Server may be destroyed with work pending.
class Server final : public net::RequestHandler {
public:
    Server(ServerConfig config, net::Environment& env);
    ~Server() override;
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    const ServerConfig& config() const noexcept;

    void on_remote(net::Message request, net::Reply reply) override;
    void on_local(net::Message request, net::Reply reply) override;

    // Starts the periodic flood and GC timers.
    void start();
    // Stops all proactive work; pending replies are still delivered.
    void stop();

    // One flood step for a flooding root (normally timer- or change-driven).
    void flood_step(const Token& root);
    // Flood step for every object with an active flooding policy.
    void flood_all();
    // Removes store entries past max(expire, sustain_until) + grace and
    // expired cache entries. Returns the removed tokens.
    std::vector<Token> gc_sweep();

    // Inspection, all returning snapshots.
    std::optional<DistributedPart> find(const Token& token) const;
    std::vector<Address> peers(const Token& token) const;
    std::vector<ReplicationPolicy> policies(const Token& token) const;
    bool in_store(const Token& token) const;
    bool in_cache(const Token& token) const;
    std::vector<Token> cache_order() const; // most recently used first
    std::size_t entry_count() const;

    std::vector<StoreRecord> export_store() const;
    void import_store(const std::vector<StoreRecord>& records);

    struct Impl;

private:
    std::shared_ptr<Impl> impl_;
};

} // namespace mo
