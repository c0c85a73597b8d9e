#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "mo/core/token.hpp"
#include "mo/net/protocol.hpp"

namespace mo {

struct ServerConfig {
    Address listen;                      // remote channel; also the home identity
    std::optional<Address> local_listen; // trusted channel (real transport only)
    net::LocalSecret secret{};           // shared with local applications

    std::size_t cache_capacity = 1024; // objects
    std::uint64_t grace_period_ms = 30'000;
    std::uint64_t clock_skew_bound_ms = 10'000;
    std::size_t busy_threshold = 4; // concurrent identical fetches
    std::size_t ditto_max = 8;
    std::size_t flood_fanout = 0; // 0 = unlimited
    std::size_t max_payload_size = kDefaultMaxPayloadSize;

    // Replication engine.
    bool flood_on_change = true;
    std::uint64_t flood_interval_ms = 1000; // 0 disables the anti-stale timer
    std::size_t sample_max = 1024;          // tokens per ASSENT sample

    // Fetching.
    std::uint64_t fetch_service_ms = 0; // hold time of a served FETCH
    unsigned home_attempts = 3;
    std::uint64_t retry_base_ms = 100;
    unsigned busy_rounds = 6;

    std::uint64_t gc_interval_ms = 1000; // 0 disables periodic sweeps
    std::string store_path;              // empty = no persistence

    // Throws Error(bad_config).
    void validate() const;
};

} // namespace mo
