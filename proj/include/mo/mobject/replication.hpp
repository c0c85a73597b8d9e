#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "mo/core/token.hpp"

namespace mo {

enum class PolicyKind : std::uint8_t { flooding = 1, sustain = 2 };

std::optional<PolicyKind> policy_kind_from(std::uint8_t raw) noexcept;

struct ReplicationPolicy {
    PolicyKind kind = PolicyKind::flooding;
    std::uint8_t level = 0;                  // flooding only
    std::optional<ExpireDate> sustain_until; // sustain only, always finite

    static ReplicationPolicy flooding(std::uint8_t level = 0) { return {PolicyKind::flooding, level, std::nullopt}; }
    static ReplicationPolicy sustain(ExpireDate until) { return {PolicyKind::sustain, 0, until}; }

    // Throws Error(unknown_policy) when the fields do not fit the kind.
    void validate() const;

    friend bool operator==(const ReplicationPolicy&, const ReplicationPolicy&) = default;
};

// Openly shared, nondistributed section: active policies plus the servers
// this copy knows about. Never put on the wire.
class ReplicationData {
public:
    // At most one policy per kind; setting a kind replaces the previous one.
    void set(const ReplicationPolicy& policy);
    bool stop(PolicyKind kind);
    const ReplicationPolicy* find(PolicyKind kind) const;
    const std::vector<ReplicationPolicy>& policies() const noexcept { return policies_; }
    bool empty() const noexcept { return policies_.empty(); }

    // Returns true when the peer was not known before.
    bool learn_peer(const Address& peer, std::uint64_t now_ms);
    bool forget_peer(const Address& peer);
    bool knows(const Address& peer) const { return peers_.contains(peer); }
    const std::map<Address, std::uint64_t>& peers() const noexcept { return peers_; }

private:
    std::vector<ReplicationPolicy> policies_;
    std::map<Address, std::uint64_t> peers_; // last-contact time, ms
};

} // namespace mo
