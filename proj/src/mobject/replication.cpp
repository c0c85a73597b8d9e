#include "mo/mobject/replication.hpp"

#include <algorithm>
#include <limits>

#include "mo/core/error.hpp"

namespace mo {

std::optional<PolicyKind> policy_kind_from(std::uint8_t raw) noexcept {
    if (raw == 1) return PolicyKind::flooding;
    if (raw == 2) return PolicyKind::sustain;
    return std::nullopt;
}

void ReplicationPolicy::validate() const {
    switch (kind) {
    case PolicyKind::flooding:
        if (sustain_until) throw Error(Errc::unknown_policy, "flooding takes no sustain date");
        return;
    case PolicyKind::sustain:
        if (level != 0) throw Error(Errc::unknown_policy, "sustain takes no level");
        if (!sustain_until || !sustain_until->valid() ||
            sustain_until->millis == std::numeric_limits<std::uint64_t>::max())
            throw Error(Errc::unknown_policy, "sustain needs a finite date");
        return;
    }
    throw Error(Errc::unknown_policy);
}

void ReplicationData::set(const ReplicationPolicy& policy) {
    policy.validate();
    auto it = std::find_if(policies_.begin(), policies_.end(), [&](auto& p) { return p.kind == policy.kind; });
    if (it != policies_.end())
        *it = policy;
    else
        policies_.push_back(policy);
}

bool ReplicationData::stop(PolicyKind kind) {
    return std::erase_if(policies_, [&](auto& p) { return p.kind == kind; }) > 0;
}

const ReplicationPolicy* ReplicationData::find(PolicyKind kind) const {
    auto it = std::find_if(policies_.begin(), policies_.end(), [&](auto& p) { return p.kind == kind; });
    return it == policies_.end() ? nullptr : &*it;
}

bool ReplicationData::learn_peer(const Address& peer, std::uint64_t now_ms) {
    auto [it, inserted] = peers_.try_emplace(peer, now_ms);
    if (!inserted) it->second = std::max(it->second, now_ms);
    return inserted;
}

bool ReplicationData::forget_peer(const Address& peer) { return peers_.erase(peer) > 0; }

} // namespace mo
