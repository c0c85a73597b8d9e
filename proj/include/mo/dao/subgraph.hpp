#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mo/cluster/cluster.hpp"

namespace mo {

// One unit a replication policy extends to: either the cluster of `token`
// (needs_payload false) or its payload (needs_payload true).
struct SubgraphItem {
    Token token;
    bool needs_payload = false;

    friend bool operator==(const SubgraphItem&, const SubgraphItem&) = default;
};

// Cluster of a locally known object, or nullopt when the object is unknown.
using ClusterLookup = std::function<std::optional<Cluster>(const Token&)>;

// Items reachable from `root` within `level`. The root's cluster sits at
// level 0; a member's payload is one level below the cluster holding it and
// the member's own cluster one further. Unknown objects and empty clusters
// below the root are not followed. Output is breadth-first, without
// duplicates, and always starts with the root's cluster. With
// `include_leaves`, clusters within the level that are unknown or empty are
// still listed (but not followed).
std::vector<SubgraphItem> subgraph_tokens(const Token& root, unsigned level, const ClusterLookup& lookup,
                                          bool include_leaves = false);

} // namespace mo
