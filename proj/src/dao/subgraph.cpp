#include "mo/dao/subgraph.hpp"

#include <deque>
#include <unordered_set>

namespace mo {

std::vector<SubgraphItem> subgraph_tokens(const Token& root, unsigned level, const ClusterLookup& lookup,
                                          bool include_leaves) {
    std::vector<SubgraphItem> out;
    std::unordered_set<Token, TokenHash> clusters_seen;
    std::unordered_set<Token, TokenHash> payloads_seen;

    struct Pending {
        Token token;
        Cluster cluster;
        unsigned level;
    };
    std::deque<Pending> queue;

    out.push_back({root, false});
    clusters_seen.insert(root);
    queue.push_back({root, lookup(root).value_or(Cluster{}), 0});

    while (!queue.empty()) {
        auto cur = std::move(queue.front());
        queue.pop_front();
        const unsigned payload_level = cur.level + 1;
        const unsigned cluster_level = cur.level + 2;
        for (const auto& member : cur.cluster) {
            if (payload_level <= level && payloads_seen.insert(member).second) out.push_back({member, true});
            if (cluster_level > level || clusters_seen.contains(member)) continue;
            auto sub = lookup(member);
            if (!sub || sub->empty()) {
                if (include_leaves && clusters_seen.insert(member).second) out.push_back({member, false});
                continue;
            }
            clusters_seen.insert(member);
            out.push_back({member, false});
            queue.push_back({member, std::move(*sub), cluster_level});
        }
    }
    return out;
}

} // namespace mo
