#include "mo/cluster/digest.hpp"

#include <algorithm>
#include <unordered_set>

namespace mo {

namespace {

void fold_into(Digest& acc, const Digest& h) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] ^= h[i];
}

// Index of the range whose [lo, hi] holds `e`, or -1.
long find_range(const std::vector<DigestRange>& ranges, ExpireDate e) {
    auto it = std::upper_bound(ranges.begin(), ranges.end(), e,
                               [](ExpireDate v, const DigestRange& r) { return v < r.lo; });
    if (it == ranges.begin()) return -1;
    --it;
    return e <= it->hi ? static_cast<long>(it - ranges.begin()) : -1;
}

} // namespace

ClusterDigest cluster_digest(const Cluster& c, std::size_t max_ranges) {
    ClusterDigest d;
    d.total_count = static_cast<std::uint32_t>(c.size());
    if (c.empty() || max_ranges == 0) return d;
    const std::size_t target = (c.size() + max_ranges - 1) / max_ranges;
    auto members = c.members();
    DigestRange cur;
    bool open = false;
    for (std::size_t i = 0; i < members.size(); ++i) {
        const auto& t = members[i];
        if (open && cur.count >= target && t.expire != cur.hi) {
            d.ranges.push_back(cur);
            open = false;
        }
        if (!open) {
            cur = DigestRange{t.expire, t.expire, 0, {}};
            open = true;
        }
        cur.hi = t.expire;
        ++cur.count;
        fold_into(cur.fold, t.hash);
    }
    d.ranges.push_back(cur);
    return d;
}

std::vector<Token> cluster_diff(const Cluster& local, const ClusterDigest& remote_digest,
                                std::span<const Token> remote_sample) {
    const auto& ranges = remote_digest.ranges;
    std::vector<DigestRange> mine(ranges.size());
    std::vector<long> slot(local.size());
    std::size_t i = 0;
    for (const auto& t : local) {
        long r = find_range(ranges, t.expire);
        slot[i++] = r;
        if (r >= 0) {
            ++mine[r].count;
            fold_into(mine[r].fold, t.hash);
        }
    }
    std::vector<bool> matched(ranges.size());
    for (std::size_t r = 0; r < ranges.size(); ++r)
        matched[r] = mine[r].count == ranges[r].count && mine[r].fold == ranges[r].fold;

    std::unordered_set<Token, TokenHash> known(remote_sample.begin(), remote_sample.end());
    std::vector<Token> out;
    i = 0;
    for (const auto& t : local) {
        long r = slot[i++];
        if (r >= 0 && matched[r]) continue;
        if (known.contains(t)) continue;
        out.push_back(t);
    }
    return out;
}

void digest_encode_to(ByteWriter& out, const ClusterDigest& d) {
    out.u32(d.total_count);
    out.u8(static_cast<std::uint8_t>(d.ranges.size()));
    for (const auto& r : d.ranges) {
        out.u64(r.lo.millis);
        out.u64(r.hi.millis);
        out.u32(r.count);
        out.raw(r.fold);
    }
}

ClusterDigest digest_read(ByteReader& in) {
    ClusterDigest d;
    d.total_count = in.u32();
    auto n = in.u8();
    if (n > kMaxDigestRanges) in.fail("too many digest ranges");
    std::uint64_t sum = 0;
    for (int i = 0; i < n; ++i) {
        DigestRange r;
        r.lo.millis = in.u64();
        r.hi.millis = in.u64();
        r.count = in.u32();
        auto fold = in.raw(32);
        std::copy(fold.begin(), fold.end(), r.fold.begin());
        if (r.hi < r.lo || (!d.ranges.empty() && r.lo <= d.ranges.back().hi)) in.fail("digest ranges overlap");
        sum += r.count;
        d.ranges.push_back(r);
    }
    if (sum != d.total_count) in.fail("digest counts do not add up");
    return d;
}

} // namespace mo
