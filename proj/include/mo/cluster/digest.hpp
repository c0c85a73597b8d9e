#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mo/cluster/cluster.hpp"

namespace mo {

inline constexpr std::size_t kMaxDigestRanges = 64;

// A contiguous run of members, described by its expire interval, its size
// and the xor of the members' hashes. Runs never split a group of equal
// expire dates, so the intervals of one digest are disjoint.
struct DigestRange {
    ExpireDate lo;
    ExpireDate hi;
    std::uint32_t count = 0;
    Digest fold{};

    friend bool operator==(const DigestRange&, const DigestRange&) = default;
};

struct ClusterDigest {
    std::uint32_t total_count = 0;
    std::vector<DigestRange> ranges;

    friend bool operator==(const ClusterDigest&, const ClusterDigest&) = default;
};

ClusterDigest cluster_digest(const Cluster& c, std::size_t max_ranges = kMaxDigestRanges);

// Tokens of `local` that the remote side may lack. `remote_sample` lists
// tokens known to be in the remote cluster. Every member of local absent
// from the remote cluster is returned; extra tokens may be included.
std::vector<Token> cluster_diff(const Cluster& local, const ClusterDigest& remote_digest,
                                std::span<const Token> remote_sample);

// Wire form: total_count(4) range_count(1) then per range
// expire_lo(8) expire_hi(8) count(4) fold(32).
void digest_encode_to(ByteWriter& out, const ClusterDigest& d);
ClusterDigest digest_read(ByteReader& in);

} // namespace mo
