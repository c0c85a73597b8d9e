#include <gtest/gtest.h>

#include "mo/cluster/digest.hpp"

#include "expect_errc.hpp"
#include "generators.hpp"
#include "oracles.hpp"

namespace mo {
namespace {

using testing::cluster_of;
using testing::Gen;

std::vector<Token> members(const Cluster& c) { return {c.begin(), c.end()}; }

bool strictly_sorted(const Cluster& c) {
    for (std::size_t i = 1; i < c.size(); ++i)
        if (!testing::reference_less(c.members()[i - 1], c.members()[i])) return false;
    return true;
}

TEST(ClusterAdd, EmptyAndIdempotent) {
    Gen g(1);
    auto t = g.token();
    Cluster c;
    EXPECT_TRUE(c.add(t));
    EXPECT_EQ(members(c), std::vector<Token>{t});
    EXPECT_FALSE(c.add(t));
    EXPECT_EQ(c.size(), 1u);
}

TEST(ClusterAdd, ShuffledAddsMatchSortDedupe) {
    Gen g(2);
    for (int round = 0; round < 20; ++round) {
        auto tokens = g.tokens(1000, 1, 300); // plenty of expire ties
        // Duplicate a slice so dedupe is exercised.
        tokens.insert(tokens.end(), tokens.begin(), tokens.begin() + 100);
        g.shuffle(tokens);
        auto c = cluster_of(tokens);
        EXPECT_EQ(members(c), testing::sort_unique(tokens));
        EXPECT_TRUE(strictly_sorted(c));
    }
}

TEST(ClusterAdd, AddAllReturnsOnlyNew) {
    Gen g(3);
    auto a = g.tokens(50);
    auto c = cluster_of(a);
    auto more = g.tokens(10);
    auto batch = more;
    batch.insert(batch.end(), a.begin(), a.begin() + 5);
    auto fresh = c.add_all(batch);
    EXPECT_EQ(fresh, testing::sort_unique(more));
    EXPECT_EQ(c.size(), 60u);
}

TEST(ClusterMerge, DocumentedExamples) {
    Gen g(4);
    auto t = g.token();
    auto r = cluster_merge(Cluster{}, Cluster{t});
    EXPECT_EQ(r.merged, Cluster{t});
    EXPECT_EQ(r.missing_from_a, std::vector<Token>{t});
    EXPECT_TRUE(r.missing_from_b.empty());

    auto c = cluster_of(g.tokens(20));
    auto self = cluster_merge(c, c);
    EXPECT_EQ(self.merged, c);
    EXPECT_TRUE(self.missing_from_a.empty());
    EXPECT_TRUE(self.missing_from_b.empty());
}

TEST(ClusterMerge, NewsItemsFromTwoSites) {
    const HomeLocation bob("bob", 7000), clare("clare", 7000);
    auto n1 = token_create(bob, ExpireDate{5000}, 0, as_bytes("news one"));
    auto n2 = token_create(clare, ExpireDate{6000}, 0, as_bytes("news two"));
    auto r = cluster_merge(Cluster{n1}, Cluster{n2});
    EXPECT_EQ(r.merged, (Cluster{n1, n2}));
    EXPECT_EQ(r.missing_from_a, std::vector<Token>{n2});
    EXPECT_EQ(r.missing_from_b, std::vector<Token>{n1});
}

TEST(ClusterMerge, MatchesSetOracleAndIsCommutative) {
    Gen g(5);
    for (int i = 0; i < 300; ++i) {
        auto pool = g.tokens(g.range(0, 80), 1, 50);
        auto a = g.subset(pool, 0.5), b = g.subset(pool, 0.5);
        auto ca = cluster_of(a), cb = cluster_of(b);
        auto ab = cluster_merge(ca, cb);
        auto ba = cluster_merge(cb, ca);
        auto uni = a;
        uni.insert(uni.end(), b.begin(), b.end());
        EXPECT_EQ(members(ab.merged), testing::sort_unique(uni));
        EXPECT_EQ(ab.merged, ba.merged);
        EXPECT_EQ(ab.missing_from_a, ba.missing_from_b);
        EXPECT_EQ(ab.missing_from_b, ba.missing_from_a);
        EXPECT_EQ(ab.missing_from_a, testing::sort_unique(testing::brute_difference(b, a)));
        EXPECT_EQ(ab.missing_from_b, testing::sort_unique(testing::brute_difference(a, b)));
        EXPECT_TRUE(strictly_sorted(ab.merged));
    }
}

TEST(ClusterMerge, SemilatticeLaws) {
    Gen g(6);
    for (int i = 0; i < 500; ++i) {
        auto pool = g.tokens(40, 1, 20);
        auto a = cluster_of(g.subset(pool, 0.4));
        auto b = cluster_of(g.subset(pool, 0.4));
        auto c = cluster_of(g.subset(pool, 0.4));
        auto left = cluster_merge(cluster_merge(a, b).merged, c).merged;
        auto right = cluster_merge(a, cluster_merge(b, c).merged).merged;
        ASSERT_EQ(left, right);
        ASSERT_EQ(cluster_merge(a, b).merged, cluster_merge(b, a).merged);
        ASSERT_EQ(cluster_merge(a, a).merged, a);
    }
}

// Three replicas receive random adds and random pairwise merges; a final
// round of pairwise harmonization leaves each one equal to the union.
TEST(ClusterMerge, GrowOnlyConvergesToUnion) {
    Gen g(7);
    for (int trial = 0; trial < 500; ++trial) {
        Cluster r[3];
        std::vector<Token> added;
        int steps = static_cast<int>(g.range(1, 60));
        for (int s = 0; s < steps; ++s) {
            if (g.coin(0.7)) {
                auto t = g.token(1, 30);
                added.push_back(t);
                r[g.range(0, 2)].add(t);
            } else {
                auto i = g.range(0, 2), j = g.range(0, 2);
                auto before = r[i].size();
                r[i] = cluster_merge(r[i], r[j]).merged;
                ASSERT_GE(r[i].size(), before);
            }
            for (auto& x : r) ASSERT_TRUE(strictly_sorted(x));
        }
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                auto m = cluster_merge(r[i], r[j]);
                r[i] = m.merged;
                r[j] = m.merged;
            }
        auto expected = testing::sort_unique(added);
        for (auto& x : r) ASSERT_EQ(members(x), expected);
    }
}

TEST(ClusterNewSince, Examples) {
    Gen g(8);
    auto c = cluster_of(g.tokens(30));
    EXPECT_EQ(cluster_new_since(c, Cluster{}), members(c));
    EXPECT_TRUE(cluster_new_since(c, c).empty());
    for (int i = 0; i < 300; ++i) {
        auto pool = g.tokens(g.range(0, 60), 1, 10);
        auto full = cluster_of(pool);
        auto tracker = cluster_of(g.subset(pool, 0.5));
        EXPECT_EQ(cluster_new_since(full, tracker), testing::sort_unique(testing::brute_difference(pool, members(tracker))));
    }
}

TEST(ClusterWire, RoundtripAndRejectsDisorder) {
    Gen g(9);
    auto c = cluster_of(g.tokens(40));
    EXPECT_EQ(cluster_decode(cluster_encode(c)), c);
    EXPECT_EQ(cluster_decode(cluster_encode(Cluster{})), Cluster{});

    // Hand-build an out-of-order encoding.
    Bytes bad;
    ByteWriter w(bad);
    w.u32(2);
    token_encode_to(w, c.members()[1]);
    token_encode_to(w, c.members()[0]);
    EXPECT_THROW(cluster_decode(bad), Error);

    auto enc = cluster_encode(c);
    enc.pop_back();
    EXPECT_THROW(cluster_decode(enc), Error);
}

TEST(ClusterDigest, EmptyAndDeterministic) {
    auto d = cluster_digest(Cluster{});
    EXPECT_EQ(d.total_count, 0u);
    EXPECT_TRUE(d.ranges.empty());
    Gen g(10);
    auto c = cluster_of(g.tokens(500));
    EXPECT_EQ(cluster_digest(c), cluster_digest(c));
}

TEST(ClusterDigest, RangesPartitionMembers) {
    Gen g(11);
    for (int i = 0; i < 200; ++i) {
        auto c = cluster_of(g.tokens(g.range(0, 3000), 1, g.coin() ? 20 : 1'000'000));
        auto d = cluster_digest(c);
        ASSERT_LE(d.ranges.size(), kMaxDigestRanges);
        ASSERT_EQ(d.total_count, c.size());
        std::size_t pos = 0;
        for (std::size_t r = 0; r < d.ranges.size(); ++r) {
            const auto& range = d.ranges[r];
            ASSERT_GT(range.count, 0u);
            if (r > 0) ASSERT_LT(d.ranges[r - 1].hi, range.lo);
            Digest fold{};
            for (std::uint32_t k = 0; k < range.count; ++k, ++pos) {
                const auto& t = c.members()[pos];
                ASSERT_GE(t.expire, range.lo);
                ASSERT_LE(t.expire, range.hi);
                for (std::size_t b = 0; b < fold.size(); ++b) fold[b] ^= t.hash[b];
            }
            ASSERT_EQ(fold, range.fold);
        }
        ASSERT_EQ(pos, c.size());
    }
}

TEST(ClusterDigest, OneMemberDifferenceAlwaysDetected) {
    Gen g(12);
    for (int i = 0; i < 10'000; ++i) {
        auto base = g.tokens(g.range(0, 200), 1, 1000);
        auto a = cluster_of(base);
        auto b = a;
        auto extra = g.token(1, 1000);
        if (!b.add(extra)) continue;
        ASSERT_NE(cluster_digest(a), cluster_digest(b));
    }
}

TEST(ClusterDiff, Examples) {
    Gen g(13);
    auto c = cluster_of(g.tokens(100));
    EXPECT_TRUE(cluster_diff(c, cluster_digest(c), members(c)).empty());
    EXPECT_TRUE(cluster_diff(c, cluster_digest(c), {}).empty());
    auto t1 = g.token(), t2 = g.token();
    auto local = Cluster{t1, t2};
    EXPECT_EQ(cluster_diff(local, cluster_digest(Cluster{}), {}), members(local));
}

TEST(ClusterDiff, SupersetOfExactDifference) {
    Gen g(14);
    for (int i = 0; i < 2000; ++i) {
        auto pool = g.tokens(g.range(0, 400), 1, g.range(1, 100'000));
        auto a = g.subset(pool, 0.8), b = g.subset(pool, 0.8);
        auto local = cluster_of(a), remote = cluster_of(b);
        auto sample = g.subset(members(remote), g.coin() ? 1.0 : 0.3);
        auto out = cluster_diff(local, cluster_digest(remote), sample);
        ASSERT_TRUE(testing::contains_all(out, testing::brute_difference(members(local), members(remote))));
        // Everything sent is a local member.
        for (const auto& t : out) ASSERT_TRUE(local.contains(t));
    }
}

TEST(ClusterDigest, WireRoundtrip) {
    Gen g(15);
    auto d = cluster_digest(cluster_of(g.tokens(1000)));
    Bytes b;
    ByteWriter w(b);
    digest_encode_to(w, d);
    ByteReader r(b, Errc::malformed_message);
    EXPECT_EQ(digest_read(r), d);
    EXPECT_TRUE(r.done());
}

} // namespace
} // namespace mo
