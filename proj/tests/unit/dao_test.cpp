#include <map>

#include <gtest/gtest.h>

#include "mo/dao/file.hpp"
#include "mo/dao/subgraph.hpp"
#include "mo/scenario/testbed.hpp"

#include "expect_errc.hpp"
#include "generators.hpp"
#include "oracles.hpp"

namespace mo {
namespace {

using scenario::Testbed;
using testing::Gen;

// ---- subgraph --------------------------------------------------------------

struct Graph {
    std::map<Token, Cluster> clusters;
    ClusterLookup lookup() const {
        return [this](const Token& t) -> std::optional<Cluster> {
            auto it = clusters.find(t);
            if (it == clusters.end()) return std::nullopt;
            return it->second;
        };
    }
};

// A two-block file: F holds B1 and B2, B1 holds C1..C3 and
// B2 holds C4, C5.
struct SampleFile {
    SampleFile() {
        Gen g(1);
        f = g.token();
        b1 = g.token();
        b2 = g.token();
        for (auto& c : c_) c = g.token();
        graph.clusters[f] = Cluster{b1, b2};
        graph.clusters[b1] = Cluster{c_[0], c_[1], c_[2]};
        graph.clusters[b2] = Cluster{c_[3], c_[4]};
        for (auto& c : c_) graph.clusters[c] = Cluster{};
    }
    std::vector<SubgraphItem> at(unsigned level) const { return subgraph_tokens(f, level, graph.lookup()); }
    static bool has(const std::vector<SubgraphItem>& v, const Token& t, bool payload) {
        return std::find(v.begin(), v.end(), SubgraphItem{t, payload}) != v.end();
    }
    Token f, b1, b2;
    Token c_[5];
    Graph graph;
};

TEST(Subgraph, LevelZeroIsRootClusterOnly) {
    SampleFile w;
    EXPECT_EQ(w.at(0), (std::vector<SubgraphItem>{{w.f, false}}));
}

TEST(Subgraph, LevelTwoHasBlockClustersButNoContentPayloads) {
    SampleFile w;
    auto items = w.at(2);
    EXPECT_TRUE(SampleFile::has(items, w.f, false));
    EXPECT_TRUE(SampleFile::has(items, w.b1, false));
    EXPECT_TRUE(SampleFile::has(items, w.b2, false));
    EXPECT_TRUE(SampleFile::has(items, w.b1, true));
    EXPECT_TRUE(SampleFile::has(items, w.b2, true));
    for (auto& c : w.c_) EXPECT_FALSE(SampleFile::has(items, c, true));
    EXPECT_EQ(items.size(), 5u);
}

TEST(Subgraph, LevelThreeAddsContentPayloadsAndFourAddsNothing) {
    SampleFile w;
    auto three = w.at(3);
    for (auto& c : w.c_) EXPECT_TRUE(SampleFile::has(three, c, true));
    EXPECT_EQ(three.size(), 10u);
    EXPECT_EQ(w.at(4), three);
    EXPECT_EQ(w.at(9), three);
    // With leaves, empty content clusters show up from level 4 on.
    EXPECT_EQ(subgraph_tokens(w.f, 4, w.graph.lookup(), true).size(), 15u);
}

TEST(Subgraph, UnknownBranchesSkipped) {
    SampleFile w;
    w.graph.clusters.erase(w.b1);
    auto items = w.at(3);
    EXPECT_TRUE(SampleFile::has(items, w.b1, true));
    EXPECT_FALSE(SampleFile::has(items, w.b1, false));
    EXPECT_FALSE(SampleFile::has(items, w.c_[0], true));
    EXPECT_TRUE(SampleFile::has(items, w.c_[3], true));
}

TEST(Subgraph, MonotoneInLevelOnRandomGraphs) {
    Gen g(2);
    for (int trial = 0; trial < 300; ++trial) {
        auto nodes = g.tokens(g.range(2, 25));
        Graph graph;
        for (const auto& n : nodes) {
            if (g.coin(0.2)) continue; // unknown locally
            graph.clusters[n] = testing::cluster_of(g.subset(nodes, 0.15)); // cycles allowed
        }
        std::vector<SubgraphItem> prev;
        for (unsigned level = 0; level <= 8; ++level) {
            auto cur = subgraph_tokens(nodes[0], level, graph.lookup());
            for (const auto& item : prev) ASSERT_NE(std::find(cur.begin(), cur.end(), item), cur.end());
            // No duplicates.
            for (std::size_t i = 0; i < cur.size(); ++i)
                for (std::size_t j = i + 1; j < cur.size(); ++j) ASSERT_FALSE(cur[i] == cur[j]);
            prev = cur;
        }
    }
}

// ---- file DAO --------------------------------------------------------------

ServerConfig quiet() {
    ServerConfig c;
    c.flood_interval_ms = 0;
    c.gc_interval_ms = 0;
    return c;
}

TEST(FileDao, EmptyFileReadsEmpty) {
    Testbed tb;
    tb.add_server("a", quiet());
    auto f = FileDao::create(tb.session("a"), "empty");
    EXPECT_TRUE(f.read().empty());
    EXPECT_EQ(f.block_count(), 0u);
    EXPECT_EQ(f.root().aux, static_cast<AuxTag>(DaoRole::file));
}

TEST(FileDao, TwoBlockReadAndReplace) {
    Testbed tb;
    tb.add_server("a", quiet());
    SecretKey k;
    k.fill(4);
    FileOptions opts;
    opts.psec = SecurityPolicy(SealMode::encrypt_authenticate, k);
    auto f = FileDao::create(tb.session("a"), "report", opts);
    f.write_block(0, as_bytes("C1."));
    f.write_block(0, as_bytes("C2.."));
    auto c3 = f.write_block(0, as_bytes("C3..."));
    f.write_block(1, as_bytes("C4"));
    auto c5 = f.write_block(1, as_bytes("C5!"));
    EXPECT_EQ(f.block_count(), 2u);
    auto blocks = f.blocks();
    EXPECT_EQ(f.current_content(blocks[0]), c3);
    EXPECT_EQ(f.current_content(blocks[1]), c5);
    EXPECT_EQ(to_string(f.read()), "C3...C5!");

    auto c6 = f.write_block(1, as_bytes("C6?"));
    EXPECT_EQ(to_string(f.read()), "C3...C6?");
    EXPECT_TRUE(c5 < c6);
    EXPECT_EQ(f.blocks(), blocks); // replacing content leaves the blocks alone

    EXPECT_ERRC(f.write_block(5, as_bytes("x")), Errc::not_found);
}

TEST(FileDao, ExpireDatesStrictlyIncrease) {
    Testbed tb;
    tb.add_server("a", quiet());
    auto f = FileDao::create(tb.session("a"), "mono");
    std::vector<Token> contents;
    for (int i = 0; i < 5; ++i) contents.push_back(f.write_block(0, as_bytes(std::to_string(i))));
    for (int i = 0; i < 3; ++i) f.write_block(f.block_count(), as_bytes("b"));
    for (std::size_t i = 1; i < contents.size(); ++i) EXPECT_LT(contents[i - 1].expire, contents[i].expire);
    auto blocks = f.blocks();
    for (std::size_t i = 1; i < blocks.size(); ++i) EXPECT_LT(blocks[i - 1].expire, blocks[i].expire);
    EXPECT_EQ(to_string(f.read()), "4bbb");
}

TEST(FileDao, SecondServerReadsSameBytes) {
    Testbed tb;
    tb.add_server("a", quiet());
    tb.add_server("b", quiet());
    auto fa = FileDao::create(tb.session("a"), "shared");
    fa.write_block(0, as_bytes("hello "));
    fa.write_block(1, as_bytes("world"));
    tb.session("a").put_repl(fa.root(), ReplicationPolicy::flooding(3));
    auto fb = FileDao::open(tb.session("b"), fa.root());
    tb.session("b").put_repl(fa.root(), ReplicationPolicy::flooding(3));
    tb.sim().run_for(2000);
    EXPECT_EQ(fb.read(), fa.read());
}

TEST(FileDao, UnreachableContent) {
    Testbed tb;
    tb.add_server("a", quiet());
    tb.add_server("b", quiet());
    auto fa = FileDao::create(tb.session("a"), "far");
    fa.write_block(0, as_bytes("data"));
    auto fb = FileDao::open(tb.session("b"), fa.root());
    ASSERT_EQ(fb.block_count(), 1u);
    tb.sim().set_online(tb.address("a"), false);
    // The block's own cluster was never fetched.
    EXPECT_ERRC(fb.read(), Errc::unreachable_content);

    tb.sim().set_online(tb.address("a"), true);
    ASSERT_TRUE(fb.current_content(fb.blocks()[0]));
    tb.sim().set_online(tb.address("a"), false);
    // Structure known, content payload still at its home.
    EXPECT_ERRC(fb.read(), Errc::unreachable_content);
}

// Writes to the same block on both sides of a partition; once healed and
// flooded, both sides read the content with the greatest (expire, hash).
TEST(FileDao, ConcurrentWritesConvergeOnOneWinner) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Testbed tb(net::SimConfig{seed});
        tb.add_server("a", ServerConfig{});
        tb.add_server("b", ServerConfig{});
        auto fa = FileDao::create(tb.session("a"), "contested");
        fa.write_block(0, as_bytes("base"));
        tb.session("a").put_repl(fa.root(), ReplicationPolicy::flooding(3));
        auto fb = FileDao::open(tb.session("b"), fa.root());
        tb.session("b").put_repl(fa.root(), ReplicationPolicy::flooding(3));
        tb.sim().run_for(3000);
        ASSERT_EQ(to_string(fb.read()), "base");

        tb.sim().partition({{tb.address("a")}, {tb.address("b")}});
        tb.sim().run_for(seed * 7);
        auto ca = fa.write_block(0, as_bytes("from a"));
        tb.sim().run_for(seed * 3);
        auto cb = fb.write_block(0, as_bytes("from b"));
        tb.sim().run_for(1000);
        tb.sim().heal();
        tb.sim().run_for(5000);

        const auto& winner = testing::reference_less(ca, cb) ? cb : ca;
        const std::string expected = winner == ca ? "from a" : "from b";
        EXPECT_EQ(to_string(fa.read()), expected) << seed;
        EXPECT_EQ(to_string(fb.read()), expected) << seed;
    }
}

} // namespace
} // namespace mo
