#include <gtest/gtest.h>

#include "mo/server/lru_cache.hpp"

#include "generators.hpp"
#include "oracles.hpp"

namespace mo {
namespace {

TEST(LruCache, BasicOperations) {
    LruCache<int, std::string> c(2);
    EXPECT_TRUE(c.put(1, "a").empty());
    EXPECT_TRUE(c.put(2, "b").empty());
    ASSERT_NE(c.get(1), nullptr); // 1 becomes most recent
    auto ev = c.put(3, "c");
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].first, 2);
    EXPECT_EQ(c.keys(), (std::vector<int>{3, 1}));
    EXPECT_EQ(*c.peek(1), "a");
    EXPECT_EQ(c.keys(), (std::vector<int>{3, 1})); // peek does not touch
    EXPECT_TRUE(c.erase(3));
    EXPECT_FALSE(c.erase(3));
    EXPECT_EQ(c.size(), 1u);
    EXPECT_TRUE(c.put(1, "z").empty());
    EXPECT_EQ(*c.peek(1), "z");
}

// Access traces mixing hits and misses over a key space a few times the
// capacity; the eviction sequence must match the reference exactly.
TEST(LruCache, EvictionsMatchReference) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        testing::Gen g(seed);
        LruCache<std::uint64_t, int> cache(64);
        testing::ReferenceLru<std::uint64_t> ref(64);
        std::vector<std::uint64_t> got, want;
        for (int step = 0; step < 10'000; ++step) {
            // Skewed keys so that hits are common.
            auto key = g.coin(0.6) ? g.range(0, 80) : g.range(0, 400);
            if (!cache.get(key)) {
                for (auto& [k, v] : cache.put(key, step)) got.push_back(k);
            }
            if (auto victim = ref.access(key)) want.push_back(*victim);
        }
        EXPECT_EQ(got, want);
        EXPECT_EQ(cache.keys(), ref.order());
        EXPECT_GT(got.size(), 1000u);
    }
}

} // namespace
} // namespace mo
