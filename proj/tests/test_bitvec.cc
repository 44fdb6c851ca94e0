#include <gtest/gtest.h>

#include <random>

#include "tcdiag/bitvec.h"

using namespace tcdiag;

TEST(BitVec, SetFlipAndCount) {
    BitVec v(130);
    v.set(0);
    v.set(64);
    v.set(129);
    v.flip(64);
    EXPECT_EQ(v.popcount(), 2u);
    EXPECT_EQ(v.indices(), (std::vector<int>{0, 129}));
    EXPECT_TRUE(v.any());
    EXPECT_TRUE(BitVec(7).none());
}

TEST(BitVec, ComplementKeepsTailClear) {
    BitVec v(70);
    auto c = ~v;
    EXPECT_EQ(c.popcount(), 70u);
    EXPECT_EQ((~c).popcount(), 0u);
}

TEST(BitVec, AlgebraMatchesWordArithmetic) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 200; t++) {
        uint64_t a = rng() >> 4, b = rng() >> 4;
        auto va = BitVec::from_u64(60, a), vb = BitVec::from_u64(60, b);
        EXPECT_EQ((va ^ vb).to_u64(), a ^ b);
        EXPECT_EQ((va & vb).to_u64(), a & b);
        EXPECT_EQ((va | vb).to_u64(), a | b);
        EXPECT_EQ(va.dot(vb), (bool)(__builtin_popcountll(a & b) & 1));
        EXPECT_EQ((va & vb).is_subset_of(va), true);
    }
}

TEST(BitVec, SizeMismatchThrows) {
    BitVec a(5), b(6);
    EXPECT_THROW(a ^= b, std::invalid_argument);
}

TEST(BitVec, FromIndicesRoundTrip) {
    auto v = BitVec::from_indices(12, {1, 5, 11});
    EXPECT_EQ(v.indices(), (std::vector<int>{1, 5, 11}));
    EXPECT_EQ(v.str().size(), 12u);
}
