#include <gtest/gtest.h>

#include <set>

#include "tcdiag/regions.h"

using namespace tcdiag;

TEST(Regions, BlockEdgeCount) {
    auto code = build_code(6);
    for (int s = 1; s <= 4; s++) {
        EXPECT_EQ(block_region(code, 1, 2, s, s).popcount(), (size_t)(2 * s * (s + 1)));
    }
    EXPECT_EQ(block_region(code, 0, 0, 1, 1), BitVec::from_indices(code.N, {code.h(0, 0), code.h(1, 0), code.v(0, 0), code.v(0, 1)}));
}

TEST(Regions, WedgesPartitionTheBlock) {
    auto code = build_code(8);
    for (int side : {2, 3, 4}) {
        auto t = wedge_tripartition(code, side, 1, 2);
        EXPECT_TRUE((t.A & t.B).none());
        EXPECT_TRUE((t.B & t.C).none());
        EXPECT_TRUE((t.A & t.C).none());
        EXPECT_EQ(t.A | t.B | t.C, block_region(code, 1, 2, side, side));
        EXPECT_TRUE(t.A.any() && t.B.any() && t.C.any()) << t.describe();
    }
    EXPECT_THROW(wedge_tripartition(code, 7, 0, 0), std::invalid_argument);
    EXPECT_THROW(wedge_tripartition(code, 0, 0, 0), std::invalid_argument);
}

TEST(Regions, KitaevPreskillUnions) {
    auto code = build_code(8);
    auto t = wedge_tripartition(code, 2, 3, 3);
    auto regions = kp_regions(t);
    ASSERT_EQ(regions.size(), 7u);
    std::vector<std::string> names;
    for (auto &[name, r] : regions) {
        names.push_back(name);
    }
    EXPECT_EQ(names, (std::vector<std::string>{"A", "B", "C", "AB", "BC", "AC", "ABC"}));
    EXPECT_EQ(regions[3].second, t.A | t.B);
    EXPECT_EQ(regions[6].second.popcount(), t.A.popcount() + t.B.popcount() + t.C.popcount());
}

TEST(Regions, EdgeSpins) {
    auto code = build_code(4);
    auto v = edge_spins(code, LoopKind::X, code.h(1, 3));
    EXPECT_EQ(v, (std::array<int, 2>{code.site(1, 3), code.site(1, 0)}));
    auto p = edge_spins(code, LoopKind::Z, code.h(1, 3));
    EXPECT_EQ(std::set<int>(p.begin(), p.end()), (std::set<int>{code.site(0, 3), code.site(1, 3)}));
}

// |cut cells| - rank counts the connected boundary components of the region.
TEST(Regions, BoundaryComponents) {
    auto code = build_code(5);
    for (auto kind : {LoopKind::X, LoopKind::Z}) {
        auto square = block_region(code, 1, 1, 1, 1);
        EXPECT_EQ(cut_cells(code, kind, square).size(), 4u);
        EXPECT_EQ((int)cut_cells(code, kind, square).size() - pinning_rank(code, kind, square), 1);

        auto big = block_region(code, 0, 0, 2, 2);
        EXPECT_EQ((int)cut_cells(code, kind, big).size() - pinning_rank(code, kind, big), 1);

        // A band winding around the torus has two boundaries.
        auto band = block_region(code, 1, 0, 1, code.L);
        EXPECT_EQ((int)cut_cells(code, kind, band).size() - pinning_rank(code, kind, band), 2) << loop_kind_name(kind);
    }
}

TEST(Regions, WholeLatticeHasNoCut) {
    auto code = build_code(3);
    EXPECT_TRUE(cut_cells(code, LoopKind::X, ~EdgeSet(code.N)).empty());
    EXPECT_EQ(pinning_rank(code, LoopKind::X, ~EdgeSet(code.N)), 0);
}
