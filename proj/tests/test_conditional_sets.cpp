#include "support.hpp"

using namespace fx;

TEST(ConditionalSet, SupportFollowsNonemptyFibers) {
    const auto v = C(3, {{1, 2}, {}});
    EXPECT_EQ(v.support(), E(2, {1}));
    EXPECT_TRUE(C(3, {{}, {}}).is_bottom());
    EXPECT_TRUE(ConditionalSet::top(2, 3).is_top());
    EXPECT_EQ(v.str(), "({1,2}, -)");
    EXPECT_EQ(ConditionalSet::bottom(2, 3).str(), "{*}");
}

TEST(Membership, Examples) {
    const PointFunction x(3, {0, 1});
    EXPECT_EQ(membership(x, ConditionalSet::top(2, 3)), Event::full(2));
    EXPECT_EQ(membership(x, ConditionalSet::bottom(2, 3)), Event::empty(2));
    EXPECT_EQ(membership(x, C(3, {{1}, {3}})), E(2, {1}));
}

TEST(Inclusion, Examples) {
    const auto v = C(3, {{1}, {1}});
    EXPECT_TRUE(cond_inclusion(ConditionalSet::bottom(2, 3), v));
    EXPECT_TRUE(cond_inclusion(v, ConditionalSet::top(2, 3)));
    EXPECT_FALSE(cond_inclusion(v, C(3, {{1, 2}, {}})));
    EXPECT_TRUE(cond_inclusion(C(3, {{1}, {}}), C(3, {{1, 2}, {}})));
}

TEST(Union, Examples) {
    const auto v = C(3, {{1, 2}, {1}}), w = C(3, {{2, 3}, {}});
    EXPECT_EQ(cond_union(std::vector{v}), v);
    EXPECT_EQ(cond_union(v, w), C(3, {{1, 2, 3}, {1}}));
    EXPECT_EQ(cond_union(ConditionalSet::bottom(2, 3), v), v);
    EXPECT_THROW(cond_union(std::vector<ConditionalSet>{}), invalid_argument);
}

TEST(Intersection, Examples) {
    const auto v = C(3, {{1, 2}, {1}}), w = C(3, {{2, 3}, {}});
    EXPECT_EQ(cond_intersection(v, ConditionalSet::top(2, 3)), v);
    EXPECT_EQ(cond_intersection(v, w), C(3, {{2}, {}}));
    EXPECT_TRUE(cond_intersection(C(3, {{1}, {}}), C(3, {{2}, {}})).is_bottom());
    EXPECT_THROW(cond_intersection(std::vector<ConditionalSet>{}), invalid_argument);
}

TEST(Complement, Examples) {
    EXPECT_TRUE(cond_complement(ConditionalSet::top(2, 3)).is_bottom());
    EXPECT_EQ(cond_complement(ConditionalSet::bottom(2, 3)), ConditionalSet::top(2, 3));
    EXPECT_EQ(cond_complement(C(3, {{1, 2}, {1, 2, 3}})), C(3, {{3}, {}}));
    EXPECT_EQ(cond_complement(C(3, {{1}, {}})), C(3, {{2, 3}, {1, 2, 3}}));
}

TEST(Complement, EqualsBruteForceSupremumOnEverySmallSet) {
    std::size_t enumerated = 0;
    for (const auto& shape : {std::pair<std::size_t, std::size_t>{1, 3}, {2, 2}, {2, 3}, {3, 2}, {3, 3}})
        for (const auto& v : all_conditional_sets(shape.first, shape.second))
            EXPECT_EQ(cond_complement(v), oracle::brute_complement(v, &enumerated)) << v.str();
    EXPECT_GT(enumerated, 10000u);
}

TEST(Concatenation, Examples) {
    const auto v = C(3, {{1}, {1}}), w = C(3, {{2}, {}});
    EXPECT_EQ(concatenate_sets(std::vector{v}, {Event::full(2)}), v);
    EXPECT_EQ(concatenate_sets(std::vector{v, w}, {E(2, {1}), E(2, {2})}), C(3, {{1}, {}}));
    const auto bot = ConditionalSet::bottom(2, 3);
    EXPECT_TRUE(concatenate_sets(std::vector{bot, bot}, {E(2, {2}), E(2, {1})}).is_bottom());
    EXPECT_THROW(concatenate_sets(std::vector{v, w}, {E(2, {1}), E(2, {1})}), invalid_argument);
}

TEST(StableHull, Examples) {
    const auto h1 = stable_hull({PointFunction(3, {2, 0})});
    EXPECT_EQ(h1.fiber(0), P(3, {3}));
    EXPECT_EQ(h1.fiber(1), P(3, {1}));
    const auto h2 = stable_hull({PointFunction(2, {0, 0}), PointFunction(2, {1, 1})});
    EXPECT_EQ(h2.fiber(0), P(2, {1, 2}));
    EXPECT_EQ(h2.fiber(1), P(2, {1, 2}));
    // corners of {1,3} x {2,3} regenerate the product
    const auto h3 = stable_hull({PointFunction(3, {0, 1}), PointFunction(3, {2, 2})});
    EXPECT_EQ(h3.fiber(0), P(3, {1, 3}));
    EXPECT_EQ(h3.fiber(1), P(3, {2, 3}));
    EXPECT_THROW(stable_hull({}), invalid_argument);
}

TEST(CartesianProduct, Examples) {
    const auto x = ConditionalSet::top(2, 2), y = ConditionalSet::top(2, 3);
    EXPECT_TRUE(cartesian_product(x, y).is_top());
    const auto p = cartesian_product(C(2, {{1}, {}}), C(3, {{2}, {2}}));
    EXPECT_EQ(p.support(), E(2, {1}));
    EXPECT_EQ(p.fiber(0), PointSet::single(6, pair_index(0, 1, 3)));
    EXPECT_TRUE(cartesian_product(C(2, {{1}, {}}), C(3, {{}, {2}})).is_bottom());
}

TEST(LatticeOperations, MatchRawFiberBits) {
    auto r = rng(3);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 1 + r.below(4), m = 1 + r.below(5);
        const auto v = verify::random_set(r, n, m), w = verify::random_set(r, n, m);
        const auto u = cond_union(v, w), i = cond_intersection(v, w), c = cond_complement(v);
        for (std::size_t a = 0; a < n; ++a) {
            const Mask fv = v.raw_fibers()[a], fw = w.raw_fibers()[a];
            EXPECT_EQ(u.raw_fibers()[a], fv | fw);
            EXPECT_EQ(i.raw_fibers()[a], fv & fw);
            EXPECT_EQ(c.raw_fibers()[a], low_bits(m) & ~fv);
        }
        EXPECT_EQ(cond_inclusion(v, w), cond_intersection(v, w) == v);
        EXPECT_EQ(disjoint(v, w), cond_intersection(v, w).is_bottom());
    }
}

TEST(LatticeOperations, ElementwiseMembershipCharacterization) {
    // x|A in V|A for the largest A: membership is exactly the atoms where x lies in the fiber
    auto r = rng(4);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 1 + r.below(4), m = 1 + r.below(4);
        const auto v = verify::random_set(r, n, m);
        std::vector<std::size_t> xs;
        for (std::size_t a = 0; a < n; ++a) xs.push_back(r.below(m));
        const PointFunction x(m, xs);
        const Event mem = membership(x, v);
        for (std::size_t a = 0; a < n; ++a) EXPECT_EQ(mem.contains(a), v.support().contains(a) && v.fiber(a).contains(xs[a]));
    }
}
