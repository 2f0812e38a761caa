#include "support.hpp"

using namespace fx;

namespace {

/// Pre-measure on a 1-atom ring with blocks {1,2}, {3,4} of masses 1/3, 2/3.
StableMeasure block_ring() {
    return StableMeasure(4, {FiberMeasure(SetRing(4, {P(4, {1, 2}), P(4, {3, 4})}), {X("1/3"), X("2/3")})});
}

}  // namespace

TEST(Eval, Examples) {
    const auto mu = discrete_measure({{"1/3", "1/3", "1/3"}, {"1/2", "1/4", "1/4"}});
    EXPECT_EQ(eval(mu, ConditionalSet::bottom(2, 3)), XF({"0", "0"}));
    EXPECT_EQ(eval(mu, ConditionalSet::top(2, 3)), XF({"1", "1"}));
    EXPECT_EQ(eval(mu, C(3, {{1, 2}, {}})), XF({"2/3", "0"}));
    EXPECT_TRUE(is_probability(mu));
}

TEST(Eval, RejectsSetsOutsideTheDomain) {
    const StableMeasure mu = block_ring();
    try {
        eval(mu, C(4, {{1}}));
        FAIL();
    } catch (const invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("not measurable"), std::string::npos);
    }
}

TEST(Axioms, HoldForRandomMeasuresIncludingInfiniteOnes) {
    auto r = rng(6);
    for (int t = 0; t < 40; ++t) {
        const std::size_t n = 1 + r.below(3), m = 1 + r.below(3);
        const auto mu = verify::random_measure(r, verify::random_sigma(r, n, m), t % 2 == 0);
        const auto rep = check_measure_axioms(mu);
        EXPECT_TRUE(rep.ok) << rep.axiom << " " << rep.witness;
    }
}

TEST(Axioms, CorruptedMassTableFailsAdditivity) {
    const auto mu = discrete_measure({{"1/2", "1/2"}});
    // one extra unit on every supported atom: not additive over disjoint sets
    auto bad = [&](const ConditionalSet& v) {
        auto x = eval(mu, v);
        std::vector<ExtRational> out(x.begin(), x.end());
        for (std::size_t a : v.support().atoms()) out[a] += ExtRational(1);
        return ExtScalarField(out);
    };
    const auto rep = check_measure_axioms(bad, mu.ring_domain().members());
    EXPECT_FALSE(rep.ok);
    EXPECT_EQ(rep.axiom, "M2");
    EXPECT_FALSE(rep.witness.empty());
}

TEST(Dirac, Examples) {
    const PointFunction x(2, {0, 1});
    const auto d = dirac(x, StableSigmaAlgebra::discrete(2, 2));
    EXPECT_EQ(eval(d, ConditionalSet::top(2, 2)), XF({"1", "1"}));
    EXPECT_EQ(eval(d, ConditionalSet::bottom(2, 2)), XF({"0", "0"}));
    EXPECT_EQ(eval(d, C(2, {{1}, {1}})), XF({"1", "0"}));
    EXPECT_TRUE(check_measure_axioms(d).ok);
}

TEST(OuterMeasure, Examples) {
    const OuterMeasure outer(block_ring());
    EXPECT_EQ(outer(C(4, {{1, 2}})), XF({"1/3"}));
    EXPECT_EQ(outer(C(4, {{1}})), XF({"1/3"}));
    EXPECT_EQ(outer(C(4, {{2, 3}})), XF({"1"}));
    // nothing in a ring over {1} covers point 2
    const StableMeasure small(2, {FiberMeasure(SetRing(2, {P(2, {1})}), {X("1/2")}),
                                  FiberMeasure(SetRing(2, {P(2, {1})}), {X("1/2")})});
    const OuterMeasure o2(small);
    EXPECT_EQ(o2(C(2, {{1, 2}, {1}})), XF({"inf", "1/2"}));
    EXPECT_EQ(o2.coverable_event(C(2, {{1, 2}, {1}})), E(2, {2}));
}

TEST(OuterMeasure, ShortcutMatchesCoverEnumerationAndClassicalInfimum) {
    auto r = rng(7);
    for (int t = 0; t < 40; ++t) {
        const std::size_t n = 1 + r.below(2), m = 1 + r.below(3);
        std::vector<SetRing> rings;
        for (std::size_t a = 0; a < n; ++a) rings.push_back(verify::random_ring(r, m));
        const auto pm = verify::random_measure(r, StableRing(m, rings), t % 3 == 0);
        const OuterMeasure outer(pm);
        const auto sets = all_conditional_sets(n, m);
        for (const auto& v : sets) {
            EXPECT_EQ(outer(v), outer.by_cover_enumeration(v)) << v.str();
            EXPECT_EQ(outer(v), oracle::outer_measure(pm, v)) << v.str();
        }
        const auto rep = check_outer_axioms(outer, sets);
        EXPECT_TRUE(rep.ok) << rep.axiom << " " << rep.witness;
    }
}

TEST(Caratheodory, MeasurabilityExamples) {
    const OuterMeasure outer(block_ring());
    EXPECT_TRUE(is_caratheodory_measurable(outer, ConditionalSet::top(1, 4)));
    EXPECT_TRUE(is_caratheodory_measurable(outer, ConditionalSet::bottom(1, 4)));
    EXPECT_TRUE(is_caratheodory_measurable(outer, C(4, {{1, 2}})));
    EXPECT_TRUE(is_caratheodory_measurable(outer, C(4, {{3, 4}})));
    EXPECT_FALSE(is_caratheodory_measurable(outer, C(4, {{1}})));
    EXPECT_FALSE(is_caratheodory_measurable(outer, C(4, {{1, 3}})));
}

TEST(Caratheodory, ExtensionExamples) {
    const auto mu = discrete_measure({{"1/2", "1/2"}, {"1", "0"}});
    EXPECT_EQ(caratheodory_extend(mu), mu);

    const auto ext = caratheodory_extend(block_ring());
    EXPECT_EQ(ext.at(0).ring(), SetRing(4, {P(4, {1, 2}), P(4, {3, 4})}));
    EXPECT_EQ(eval(ext, C(4, {{1, 2}})), XF({"1/3"}));
    EXPECT_EQ(eval(ext, C(4, {{3, 4}})), XF({"2/3"}));
    EXPECT_EQ(eval(ext, ConditionalSet::top(1, 4)), XF({"1"}));

    // two atoms, mixed support: a1 has the block ring, a2 only covers {1}
    const StableMeasure mixed(4, {FiberMeasure(SetRing(4, {P(4, {1, 2}), P(4, {3, 4})}), {X("1/3"), X("2/3")}),
                                  FiberMeasure(SetRing(4, {P(4, {1})}), {X("1/2")})});
    const auto e2 = caratheodory_extend(mixed);
    EXPECT_EQ(e2, oracle::caratheodory_extension(mixed));
    EXPECT_EQ(eval(e2, ConditionalSet::top(2, 4)), XF({"1", "inf"}));
    EXPECT_EQ(eval(e2, C(4, {{}, {1}})), XF({"0", "1/2"}));
}

TEST(Caratheodory, ExtensionMatchesClassicalExtensionOnRandomRings) {
    auto r = rng(8);
    for (int t = 0; t < 40; ++t) {
        const std::size_t n = 1 + r.below(3), m = 1 + r.below(4);
        std::vector<SetRing> rings;
        for (std::size_t a = 0; a < n; ++a) rings.push_back(verify::random_ring(r, m));
        const StableRing ring(m, rings);
        const auto pm = verify::random_measure(r, ring, t % 4 == 0);
        const auto ext = caratheodory_extend(pm);
        EXPECT_EQ(ext, oracle::caratheodory_extension(pm));
        for (const auto& v : ring.members()) EXPECT_EQ(eval(ext, v), eval(pm, v)) << v.str();
    }
}

TEST(Uniqueness, EqualMeasuresAgree) {
    const auto mu = discrete_measure({{"1/4", "3/4"}, {"1", "0"}});
    const auto gen = StableSigmaAlgebra::discrete(2, 2).members();
    EXPECT_TRUE(uniqueness_preconditions(mu, mu, gen));
    EXPECT_TRUE(uniqueness_check(mu, mu, gen.members()));
}

TEST(Uniqueness, RectanglesDetermineTheProductMeasure) {
    const auto mu = discrete_measure({{"1/4", "3/4"}, {"1/2", "1/2"}});
    const auto nu = discrete_measure({{"1/3", "2/3"}, {"1", "0"}});
    const ProductSpace ps(2, 2);
    const auto lam = product_measure(mu, nu, ps);
    const auto other = oracle::product_measure(mu, nu, ps);
    std::vector<ConditionalSet> rects;
    for (const auto& v : StableSigmaAlgebra::discrete(2, 2).members())
        for (const auto& w : StableSigmaAlgebra::discrete(2, 2).members()) rects.push_back(cartesian_product(v, w));
    const StableCollection gen(rects);
    ASSERT_TRUE(uniqueness_preconditions(lam, other, gen));
    EXPECT_TRUE(uniqueness_check(lam, other, gen.members()));
}

TEST(Uniqueness, FailsWithoutIntersectionClosure) {
    // agree on {1,2} and {2,3}, differ on the generated power set
    const auto p = discrete_measure({{"1/4", "1/4", "1/4", "1/4"}});
    const auto q = discrete_measure({{"1/2", "0", "1/2", "0"}});
    const std::vector<ConditionalSet> gen{C(4, {{1, 2}}), C(4, {{2, 3}})};
    for (const auto& g : gen) EXPECT_EQ(eval(p, g), eval(q, g));
    EXPECT_FALSE(uniqueness_preconditions(p, q, StableCollection(gen)));
    EXPECT_FALSE(uniqueness_check(p, q, gen));
    EXPECT_NE(caratheodory_extend(p), caratheodory_extend(q));
}
