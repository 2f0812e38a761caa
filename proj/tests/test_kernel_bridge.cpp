#include "support.hpp"

using namespace fx;

namespace {

std::vector<std::vector<ExtRational>> rows(std::vector<std::vector<const char*>> t) {
    std::vector<std::vector<ExtRational>> out;
    for (const auto& r : t) {
        out.emplace_back();
        for (auto s : r) out.back().push_back(X(s));
    }
    return out;
}

std::vector<Rational> values(std::initializer_list<const char*> vs) {
    std::vector<Rational> out;
    for (auto s : vs) out.push_back(Q(s));
    return out;
}

const MeasureAlgebra& dice() {
    static const MeasureAlgebra p = MeasureAlgebra::uniform(6);
    return p;
}

const RandomVariable& die() {
    static const RandomVariable xi(6, {0, 1, 2, 3, 4, 5});
    return xi;
}

SubAlgebra parity() { return SubAlgebra(6, {E(6, {1, 3, 5}), E(6, {2, 4, 6})}); }

}  // namespace

TEST(KernelToMeasure, Examples) {
    const Kernel k = Kernel::from_point_masses(rows({{"1/2", "1/2"}, {"1/4", "3/4"}}));
    const auto mu = kernel_to_measure(k);
    EXPECT_EQ(eval(mu, C(2, {{1}, {1}})), XF({"1/2", "1/4"}));
    EXPECT_EQ(eval(mu, C(2, {{1, 2}, {}})), XF({"1", "0"}));
    EXPECT_TRUE(is_probability(mu));
}

TEST(KernelToMeasure, ConstantKernelGivesTheSameMassEverywhere) {
    const auto lambda = FiberMeasure::from_point_masses(SetRing::discrete(3), {X("1/6"), X("1/3"), X("1/2")});
    const auto mu = kernel_to_measure(Kernel::constant(3, lambda));
    EXPECT_EQ(eval(mu, ConditionalSet::uniform(Event::full(3), P(3, {2, 3}))), XF({"5/6", "5/6", "5/6"}));
    EXPECT_EQ(eval(mu, C(3, {{1}, {}, {3}})), XF({"1/6", "0", "1/2"}));
}

TEST(MeasureToKernel, RoundTripsOnCoordinatizedSpaces) {
    const GroundSpace ground({"m", "z", "t"}, std::vector<Rational>{Q("-1"), Q("0"), Q("2")});
    const Kernel k = Kernel::from_point_masses(rows({{"1/6", "1/3", "1/2"}}));
    EXPECT_EQ(measure_to_kernel(kernel_to_measure(k), ground), k);

    const GroundSpace two({"lo", "hi"}, std::vector<Rational>{Q("0"), Q("1")});
    const Kernel k2 = Kernel::from_point_masses(rows({{"1", "0"}, {"1/3", "2/3"}}));
    EXPECT_EQ(measure_to_kernel(kernel_to_measure(k2), two), k2);
}

TEST(MeasureToKernel, RoundTripsOnRandomProbabilities) {
    auto r = rng(21);
    for (int t = 0; t < 40; ++t) {
        const std::size_t n = 1 + r.below(3), m = 1 + r.below(4);
        std::vector<std::string> ids;
        std::vector<Rational> coords;
        for (std::size_t p = 0; p < m; ++p) {
            ids.push_back("p" + std::to_string(p));
            coords.push_back(Rational(static_cast<std::int64_t>(3 * p)) - Rational(static_cast<std::int64_t>(r.below(2))));
        }
        const GroundSpace ground(ids, coords);
        const auto mu = verify::random_probability(r, StableSigmaAlgebra::discrete(n, m), true);
        EXPECT_EQ(kernel_to_measure(measure_to_kernel(mu, ground)), mu);
    }
}

TEST(MeasureToKernel, NeedsCoordinates) {
    const auto mu = discrete_measure({{"1/2", "1/2"}});
    EXPECT_THROW(measure_to_kernel(mu, GroundSpace({"a", "b"})), invalid_argument);
}

TEST(ConditionalDistribution, Dice) {
    const auto nu = conditional_distribution(dice(), die(), parity());
    EXPECT_EQ(eval(nu, C(6, {{1, 3, 5}, {1, 3, 5}})), XF({"1", "0"}));
    EXPECT_EQ(eval(nu, C(6, {{1}, {2}})), XF({"1/3", "1/3"}));
    EXPECT_TRUE(is_probability(nu));
}

TEST(ConditionalExpectation, Dice) {
    EXPECT_EQ(conditional_expectation(dice(), die(), parity(), values({"1", "2", "3", "4", "5", "6"})), F({"3", "4"}));
    EXPECT_EQ(conditional_expectation(dice(), die(), parity(), values({"1", "0", "1", "0", "1", "0"})), F({"1", "0"}));
    EXPECT_EQ(conditional_expectation(dice(), die(), parity(), values({"1", "4", "9", "16", "25", "36"})), F({"35/3", "56/3"}));
}

TEST(ConditionalExpectation, FullAndTrivialSubAlgebras) {
    const auto f = values({"1", "2", "3", "4", "5", "6"});
    EXPECT_EQ(conditional_expectation(dice(), die(), SubAlgebra::full(6), f), F({"1", "2", "3", "4", "5", "6"}));
    EXPECT_EQ(conditional_expectation(dice(), die(), SubAlgebra::trivial(6), f), F({"7/2"}));
    EXPECT_EQ(expectation(dice(), die(), f), Q("7/2"));
}

TEST(ConditionalExpectation, MatchesElementaryFormulaOnRandomInputs) {
    auto r = rng(22);
    for (int t = 0; t < 60; ++t) {
        const std::size_t n = 1 + r.below(5), m = 1 + r.below(4);
        std::vector<Rational> w;
        for (std::size_t a = 0; a < n; ++a) w.push_back(Rational(static_cast<std::int64_t>(1 + r.below(4))));
        Rational s = 0;
        for (const auto& x : w) s += x;
        std::vector<std::string> ids;
        for (std::size_t a = 0; a < n; ++a) {
            w[a] = w[a] / s;
            ids.push_back("w" + std::to_string(a));
        }
        const MeasureAlgebra p(ids, w);
        std::vector<std::size_t> xs;
        for (std::size_t a = 0; a < n; ++a) xs.push_back(r.below(m));
        const RandomVariable xi(m, xs);
        std::vector<Event> blocks;
        for (const auto& b : verify::random_partition(r, n, 1 + r.below(n)))
            if (!b.is_empty()) blocks.push_back(b);
        const SubAlgebra g(n, blocks);
        std::vector<Rational> f;
        for (std::size_t e = 0; e < m; ++e) f.push_back(r.rational(-4, 4, 3));
        EXPECT_EQ(conditional_expectation(p, xi, g, f), oracle::conditional_expectation(p, xi, g, f));
        // tower property: averaging over G gives the plain expectation
        const auto ce = conditional_expectation(p, xi, g, f);
        const auto pg = g.induced(p);
        Rational tower = 0;
        for (std::size_t b = 0; b < g.size(); ++b) tower += pg.weight(b) * ce[b];
        EXPECT_EQ(tower, expectation(p, xi, f));
    }
}

TEST(Pushforward, Examples) {
    EXPECT_EQ(pushforward(dice(), die()), values({"1/6", "1/6", "1/6", "1/6", "1/6", "1/6"}));
    const RandomVariable parity_of(2, {1, 0, 1, 0, 1, 0});
    EXPECT_EQ(pushforward(dice(), parity_of), values({"1/2", "1/2"}));
}
