#include "support.hpp"

using namespace fx;

namespace {

const StableMeasure& two_atom_measure() {
    static const StableMeasure mu = discrete_measure({{"1/3", "1/3", "1/3"}, {"1/2", "1/4", "1/4"}});
    return mu;
}

}  // namespace

TEST(Indicator, Examples) {
    EXPECT_EQ(indicator(ConditionalSet::top(2, 3)), I({{"1", "1", "1"}, {"1", "1", "1"}}));
    EXPECT_EQ(indicator(ConditionalSet::bottom(2, 3)), I({{"0", "0", "0"}, {"0", "0", "0"}}));
    EXPECT_EQ(indicator(C(3, {{2}, {}})), I({{"0", "1", "0"}, {"0", "0", "0"}}));
}

TEST(ElementaryIntegral, Example) {
    std::vector<ElementaryFunction::Term> terms;
    for (std::size_t p = 0; p < 3; ++p) {
        const Rational c(static_cast<std::int64_t>(p + 1));
        terms.push_back({ScalarField(2, c), ConditionalSet::uniform(Event::full(2), PointSet::single(3, p))});
    }
    const ElementaryFunction phi(terms);
    EXPECT_EQ(elementary_integral(phi, two_atom_measure()), XF({"2", "7/4"}));
    EXPECT_EQ(phi.as_integrand(), I({{"1", "2", "3"}, {"1", "2", "3"}}));
}

TEST(ElementaryIntegral, ZeroTimesInfinityIsZero) {
    const auto mu = discrete_measure({{"inf", "1"}});
    const ElementaryFunction phi({{F({"0"}), C(2, {{1}})}, {F({"3"}), C(2, {{2}})}});
    EXPECT_EQ(elementary_integral(phi, mu), XF({"3"}));
}

TEST(ElementaryFunction, RejectsBadCells) {
    EXPECT_THROW(ElementaryFunction({{F({"1"}), C(2, {{1}})}}), invalid_argument);
    EXPECT_THROW(ElementaryFunction({{F({"1"}), C(2, {{1, 2}})}, {F({"1"}), C(2, {{2}})}}), invalid_argument);
    EXPECT_THROW(ElementaryFunction({{F({"-1"}), C(2, {{1, 2}})}}), invalid_argument);
}

TEST(DyadicApproximation, Examples) {
    const auto f = I({{"1/3", "5/2", "7"}});
    EXPECT_EQ(dyadic_approximation(f, 2).as_integrand(), I({{"1/4", "2", "2"}}));
    EXPECT_EQ(dyadic_approximation(f, 0).as_integrand(), I({{"0", "0", "0"}}));
    EXPECT_EQ(dyadic_approximation(I({{"3/4"}}), 2).as_integrand(), I({{"3/4"}}));
}

TEST(DyadicApproximation, IncreasesToTheIntegrand) {
    auto r = rng(11);
    for (int t = 0; t < 40; ++t) {
        const auto dom = verify::random_sigma(r, 1 + r.below(3), 1 + r.below(3));
        const auto f = verify::random_integrand(r, dom, false);
        Integrand prev = dyadic_approximation(f, 0).as_integrand();
        for (unsigned n = 1; n <= 6; ++n) {
            const Integrand cur = dyadic_approximation(f, n).as_integrand();
            EXPECT_TRUE(prev <= cur);
            EXPECT_TRUE(cur <= f);
            prev = cur;
        }
    }
}

TEST(Integrate, Examples) {
    const auto& mu = two_atom_measure();
    EXPECT_EQ(integrate(I({{"1", "2", "3"}, {"1", "2", "3"}}), mu), XF({"2", "7/4"}));
    EXPECT_EQ(integrate(I({{"1/3", "0", "0"}, {"0", "0", "0"}}), mu), XF({"1/9", "0"}));
    EXPECT_EQ(integrate(I({{"2", "-1", "-1"}, {"-1", "2", "2"}}), mu), XF({"0", "1/2"}));
    EXPECT_EQ(integrate_finite(indicator(C(3, {{1, 2}, {3}})), mu), F({"2/3", "1/4"}));
}

TEST(Integrate, InfiniteMasses) {
    const auto mu = discrete_measure({{"1", "inf"}});
    EXPECT_EQ(integrate(I({{"1", "1/2"}}), mu), XF({"inf"}));
    EXPECT_EQ(integrate(I({{"1", "0"}}), mu), XF({"1"}));
    EXPECT_THROW(integrate(I({{"1", "-1"}}), mu), invalid_argument);
    EXPECT_THROW(integrate_finite(I({{"1", "1"}}), mu), invalid_argument);
}

TEST(Integrate, RejectsNonMeasurableIntegrands) {
    const StableMeasure mu(2, {FiberMeasure(SetRing::trivial(2), {X("1")})});
    EXPECT_EQ(integrate(I({{"3", "3"}}), mu), XF({"3"}));
    EXPECT_THROW(integrate(I({{"1", "2"}}), mu), invalid_argument);
}

TEST(Integrate, SupremumIsAttainedOnceCellsAndCoefficientsSettle) {
    auto r = rng(12);
    for (int t = 0; t < 60; ++t) {
        const auto dom = verify::random_sigma(r, 1 + r.below(3), 1 + r.below(3));
        const auto mu = verify::random_measure(r, dom, t % 3 == 0);
        const auto f = verify::random_dyadic_integrand(r, dom);
        // values have denominators up to 8, so the coefficients are exact from level 3 on
        const unsigned n = std::max(stabilization_level(f), 3U);
        EXPECT_EQ(integrate(f, mu), dyadic_integral(f, mu, n));
        EXPECT_EQ(integrate(f, mu), dyadic_integral(f, mu, n + 3));
        for (unsigned k = 0; k < n; ++k) EXPECT_TRUE(dyadic_integral(f, mu, k) <= dyadic_integral(f, mu, k + 1));
    }
}

TEST(Integrate, AgreesWithPointwiseSumAndIsStableAndLinear) {
    auto r = rng(13);
    for (int t = 0; t < 80; ++t) {
        const std::size_t n = 1 + r.below(3), m = 1 + r.below(4);
        const auto dom = verify::random_sigma(r, n, m);
        const auto mu = verify::random_probability(r, dom, t % 2 == 0);
        const auto f = verify::random_integrand(r, dom, true), g = verify::random_integrand(r, dom, true);
        const auto jf = integrate(f, mu), jg = integrate(g, mu);
        EXPECT_EQ(jf, *oracle::integral(f, mu));
        std::vector<Rational> cv;
        for (std::size_t a = 0; a < n; ++a) cv.push_back(r.rational(-3, 3, 4));
        const ScalarField c(cv);
        EXPECT_EQ(integrate(c * f + g, mu), extend(c) * jf + jg);
        const auto part = verify::random_partition(r, n, 2);
        const auto cat = concatenate_integrands({f, g}, part);
        EXPECT_EQ(finite_part(integrate(cat, mu)), concatenate_field(std::vector{finite_part(jf), finite_part(jg)}, part));
        if (f <= g) EXPECT_TRUE(jf <= jg);
    }
}
