#include "support.hpp"

using namespace fx;

namespace {

/// Point masses per atom of a measure on a product ground space, flattened by pair index.
std::vector<std::vector<ExtRational>> masses(const StableMeasure& mu) { return oracle::point_masses(mu); }

std::vector<std::vector<ExtRational>> rows(std::vector<std::vector<const char*>> t) {
    std::vector<std::vector<ExtRational>> out;
    for (const auto& r : t) {
        out.emplace_back();
        for (auto s : r) out.back().push_back(X(s));
    }
    return out;
}

std::vector<Rational> qs(std::initializer_list<const char*> vs) {
    std::vector<Rational> out;
    for (auto s : vs) out.push_back(Q(s));
    return out;
}

ConditionalSet diagonal(std::size_t atoms, std::size_t n) {
    const ProductSpace ps(n, n);
    Mask m = 0;
    for (std::size_t i = 0; i < n; ++i) m |= Mask{1} << ps.pair(i, i);
    return ConditionalSet::uniform(Event::full(atoms), PointSet(n * n, m));
}

}  // namespace

TEST(Section, Examples) {
    const ProductSpace ps(2, 2);
    const auto z = diagonal(1, 2);
    EXPECT_EQ(section(z, PointFunction(2, {0}), ps), C(2, {{1}}));
    EXPECT_EQ(section(z, PointFunction(2, {1}), ps), C(2, {{2}}));
    EXPECT_TRUE(section(ConditionalSet::top(1, 4), PointFunction(2, {0}), ps).is_top());
    // a rectangle's x-section is its right side where x lies in the left side
    const auto rect = cartesian_product(C(2, {{1}, {1, 2}}), C(2, {{2}, {1}}));
    EXPECT_EQ(section(rect, PointFunction(2, {0, 1}), ps), C(2, {{2}, {1}}));
    EXPECT_EQ(section(rect, PointFunction(2, {1, 1}), ps), C(2, {{}, {1}}));
}

TEST(Section, AgreesWithOracleOnRandomSets) {
    auto r = rng(31);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 1 + r.below(3), l = 1 + r.below(3), k = 1 + r.below(3);
        const ProductSpace ps(l, k);
        const auto z = verify::random_set(r, n, l * k);
        std::vector<std::size_t> xs;
        for (std::size_t a = 0; a < n; ++a) xs.push_back(r.below(l));
        const PointFunction x(l, xs);
        EXPECT_EQ(section(z, x, ps), oracle::section(z, x, ps)) << z.str();
    }
}

TEST(ProductMeasure, DiagonalOfUniformSquares) {
    const auto u = discrete_measure({{"1/2", "1/2"}, {"1/2", "1/2"}});
    const ProductSpace ps(2, 2);
    const auto lam = product_measure(u, u, ps);
    EXPECT_EQ(eval(lam, diagonal(2, 2)), XF({"1/2", "1/2"}));
    EXPECT_EQ(lam, oracle::product_measure(u, u, ps));
    EXPECT_EQ(eval(lam, cartesian_product(C(2, {{1}, {}}), C(2, {{1, 2}, {1}}))), XF({"1/2", "0"}));
}

TEST(Fubini, AllThreeIntegralsAgree) {
    const auto mu = discrete_measure({{"1/2", "1/2"}, {"1/4", "3/4"}});
    const auto nu = discrete_measure({{"1/3", "2/3"}, {"1", "0"}});
    const ProductSpace ps(2, 2);
    // f(x, y) = (x + 1)(y + 1) at a1, x - y at a2
    const auto f = I({{"1", "2", "2", "4"}, {"0", "-1", "1", "0"}});
    const auto tri = fubini(f, mu, nu, ps);
    EXPECT_TRUE(tri.equal());
    EXPECT_EQ(tri.product, XF({"5/2", "3/4"}));
}

TEST(Fubini, AgreesWithOracleOnRandomMeasures) {
    auto r = rng(32);
    for (int t = 0; t < 60; ++t) {
        const std::size_t n = 1 + r.below(2), l = 1 + r.below(3), k = 1 + r.below(3);
        const ProductSpace ps(l, k);
        const auto dx = verify::random_sigma(r, n, l), dy = verify::random_sigma(r, n, k);
        const auto mu = verify::random_probability(r, dx, true), nu = verify::random_probability(r, dy, true);
        const auto lam = product_measure(mu, nu, ps);
        EXPECT_EQ(lam, oracle::product_measure(mu, nu, ps));
        const auto f = verify::random_integrand(r, ps.product_sigma(dx, dy), true);
        const auto tri = fubini(f, mu, nu, ps);
        EXPECT_TRUE(tri.equal());
        EXPECT_EQ(tri.product, *oracle::integral(f, oracle::product_measure(mu, nu, ps)));
    }
}

TEST(MarkovProduct, Example) {
    const auto mu = discrete_measure({{"1/2", "1/2"}});
    const StableMarkovKernel k(2, {{qs({"1/2", "1/2"}), qs({"0", "1"})}});
    const ProductSpace ps(2, 2);
    const auto lam = markov_product(k, mu, ps);
    EXPECT_EQ(masses(lam), rows({{"1/4", "1/4", "0", "1/2"}}));
    EXPECT_EQ(lam, oracle::markov_product(k, mu, ps));
    EXPECT_EQ(k(PointFunction(2, {1}), C(2, {{2}})), F({"1"}));
}

TEST(MarkovProduct, ConstantKernelGivesTheProductMeasure) {
    const auto mu = discrete_measure({{"1/3", "2/3"}, {"1", "0"}});
    const auto nu = discrete_measure({{"1/4", "3/4"}, {"1/2", "1/2"}});
    const StableMarkovKernel k(2, {{qs({"1/4", "3/4"}), qs({"1/4", "3/4"})}, {qs({"1/2", "1/2"}), qs({"1/2", "1/2"})}});
    const ProductSpace ps(2, 2);
    EXPECT_EQ(markov_product(k, mu, ps), product_measure(mu, nu, ps));
    const auto f = I({{"1", "-2", "3", "0"}, {"2", "2", "-1", "5"}});
    const auto [whole, iterated] = markov_fubini(f, k, mu, ps);
    EXPECT_EQ(whole, iterated);
    EXPECT_EQ(whole, fubini(f, mu, nu, ps).product);
}

TEST(MarkovProduct, RejectsBadRows) {
    EXPECT_THROW(StableMarkovKernel(2, {{qs({"1/2", "1/4"})}}), invalid_argument);
    EXPECT_THROW(StableMarkovKernel(2, {{qs({"3/2", "-1/2"})}}), invalid_argument);
}

TEST(Hahn, Examples) {
    const auto mu1 = discrete_measure({{"1/4", "1/2"}});
    const auto mu2 = discrete_measure({{"1/2", "1/4"}});
    EXPECT_EQ(hahn_positive_set(mu1, mu2), C(2, {{1}}));
    EXPECT_EQ(hahn_positive_set(mu1, mu1), oracle::positive_set(mu1, mu1));
    // two atoms, one with mu2 dominated everywhere
    const auto a = discrete_measure({{"1/2", "1/2"}, {"1/2", "1/2"}});
    const auto b = discrete_measure({{"1/4", "3/4"}, {"1", "0"}});
    EXPECT_EQ(hahn_positive_set(a, b), C(2, {{2}, {1}}));
}

TEST(Hahn, PositiveSetSplitsTheSignedMeasure) {
    auto r = rng(33);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 1 + r.below(3), m = 1 + r.below(4);
        const auto dom = verify::random_sigma(r, n, m);
        const auto mu1 = verify::random_measure(r, dom, false), mu2 = verify::random_measure(r, dom, false);
        const auto w = hahn_positive_set(mu1, mu2);
        EXPECT_EQ(w, oracle::positive_set(mu1, mu2));
        ASSERT_TRUE(mu1.measurable(w));
        const auto wc = cond_complement(w);
        for (const auto& v : dom.members()) {
            const auto inside = signed_difference(mu1, mu2, cond_intersection(v, w));
            const auto outside = signed_difference(mu1, mu2, cond_intersection(v, wc));
            EXPECT_TRUE(ScalarField(n, Rational(0)) <= inside) << v.str();
            EXPECT_TRUE(outside <= ScalarField(n, Rational(0))) << v.str();
        }
    }
}

TEST(Hahn, NeedsFiniteMeasures) {
    const auto mu1 = discrete_measure({{"inf", "1"}});
    const auto mu2 = discrete_measure({{"1", "1"}});
    EXPECT_THROW(hahn_positive_set(mu1, mu2), invalid_argument);
}

TEST(RadonNikodym, Examples) {
    const auto mu = discrete_measure({{"1/2", "1/2"}, {"1/2", "1/2"}});
    const auto nu = discrete_measure({{"1/4", "3/4"}, {"1", "0"}});
    const auto f = radon_nikodym(mu, nu);
    EXPECT_EQ(f, I({{"1/2", "3/2"}, {"2", "0"}}));
    EXPECT_FALSE(rn_certificate(f, mu, nu).has_value());
    EXPECT_EQ(radon_nikodym(mu, mu), Integrand::constant(2, 2, 1));
}

TEST(RadonNikodym, NotAbsolutelyContinuousCarriesAWitness) {
    const auto mu = discrete_measure({{"1", "0"}});
    const auto nu = discrete_measure({{"1/2", "1/2"}});
    const auto w = absolute_continuity_witness(mu, nu);
    ASSERT_TRUE(w.has_value());
    EXPECT_EQ(eval(mu, *w), XF({"0"}));
    try {
        radon_nikodym(mu, nu);
        FAIL();
    } catch (const invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find(w->str()), std::string::npos);
    }
}

TEST(RadonNikodym, DensityIsCertifiedOnRandomPairs) {
    auto r = rng(34);
    for (int t = 0; t < 60; ++t) {
        const auto dom = verify::random_sigma(r, 1 + r.below(3), 1 + r.below(4));
        const auto mu = verify::random_probability(r, dom, false);
        const auto nu = verify::random_probability(r, dom, true);
        const auto f = radon_nikodym(mu, nu);
        EXPECT_FALSE(rn_certificate(f, mu, nu, true).has_value());
        EXPECT_EQ(total_mass(nu), integrate(f, mu));
    }
}

TEST(RadonNikodym, ImprovementStepFromZero) {
    const auto one = discrete_measure({{"1"}});
    EXPECT_EQ(rn_improvement_step(I({{"0"}}), one, one), I({{"1/2"}}));
}

TEST(RadonNikodym, ImprovementStepsIncreaseTowardTheDensity) {
    const auto mu = discrete_measure({{"1/2", "1/2"}, {"1/2", "1/2"}});
    const auto nu = discrete_measure({{"1/4", "3/4"}, {"1", "0"}});
    const auto density = radon_nikodym(mu, nu);
    Integrand f = Integrand::constant(2, 2, 0);
    ScalarField gap = finite_part(total_mass(rn_residual(f, mu, nu)));
    for (int k = 0; k < 24; ++k) {
        const Integrand g = rn_improvement_step(f, mu, nu);
        EXPECT_TRUE(f <= g);
        EXPECT_TRUE(g <= density);
        const ScalarField next = finite_part(total_mass(rn_residual(g, mu, nu)));
        EXPECT_TRUE(next <= gap);
        f = g;
        gap = next;
    }
    // the residual mass shrinks geometrically
    EXPECT_TRUE(gap <= F({"1/100", "1/100"}));
}

TEST(RadonNikodym, ResidualRejectsFunctionsOutsideH) {
    const auto mu = discrete_measure({{"1/2", "1/2"}});
    EXPECT_THROW(rn_residual(I({{"3", "0"}}), mu, mu), invalid_argument);
    EXPECT_THROW(rn_residual(I({{"-1", "0"}}), mu, mu), invalid_argument);
}

TEST(DaniellStone, RecoversTheMeasureOfAnIntegral) {
    auto r = rng(35);
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = 1 + r.below(3), m = 1 + r.below(3);
        const auto mu = verify::random_probability(r, StableSigmaAlgebra::discrete(n, m), true);
        const auto got = daniell_stone_finite([&](const Integrand& f) { return integrate_finite(f, mu); }, n, m);
        EXPECT_EQ(got, mu);
    }
}

TEST(DaniellStone, DiracAndMixture) {
    const PointFunction x(3, {2, 0});
    auto at_x = [&](const Integrand& f) { return f(x); };
    EXPECT_EQ(daniell_stone_finite(at_x, 2, 3), dirac(x, StableSigmaAlgebra::discrete(2, 3)));

    const auto mu = discrete_measure({{"1/3", "1/3", "1/3"}, {"1", "0", "0"}});
    auto mix = [&](const Integrand& f) { return F({"1/2", "1/2"}) * integrate_finite(f, mu) + F({"1/2", "1/2"}) * f(x); };
    EXPECT_EQ(masses(daniell_stone_finite(mix, 2, 3)), rows({{"1/6", "1/6", "2/3"}, {"1", "0", "0"}}));
}

TEST(DaniellStone, ReportsTheRefutedPremise) {
    const auto mu = discrete_measure({{"1/2", "1/2"}, {"1/2", "1/2"}});
    auto message = [&](auto l) {
        try {
            daniell_stone_finite(l, 2, 2);
        } catch (const premise_error& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_EQ(message([&](const Integrand& f) { return F({"-1", "-1"}) * integrate_finite(f, mu); }), "functional is not positive");
    EXPECT_EQ(message([&](const Integrand& f) { return integrate_finite(f * f, mu); }), "functional is not L0-linear");
    // each atom sees the sum over all atoms. L0-linearity implies stability,
    // so whichever of the two probes runs first refutes it.
    const auto m = message([&](const Integrand& f) {
        const auto v = integrate_finite(f, mu);
        return ScalarField(2, v[0] + v[1]);
    });
    EXPECT_TRUE(m == "functional is not stable" || m == "functional is not L0-linear") << m;
}
