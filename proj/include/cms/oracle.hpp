#pragma once

// Classical fiberwise reference computations. Each works atom by atom with
// ordinary finite measure theory on raw bit masks and point tables, without
// going through the conditional-set machinery it is used to check.

#include "cms/kernel_bridge.hpp"
#include "cms/product_rn.hpp"

namespace cms::oracle {

/// (V|A)^c as the supremum of every conditional set disjoint from V|A,
/// enumerating P(X). `enumerated` counts the sets visited.
inline ConditionalSet brute_complement(const ConditionalSet& v, std::size_t* enumerated = nullptr) {
    const std::size_t atoms = v.atoms(), points = v.points();
    if (atoms * points > 16) throw invalid_argument("brute-force complement limited to 16 atom-points");
    std::vector<Mask> sup(atoms, 0);
    const Mask per = low_bits(points);
    const std::size_t total = std::size_t{1} << (atoms * points);
    for (std::size_t code = 0; code < total; ++code) {
        // W meets V iff some atom carries a point in both fibers, with
        // unsupported atoms (empty fibers) meeting nothing.
        bool meets = false;
        for (std::size_t a = 0; a < atoms && !meets; ++a)
            meets = ((Mask(code) >> (a * points)) & per & v.raw_fibers()[a]) != 0;
        if (meets) continue;
        for (std::size_t a = 0; a < atoms; ++a) sup[a] |= (Mask(code) >> (a * points)) & per;
    }
    if (enumerated) *enumerated += total;
    return build_conditional_set(atoms, points, [&](std::size_t a) { return sup[a]; });
}

/// Atomwise Lebesgue sum over the field blocks: sum_b f(b) m(b), with
/// 0 * inf = 0. Empty for signed integrands with an infinite part.
inline std::optional<ExtScalarField> integral(const Integrand& f, const StableMeasure& mu) {
    std::vector<ExtRational> out;
    bool signed_f = false;
    for (std::size_t a = 0; a < f.atoms(); ++a)
        for (const auto& v : f.row(a))
            if (v.sign() < 0) signed_f = true;
    for (std::size_t a = 0; a < f.atoms(); ++a) {
        const auto& fm = mu.at(a);
        Rational pos = 0, neg = 0;
        bool pos_inf = false, neg_inf = false;
        for (std::size_t i = 0; i < fm.ring().blocks().size(); ++i) {
            const Rational& v = f.at(a, fm.ring().blocks()[i].points().front());
            const ExtRational& m = fm.block_masses()[i];
            if (v.is_zero() || m.is_zero()) continue;
            bool& inf = v.sign() > 0 ? pos_inf : neg_inf;
            if (m.is_infinite()) inf = true;
            else (v.sign() > 0 ? pos : neg) += abs(v) * m.value();
        }
        if (!signed_f) {
            out.push_back(pos_inf ? ExtRational::infinity() : ExtRational(pos));
            continue;
        }
        if (pos_inf || neg_inf) return std::nullopt;
        out.emplace_back(pos - neg);
    }
    return ExtScalarField(std::move(out));
}

/// Classical E[f(xi) | G] on each G-atom: weighted block average.
inline ScalarField conditional_expectation(const MeasureAlgebra& p, const RandomVariable& xi, const SubAlgebra& g,
                                           const std::vector<Rational>& f) {
    std::vector<Rational> out;
    for (const auto& b : g.blocks()) {
        Rational num = 0, den = 0;
        for (std::size_t a : b.atoms()) {
            num += p.weight(a) * f.at(xi(a));
            den += p.weight(a);
        }
        out.push_back(num / den);
    }
    return ScalarField(std::move(out));
}

/// Classical Caratheodory extension of a ring measure per atom: the ring
/// blocks keep their masses and the uncovered remainder, if any, gets +inf.
inline StableMeasure caratheodory_extension(const StableMeasure& premeasure) {
    std::vector<FiberMeasure> per;
    for (std::size_t a = 0; a < premeasure.atoms(); ++a) {
        const auto& fm = premeasure.at(a);
        std::vector<PointSet> blocks = fm.ring().blocks();
        std::vector<ExtRational> mass = fm.block_masses();
        Mask covered = 0;
        for (const auto& b : blocks) covered |= b.bits();
        const Mask rest = low_bits(premeasure.points()) & ~covered;
        if (rest) {
            blocks.emplace_back(premeasure.points(), rest);
            mass.push_back(ExtRational::infinity());
        }
        // SetRing sorts blocks; reorder masses to match.
        SetRing field(premeasure.points(), blocks);
        std::vector<ExtRational> sorted;
        for (const auto& b : field.blocks())
            for (std::size_t i = 0; i < blocks.size(); ++i)
                if (blocks[i] == b) sorted.push_back(mass[i]);
        per.emplace_back(std::move(field), std::move(sorted));
    }
    return StableMeasure(premeasure.points(), std::move(per));
}

/// Least-mass ring member containing the fiber, by scanning all members.
inline ExtScalarField outer_measure(const StableMeasure& premeasure, const ConditionalSet& v) {
    std::vector<ExtRational> out;
    for (std::size_t a = 0; a < v.atoms(); ++a) {
        if (!v.support().contains(a)) {
            out.emplace_back(0);
            continue;
        }
        std::optional<ExtRational> best;
        for (const auto& m : premeasure.at(a).ring().members())
            if (v.fiber(a).subset_of(m)) {
                const auto x = premeasure.at(a).mass(m);
                if (!best || x < *best) best = x;
            }
        out.push_back(best ? *best : ExtRational::infinity());
    }
    return ExtScalarField(std::move(out));
}

/// Block masses mu(b1) nu(b2) per atom on the rectangle field.
inline StableMeasure product_measure(const StableMeasure& mu, const StableMeasure& nu, const ProductSpace& ps) {
    std::vector<FiberMeasure> per;
    for (std::size_t a = 0; a < mu.atoms(); ++a) {
        std::vector<PointSet> blocks;
        std::vector<ExtRational> mass;
        const auto& r1 = mu.at(a).ring();
        const auto& r2 = nu.at(a).ring();
        for (std::size_t i = 0; i < r1.blocks().size(); ++i)
            for (std::size_t j = 0; j < r2.blocks().size(); ++j) {
                Mask m = 0;
                for (std::size_t x : r1.blocks()[i].points())
                    for (std::size_t y : r2.blocks()[j].points()) m |= Mask{1} << (x * ps.right() + y);
                blocks.emplace_back(ps.points(), m);
                mass.push_back(mu.at(a).block_masses()[i] * nu.at(a).block_masses()[j]);
            }
        SetRing field(ps.points(), blocks);
        std::vector<ExtRational> sorted;
        for (const auto& b : field.blocks())
            for (std::size_t i = 0; i < blocks.size(); ++i)
                if (blocks[i] == b) sorted.push_back(mass[i]);
        per.emplace_back(std::move(field), std::move(sorted));
    }
    return StableMeasure(ps.points(), std::move(per));
}

/// Joint masses of K (x) mu: block b x {j} gets mu(b) K(b, j).
inline StableMeasure markov_product(const StableMarkovKernel& k, const StableMeasure& mu, const ProductSpace& ps) {
    std::vector<FiberMeasure> per;
    for (std::size_t a = 0; a < mu.atoms(); ++a) {
        std::vector<PointSet> blocks;
        std::vector<ExtRational> mass;
        const auto& r1 = mu.at(a).ring();
        for (std::size_t i = 0; i < r1.blocks().size(); ++i) {
            const auto xs = r1.blocks()[i].points();
            for (std::size_t y = 0; y < ps.right(); ++y) {
                Mask m = 0;
                for (std::size_t x : xs) m |= Mask{1} << (x * ps.right() + y);
                blocks.emplace_back(ps.points(), m);
                mass.push_back(mu.at(a).block_masses()[i] * ExtRational(k.row(a, xs.front())[y]));
            }
        }
        SetRing field(ps.points(), blocks);
        std::vector<ExtRational> sorted;
        for (const auto& b : field.blocks())
            for (std::size_t i = 0; i < blocks.size(); ++i)
                if (blocks[i] == b) sorted.push_back(mass[i]);
        per.emplace_back(std::move(field), std::move(sorted));
    }
    return StableMeasure(ps.points(), std::move(per));
}

/// x-section read directly from the fiber bits.
inline ConditionalSet section(const ConditionalSet& z, const PointFunction& x, const ProductSpace& ps) {
    return build_conditional_set(z.atoms(), ps.right(), [&](std::size_t a) {
        return (z.raw_fibers()[a] >> (x(a) * ps.right())) & low_bits(ps.right());
    });
}

/// Classical positive set per atom: union of the blocks where mu2 >= mu1.
inline ConditionalSet positive_set(const StableMeasure& mu1, const StableMeasure& mu2) {
    return build_conditional_set(mu1.atoms(), mu1.points(), [&](std::size_t a) {
        Mask m = 0;
        const auto& bs = mu1.at(a).ring().blocks();
        for (std::size_t i = 0; i < bs.size(); ++i)
            if (mu1.at(a).block_masses()[i] <= mu2.at(a).block_masses()[i]) m |= bs[i].bits();
        return m;
    });
}

/// Point masses of a kernel read off as mu(L^0({e})) per atom.
inline std::vector<std::vector<ExtRational>> point_masses(const StableMeasure& mu) {
    std::vector<std::vector<ExtRational>> out(mu.atoms());
    for (std::size_t p = 0; p < mu.points(); ++p) {
        const auto m = eval(mu, ConditionalSet::uniform(Event::full(mu.atoms()), PointSet::single(mu.points(), p)));
        for (std::size_t a = 0; a < mu.atoms(); ++a) out[a].push_back(m[a]);
    }
    return out;
}

}  // namespace cms::oracle
