#pragma once

// Kernels versus stable measures, conditional distributions of random
// variables given a sub-algebra, and conditional expectation computed as a
// stable integral.

#include "cms/stable_integral.hpp"

namespace cms {

/// kappa(omega, .): one classical measure per atom, on that atom's field.
class Kernel {
public:
    Kernel() = default;
    Kernel(std::size_t points, std::vector<FiberMeasure> rows) : n_(points), rows_(std::move(rows)) {
        if (rows_.empty()) throw invalid_argument("kernel needs at least one atom");
        for (const auto& r : rows_) {
            if (r.ring().points() != n_) throw invalid_argument("kernel row over wrong ground space");
            if (!r.ring().is_field()) throw invalid_argument("kernel rows must be measures on fields");
        }
    }
    /// Point masses per atom on the power set of E.
    static Kernel from_point_masses(const std::vector<std::vector<ExtRational>>& masses) {
        if (masses.empty()) throw invalid_argument("kernel needs at least one atom");
        std::vector<FiberMeasure> rows;
        for (const auto& m : masses) rows.push_back(FiberMeasure::from_point_masses(SetRing::discrete(m.size()), m));
        return Kernel(masses.front().size(), std::move(rows));
    }
    /// The same measure at every atom.
    static Kernel constant(std::size_t atoms, const FiberMeasure& lambda) {
        return Kernel(lambda.ring().points(), std::vector<FiberMeasure>(atoms, lambda));
    }

    std::size_t atoms() const { return rows_.size(); }
    std::size_t points() const { return n_; }
    const FiberMeasure& row(std::size_t a) const { return rows_.at(a); }
    ExtRational operator()(std::size_t a, const PointSet& f) const { return rows_.at(a).mass(f); }

    bool is_probability() const {
        return std::all_of(rows_.begin(), rows_.end(), [](const FiberMeasure& r) { return r.total() == ExtRational(1); });
    }

    friend bool operator==(const Kernel&, const Kernel&) = default;

private:
    std::size_t n_ = 0;
    std::vector<FiberMeasure> rows_;
};

/// mu_kappa((sum L^0_m(F_k)|A_k)|A) = (sum kappa(., F_k)|A_k)|A + 0|A^c. The
/// sets of this form are the fiberwise family of the kernel's fields, which
/// is already a stable sigma-algebra, so mu_kappa is read off row by row.
inline StableMeasure kernel_to_measure(const Kernel& kappa) {
    std::vector<FiberMeasure> per;
    for (std::size_t a = 0; a < kappa.atoms(); ++a) per.push_back(kappa.row(a));
    return StableMeasure(kappa.points(), std::move(per));
}

/// Kernel of a stable probability measure on the discrete stable
/// sigma-algebra of a coordinatized ground space, via the conditional CDF
/// f(., q) = mu(L^0(]-inf, q])) at the rational thresholds (one below the
/// least coordinate, the midpoints, one above the greatest).
inline Kernel measure_to_kernel(const StableMeasure& mu, const GroundSpace& ground) {
    if (!ground.has_coordinates()) throw invalid_argument("measure_to_kernel needs numeric coordinates");
    if (ground.size() != mu.points()) throw invalid_argument("ground space does not match the measure");
    if (!is_probability(mu)) throw invalid_argument("measure_to_kernel needs a stable probability measure");
    for (std::size_t a = 0; a < mu.atoms(); ++a)
        if (!(mu.at(a).ring() == SetRing::discrete(mu.points())))
            throw invalid_argument("measure_to_kernel needs the discrete stable sigma-algebra");
    const std::size_t n = ground.size();
    std::vector<std::size_t> order(n);
    for (std::size_t p = 0; p < n; ++p) order[p] = p;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return ground.coordinate(x) < ground.coordinate(y); });
    std::vector<Rational> q{ground.coordinate(order.front()) - Rational(1)};
    for (std::size_t i = 0; i + 1 < n; ++i)
        q.push_back((ground.coordinate(order[i]) + ground.coordinate(order[i + 1])) / Rational(2));
    q.push_back(ground.coordinate(order.back()) + Rational(1));

    auto cdf_at_threshold = [&](const Rational& t) {
        Mask below = 0;
        for (std::size_t p = 0; p < n; ++p)
            if (ground.coordinate(p) <= t) below |= Mask{1} << p;
        return eval(mu, ConditionalSet::uniform(Event::full(mu.atoms()), PointSet(n, below)));
    };
    std::vector<ExtScalarField> f;
    for (const auto& t : q) f.push_back(cdf_at_threshold(t));
    // F(x) = inf over thresholds q > x of f(., q); f is increasing in q.
    auto cdf = [&](const Rational& x) -> const ExtScalarField& {
        for (std::size_t i = 0; i < q.size(); ++i)
            if (x < q[i]) return f[i];
        throw invalid_argument("threshold set does not cover the coordinates");
    };
    std::vector<std::vector<ExtRational>> masses(mu.atoms(), std::vector<ExtRational>(n, ExtRational(0)));
    for (std::size_t a = 0; a < mu.atoms(); ++a) {
        ExtRational prev = f.front()[a];
        for (std::size_t p : order) {
            const ExtRational cur = cdf(ground.coordinate(p))[a];
            masses[a][p] = cur - prev;
            prev = cur;
        }
    }
    return Kernel::from_point_masses(masses);
}

/// Random variable xi: Omega -> E, constant on the atoms of F.
using RandomVariable = PointFunction;

/// Sub-sigma-algebra G of F given by a partition of the F-atoms into G-atoms.
class SubAlgebra {
public:
    SubAlgebra(std::size_t f_atoms, std::vector<Event> blocks) : n_(f_atoms), blocks_(std::move(blocks)) {
        for (const auto& b : blocks_)
            if (b.is_empty() || b.size() != n_) throw invalid_argument("sub-algebra blocks must be nonempty");
        if (!is_partition(blocks_, n_)) throw invalid_argument("sub-algebra blocks must partition the atoms");
    }
    static SubAlgebra full(std::size_t f_atoms) {
        std::vector<Event> b;
        for (std::size_t a = 0; a < f_atoms; ++a) b.push_back(Event::atom(f_atoms, a));
        return SubAlgebra(f_atoms, std::move(b));
    }
    static SubAlgebra trivial(std::size_t f_atoms) { return SubAlgebra(f_atoms, {Event::full(f_atoms)}); }

    std::size_t f_atoms() const { return n_; }
    std::size_t size() const { return blocks_.size(); }
    const Event& block(std::size_t g) const { return blocks_.at(g); }
    const std::vector<Event>& blocks() const { return blocks_; }
    std::size_t block_of(std::size_t a) const {
        for (std::size_t g = 0; g < blocks_.size(); ++g)
            if (blocks_[g].contains(a)) return g;
        throw invalid_argument("atom outside the sub-algebra");
    }

    /// The measure algebra of G: block weights are sums of member weights.
    MeasureAlgebra induced(const MeasureAlgebra& p) const {
        if (p.size() != n_) throw invalid_argument("sub-algebra over wrong algebra");
        std::vector<std::string> ids;
        std::vector<Rational> w;
        for (const auto& b : blocks_) {
            std::string id;
            for (std::size_t a : b.atoms()) id += (id.empty() ? "" : "+") + p.id(a);
            ids.push_back(id);
            w.push_back(p.probability(b));
        }
        return MeasureAlgebra(std::move(ids), std::move(w));
    }

    friend bool operator==(const SubAlgebra&, const SubAlgebra&) = default;

private:
    std::size_t n_;
    std::vector<Event> blocks_;
};

/// P[xi in F | G] as a G-stable probability measure: mass of e at the G-atom g
/// is P(xi = e and g) / P(g).
inline StableMeasure conditional_distribution(const MeasureAlgebra& p, const RandomVariable& xi, const SubAlgebra& g) {
    if (xi.atoms() != p.size() || g.f_atoms() != p.size()) throw invalid_argument("random variable over wrong algebra");
    std::vector<std::vector<ExtRational>> masses;
    for (const auto& b : g.blocks()) {
        const Rational pb = p.probability(b);
        std::vector<Rational> joint(xi.points(), Rational(0));
        for (std::size_t a : b.atoms()) joint[xi(a)] += p.weight(a);
        std::vector<ExtRational> row;
        for (const auto& j : joint) row.emplace_back(j / pb);
        masses.push_back(std::move(row));
    }
    return kernel_to_measure(Kernel::from_point_masses(masses));
}

/// f o x for every x in L^0_{m,G}(E): the same point map at every G-atom.
inline Integrand lift_function(const std::vector<Rational>& f, std::size_t g_atoms) { return Integrand::lifted(g_atoms, f); }

/// E[f(xi) | G] = int lift(f) d nu_{xi,G}, one value per G-atom.
inline ScalarField conditional_expectation(const MeasureAlgebra& p, const RandomVariable& xi, const SubAlgebra& g,
                                           const std::vector<Rational>& f) {
    if (f.size() != xi.points()) throw invalid_argument("function must be defined on every point");
    return integrate_finite(lift_function(f, g.size()), conditional_distribution(p, xi, g));
}

/// P_xi = P o xi^{-1} as point masses on E.
inline std::vector<Rational> pushforward(const MeasureAlgebra& p, const RandomVariable& xi) {
    if (xi.atoms() != p.size()) throw invalid_argument("random variable over wrong algebra");
    std::vector<Rational> m(xi.points(), Rational(0));
    for (std::size_t a = 0; a < p.size(); ++a) m[xi(a)] += p.weight(a);
    return m;
}

/// E[f(xi)] = int f dP_xi.
inline Rational expectation(const MeasureAlgebra& p, const RandomVariable& xi, const std::vector<Rational>& f) {
    const auto m = pushforward(p, xi);
    Rational s = 0;
    for (std::size_t e = 0; e < m.size(); ++e) s += f.at(e) * m[e];
    return s;
}

}  // namespace cms
