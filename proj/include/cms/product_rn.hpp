#pragma once

// Products of stable measure spaces (sections, product measure, Fubini,
// stable Markov kernels), the positive-set lemma behind Radon-Nikodym, the
// Radon-Nikodym density, and the finite Daniell-Stone construction.

#include "cms/stable_integral.hpp"

#include <functional>
#include <random>

namespace cms {

/// E1 x E2 with pair (i, j) stored at index i * right + j.
class ProductSpace {
public:
    ProductSpace(std::size_t left, std::size_t right) : l_(left), r_(right) {
        if (left == 0 || right == 0) throw invalid_argument("factors must be nonempty");
        if (left * right > max_points) throw invalid_argument("product ground space too large");
    }
    std::size_t left() const { return l_; }
    std::size_t right() const { return r_; }
    std::size_t points() const { return l_ * r_; }
    std::size_t pair(std::size_t i, std::size_t j) const { return pair_index(i, j, r_); }
    std::size_t left_of(std::size_t p) const { return p / r_; }
    std::size_t right_of(std::size_t p) const { return p % r_; }

    PointSet rectangle(const PointSet& f, const PointSet& g) const {
        Mask m = 0;
        for (std::size_t i : f.points())
            for (std::size_t j : g.points()) m |= Mask{1} << pair(i, j);
        return PointSet(points(), m);
    }
    /// The field generated by rectangles of field members: blocks b1 x b2.
    SetRing product_field(const SetRing& f, const SetRing& g) const {
        std::vector<PointSet> blocks;
        for (const auto& b1 : f.blocks())
            for (const auto& b2 : g.blocks()) blocks.push_back(rectangle(b1, b2));
        return SetRing(points(), std::move(blocks));
    }
    StableSigmaAlgebra product_sigma(const FiberwiseFamily& x, const FiberwiseFamily& y) const {
        if (x.atoms() != y.atoms()) throw invalid_argument("factors over different algebras");
        std::vector<SetRing> fields;
        for (std::size_t a = 0; a < x.atoms(); ++a) fields.push_back(product_field(x.ring(a), y.ring(a)));
        return StableSigmaAlgebra(points(), std::move(fields));
    }

    friend bool operator==(const ProductSpace&, const ProductSpace&) = default;

private:
    std::size_t l_, r_;
};

/// Conditional x-section: D* = largest event inside the support on which
/// some y has (x, y) in Z; the fiber there is {y : (x(a), y) in fiber_a(Z)}.
inline ConditionalSet section(const ConditionalSet& z, const PointFunction& x, const ProductSpace& ps) {
    if (z.points() != ps.points() || x.points() != ps.left() || x.atoms() != z.atoms())
        throw invalid_argument("section over wrong space");
    auto ys = [&](std::size_t a) {
        Mask m = 0;
        for (std::size_t j = 0; j < ps.right(); ++j)
            if (z.fiber(a).contains(ps.pair(x(a), j))) m |= Mask{1} << j;
        return m;
    };
    const Event d = largest_event(z.atoms(), [&](const Event& b) {
        for (std::size_t a : b.atoms())
            if (!z.support().contains(a) || ys(a) == 0) return false;
        return true;
    });
    return build_conditional_set(z.atoms(), ps.right(), [&](std::size_t a) { return d.contains(a) ? ys(a) : Mask{0}; });
}

/// Conditional y-section, symmetric to `section`.
inline ConditionalSet y_section(const ConditionalSet& z, const PointFunction& y, const ProductSpace& ps) {
    if (z.points() != ps.points() || y.points() != ps.right() || y.atoms() != z.atoms())
        throw invalid_argument("section over wrong space");
    auto xs = [&](std::size_t a) {
        Mask m = 0;
        for (std::size_t i = 0; i < ps.left(); ++i)
            if (z.fiber(a).contains(ps.pair(i, y(a)))) m |= Mask{1} << i;
        return m;
    };
    const Event d = largest_event(z.atoms(), [&](const Event& b) {
        for (std::size_t a : b.atoms())
            if (!z.support().contains(a) || xs(a) == 0) return false;
        return true;
    });
    return build_conditional_set(z.atoms(), ps.left(), [&](std::size_t a) { return d.contains(a) ? xs(a) : Mask{0}; });
}

/// f_x(y) = f(x, y).
inline Integrand section(const Integrand& f, const PointFunction& x, const ProductSpace& ps) {
    std::vector<std::vector<Rational>> t(f.atoms());
    for (std::size_t a = 0; a < f.atoms(); ++a)
        for (std::size_t j = 0; j < ps.right(); ++j) t[a].push_back(f.at(a, ps.pair(x(a), j)));
    return Integrand(ps.right(), std::move(t));
}

/// f_y(x) = f(x, y).
inline Integrand y_section(const Integrand& f, const PointFunction& y, const ProductSpace& ps) {
    std::vector<std::vector<Rational>> t(f.atoms());
    for (std::size_t a = 0; a < f.atoms(); ++a)
        for (std::size_t i = 0; i < ps.left(); ++i) t[a].push_back(f.at(a, ps.pair(i, y(a))));
    return Integrand(ps.left(), std::move(t));
}

/// The integrand x -> h(x) on the left factor for a stable map h of point functions.
template <class H>
Integrand integrand_from(std::size_t atoms, std::size_t points, H&& h) {
    std::vector<std::vector<Rational>> t(atoms, std::vector<Rational>(points));
    for (std::size_t p = 0; p < points; ++p) {
        const ScalarField v = h(PointFunction::constant(atoms, points, p));
        for (std::size_t a = 0; a < atoms; ++a) t[a][p] = v[a];
    }
    return Integrand(points, std::move(t));
}

/// lambda(Z|C) = int_X s^X_{Z|C} dmu with s^X_{Z|C}(x) = nu((Z|C)_x), evaluated
/// on the blocks of the product sigma-algebra.
inline StableMeasure product_measure(const StableMeasure& mu, const StableMeasure& nu, const ProductSpace& ps) {
    if (mu.atoms() != nu.atoms() || mu.points() != ps.left() || nu.points() != ps.right())
        throw invalid_argument("factors do not match the product space");
    if (!mu.is_measure() || !nu.is_measure()) throw invalid_argument("product needs measures on sigma-algebras");
    if (!is_finite_measure(mu) || !is_finite_measure(nu)) throw invalid_argument("product needs finite measures");
    const auto sigma = ps.product_sigma(mu.domain(), nu.domain());
    std::vector<FiberMeasure> per;
    for (std::size_t a = 0; a < mu.atoms(); ++a) {
        std::vector<ExtRational> m;
        for (const auto& b : sigma.field(a).blocks()) {
            const auto z = ConditionalSet::uniform(Event::atom(mu.atoms(), a), b);
            const Integrand s = integrand_from(mu.atoms(), ps.left(),
                                               [&](const PointFunction& x) { return finite_part(eval(nu, section(z, x, ps))); });
            m.push_back(integrate(s, mu)[a]);
        }
        per.emplace_back(sigma.field(a), std::move(m));
    }
    return StableMeasure(ps.points(), std::move(per));
}

struct FubiniTriple {
    ExtScalarField product;        ///< int f d(mu x nu)
    ExtScalarField left_iterated;  ///< int_X (int_Y f_x dnu) dmu
    ExtScalarField right_iterated; ///< int_Y (int_X f_y dmu) dnu
    bool equal() const { return product == left_iterated && product == right_iterated; }
};

inline FubiniTriple fubini(const Integrand& f, const StableMeasure& mu, const StableMeasure& nu, const ProductSpace& ps) {
    const StableMeasure lambda = product_measure(mu, nu, ps);
    FubiniTriple r;
    r.product = integrate(f, lambda);
    const Integrand inner_y = integrand_from(mu.atoms(), ps.left(), [&](const PointFunction& x) {
        return finite_part(integrate(section(f, x, ps), nu));
    });
    r.left_iterated = integrate(inner_y, mu);
    const Integrand inner_x = integrand_from(nu.atoms(), ps.right(), [&](const PointFunction& y) {
        return finite_part(integrate(y_section(f, y, ps), mu));
    });
    r.right_iterated = integrate(inner_x, nu);
    return r;
}

/// K(x, .) per atom: row i is a probability vector on the right points.
class StableMarkovKernel {
public:
    StableMarkovKernel(std::size_t right_points, std::vector<std::vector<std::vector<Rational>>> rows)
        : r_(right_points), rows_(std::move(rows)) {
        if (rows_.empty()) throw invalid_argument("kernel needs at least one atom");
        for (const auto& per : rows_)
            for (const auto& row : per) {
                if (row.size() != r_) throw invalid_argument("kernel row over wrong space");
                Rational s = 0;
                for (const auto& v : row) {
                    if (v.sign() < 0) throw invalid_argument("kernel rows must be nonnegative");
                    s += v;
                }
                if (s != Rational(1)) throw invalid_argument("kernel rows must sum to 1");
            }
    }
    std::size_t atoms() const { return rows_.size(); }
    std::size_t left_points() const { return rows_.front().size(); }
    std::size_t right_points() const { return r_; }
    const std::vector<Rational>& row(std::size_t a, std::size_t i) const { return rows_.at(a).at(i); }

    /// K(x, W|B) atomwise: row mass of the fiber on the support, 0 off it.
    ScalarField operator()(const PointFunction& x, const ConditionalSet& w) const {
        std::vector<Rational> v(atoms(), Rational(0));
        for (std::size_t a : w.support().atoms())
            for (std::size_t j : w.fiber(a).points()) v[a] += rows_[a][x(a)][j];
        return ScalarField(std::move(v));
    }

    /// Rows agree within every block of the left fields.
    bool is_measurable(const FiberwiseFamily& left) const {
        for (std::size_t a = 0; a < atoms(); ++a)
            for (const auto& b : left.ring(a).blocks()) {
                const auto ps = b.points();
                for (std::size_t i : ps)
                    if (rows_[a][i] != rows_[a][ps.front()]) return false;
            }
        return true;
    }

private:
    std::size_t r_;
    std::vector<std::vector<std::vector<Rational>>> rows_;
};

/// K (x) mu (V|A) = int_X K(x, (V|A)_x) dmu on the product of mu's
/// sigma-algebra with the discrete one on the right.
inline StableMeasure markov_product(const StableMarkovKernel& k, const StableMeasure& mu, const ProductSpace& ps) {
    if (k.atoms() != mu.atoms() || k.left_points() != ps.left() || k.right_points() != ps.right() || mu.points() != ps.left())
        throw invalid_argument("kernel does not match the product space");
    if (!is_probability(mu)) throw invalid_argument("markov product needs a stable probability measure");
    if (!k.is_measurable(mu.domain())) throw invalid_argument("kernel is not measurable in the left argument");
    std::vector<FiberMeasure> per;
    for (std::size_t a = 0; a < mu.atoms(); ++a) {
        const SetRing field = ps.product_field(mu.at(a).ring(), SetRing::discrete(ps.right()));
        std::vector<ExtRational> m;
        for (const auto& b : field.blocks()) {
            const auto z = ConditionalSet::uniform(Event::atom(mu.atoms(), a), b);
            const Integrand s = integrand_from(mu.atoms(), ps.left(),
                                               [&](const PointFunction& x) { return k(x, section(z, x, ps)); });
            m.push_back(integrate(s, mu)[a]);
        }
        per.emplace_back(field, std::move(m));
    }
    return StableMeasure(ps.points(), std::move(per));
}

/// (int f d(K x mu), int_X int_Y f(x, y) K(x, dy) dmu).
inline std::pair<ExtScalarField, ExtScalarField> markov_fubini(const Integrand& f, const StableMarkovKernel& k,
                                                              const StableMeasure& mu, const ProductSpace& ps) {
    const ExtScalarField joint = integrate(f, markov_product(k, mu, ps));
    const Integrand inner = integrand_from(mu.atoms(), ps.left(), [&](const PointFunction& x) {
        std::vector<Rational> v(mu.atoms(), Rational(0));
        for (std::size_t a = 0; a < mu.atoms(); ++a)
            for (std::size_t j = 0; j < ps.right(); ++j) v[a] += f.at(a, ps.pair(x(a), j)) * k.row(a, x(a))[j];
        return ScalarField(std::move(v));
    });
    return {joint, integrate(inner, mu)};
}

namespace detail {
inline void check_same_domain(const StableMeasure& m1, const StableMeasure& m2) {
    if (m1.atoms() != m2.atoms() || m1.points() != m2.points()) throw invalid_argument("measures over different spaces");
    for (std::size_t a = 0; a < m1.atoms(); ++a)
        if (!(m1.at(a).ring() == m2.at(a).ring())) throw invalid_argument("measures on different sigma-algebras");
    if (!m1.is_measure()) throw invalid_argument("measures must live on a stable sigma-algebra");
}
}  // namespace detail

/// c * mu with a nonnegative field c acting atomwise.
inline StableMeasure scaled(const StableMeasure& mu, const ScalarField& c) {
    std::vector<FiberMeasure> per;
    for (std::size_t a = 0; a < mu.atoms(); ++a) {
        std::vector<ExtRational> m;
        for (const auto& x : mu.at(a).block_masses()) m.push_back(ExtRational(c[a]) * x);
        per.emplace_back(mu.at(a).ring(), std::move(m));
    }
    return StableMeasure(mu.points(), std::move(per));
}

/// mu3 = mu2 - mu1 on a member of the common domain.
inline ScalarField signed_difference(const StableMeasure& mu1, const StableMeasure& mu2, const ConditionalSet& v) {
    return finite_part(eval(mu2, v)) - finite_part(eval(mu1, v));
}

/// X_0|A_0 with mu3(X) <= mu3(X_0|A_0) and mu3 >= 0 on every measurable
/// subset of it, mu3 = mu2 - mu1, for finite mu1, mu2.
///
/// B_0 collects the atoms on which every nonempty measurable set is
/// mu3-negative. The remaining atoms are then peeled: with r the least
/// negative deficit at each atom, B_n is the largest event below the current
/// candidate W on which no measurable V below W has mu3(V) <= -r; elsewhere
/// the most negative such V is removed from W.
inline ConditionalSet hahn_positive_set(const StableMeasure& mu1, const StableMeasure& mu2) {
    detail::check_same_domain(mu1, mu2);
    if (!is_finite_measure(mu1) || !is_finite_measure(mu2)) throw invalid_argument("positive-set lemma needs finite measures");
    const std::size_t atoms = mu1.atoms(), points = mu1.points();
    const auto& dom = mu1;
    // mu3 on each block of each atom's field
    std::vector<std::vector<Rational>> d(atoms);
    for (std::size_t a = 0; a < atoms; ++a)
        for (std::size_t i = 0; i < dom.at(a).ring().blocks().size(); ++i)
            d[a].push_back(mu2.at(a).block_masses()[i].value() - mu1.at(a).block_masses()[i].value());
    auto blocks_under = [&](std::size_t a, Mask fiber) {
        std::vector<std::size_t> out;
        const auto& bs = dom.at(a).ring().blocks();
        for (std::size_t i = 0; i < bs.size(); ++i)
            if ((bs[i].bits() & ~fiber) == 0) out.push_back(i);
        return out;
    };
    const Event b0 = largest_event(atoms, [&](const Event& b) {
        for (std::size_t a : b.atoms())
            for (const auto& x : d[a])
                if (x.sign() >= 0) return false;
        return true;
    });
    // Least negative deficit per atom: every negative mu3 value is <= -r there.
    std::vector<std::optional<Rational>> r(atoms);
    for (std::size_t a = 0; a < atoms; ++a)
        for (const auto& x : d[a])
            if (x.sign() < 0 && (!r[a] || -x < *r[a])) r[a] = -x;

    ConditionalSet w = ConditionalSet::top(atoms, points).restricted(b0.complement());
    Event settled = b0;
    while (!settled.is_full()) {
        // Most negative measurable V below W at each atom: its negative blocks.
        auto culprit = [&](std::size_t a) {
            Mask m = 0;
            Rational s = 0;
            for (std::size_t i : blocks_under(a, w.raw_fibers()[a]))
                if (d[a][i].sign() < 0) {
                    m |= dom.at(a).ring().blocks()[i].bits();
                    s += d[a][i];
                }
            return std::pair{m, s};
        };
        const Event open = settled.complement();
        const Event bn = largest_event(atoms, [&](const Event& b) {
            for (std::size_t a : b.atoms()) {
                if (!open.contains(a)) return false;
                const auto [m, s] = culprit(a);
                if (m != 0 && r[a] && s <= -*r[a]) return false;
            }
            return true;
        });
        settled = settled | bn;
        const Event rest = open - bn;
        if (rest.is_empty()) break;
        const ConditionalSet v = build_conditional_set(atoms, points, [&](std::size_t a) {
            return rest.contains(a) ? culprit(a).first : Mask{0};
        });
        const ConditionalSet peeled = cond_intersection(w, cond_complement(v));
        const std::vector<ConditionalSet> parts{peeled, w};
        const std::vector<Event> split{rest, rest.complement()};
        w = concatenate_sets(parts, split);
    }
    return w;
}

/// Witness of a violation of nu << mu: a measurable set with mu-mass 0 and
/// positive nu-mass at some atom.
inline std::optional<ConditionalSet> absolute_continuity_witness(const StableMeasure& mu, const StableMeasure& nu) {
    detail::check_same_domain(mu, nu);
    for (std::size_t a = 0; a < mu.atoms(); ++a) {
        const auto& bs = mu.at(a).ring().blocks();
        for (std::size_t i = 0; i < bs.size(); ++i)
            if (mu.at(a).block_masses()[i].is_zero() && !nu.at(a).block_masses()[i].is_zero())
                return ConditionalSet::uniform(Event::atom(mu.atoms(), a), bs[i]);
    }
    return std::nullopt;
}

/// Checks nu(V|A) = int 1_{V|A} f dmu over every member of the domain
/// (`exhaustive`), or over every single-atom member, which is equivalent by
/// stability. Returns the first failing set.
inline std::optional<ConditionalSet> rn_certificate(const Integrand& f, const StableMeasure& mu, const StableMeasure& nu,
                                                    bool exhaustive = true) {
    detail::check_same_domain(mu, nu);
    auto ok = [&](const ConditionalSet& v) { return eval(nu, v) == integrate(indicator(v) * f, mu); };
    if (exhaustive) {
        for (const auto& v : mu.domain().members())
            if (!ok(v)) return v;
        return std::nullopt;
    }
    for (std::size_t a = 0; a < mu.atoms(); ++a)
        for (const auto& m : mu.at(a).ring().members()) {
            const auto v = ConditionalSet::uniform(Event::atom(mu.atoms(), a), m);
            if (!ok(v)) return v;
        }
    return std::nullopt;
}

/// Density of nu with respect to mu: nu-mass / mu-mass on each mu-positive
/// field block, 0 on mu-null blocks; certified before it is returned.
inline Integrand radon_nikodym(const StableMeasure& mu, const StableMeasure& nu) {
    detail::check_same_domain(mu, nu);
    if (!is_finite_measure(mu) || !is_finite_measure(nu)) throw invalid_argument("Radon-Nikodym needs finite measures");
    if (auto w = absolute_continuity_witness(mu, nu)) throw invalid_argument("nu is not absolutely continuous: " + w->str());
    std::vector<std::vector<Rational>> t(mu.atoms(), std::vector<Rational>(mu.points(), Rational(0)));
    for (std::size_t a = 0; a < mu.atoms(); ++a) {
        const auto& bs = mu.at(a).ring().blocks();
        for (std::size_t i = 0; i < bs.size(); ++i) {
            const Rational m = mu.at(a).block_masses()[i].value();
            if (m.is_zero()) continue;
            const Rational q = nu.at(a).block_masses()[i].value() / m;
            for (std::size_t p : bs[i].points()) t[a][p] = q;
        }
    }
    Integrand f(mu.points(), std::move(t));
    if (auto bad = rn_certificate(f, mu, nu, mu.domain().size() <= 4096))
        throw std::logic_error("density certificate failed on " + bad->str());
    return f;
}

/// lambda = nu - int . f dmu as a measure; throws unless f lies in
/// H = {f >= 0 : int 1_V f dmu <= nu(V) for all V}.
inline StableMeasure rn_residual(const Integrand& f, const StableMeasure& mu, const StableMeasure& nu) {
    detail::check_same_domain(mu, nu);
    if (!f.is_nonnegative() || !is_measurable(f, mu.ring_domain())) throw invalid_argument("subdensity must be nonnegative and measurable");
    std::vector<FiberMeasure> per;
    for (std::size_t a = 0; a < mu.atoms(); ++a) {
        const auto& bs = mu.at(a).ring().blocks();
        std::vector<ExtRational> m;
        for (std::size_t i = 0; i < bs.size(); ++i) {
            const Rational used = f.at(a, bs[i].points().front()) * mu.at(a).block_masses()[i].value();
            const Rational left = nu.at(a).block_masses()[i].value() - used;
            if (left.sign() < 0) throw invalid_argument("subdensity exceeds nu");
            m.emplace_back(left);
        }
        per.emplace_back(mu.at(a).ring(), std::move(m));
    }
    return StableMeasure(mu.points(), std::move(per));
}

/// f + s 1_{X_0|A_0} on the atoms where lambda(X) > 0, with s = lambda(X)/2 and
/// X_0|A_0 the positive set of lambda - s mu.
inline Integrand rn_improvement_step(const Integrand& f, const StableMeasure& mu, const StableMeasure& nu) {
    if (!is_probability(mu)) throw invalid_argument("improvement step needs a stable probability measure");
    const StableMeasure lambda = rn_residual(f, mu, nu);
    const ScalarField lx = finite_part(total_mass(lambda));
    std::vector<Rational> s;
    Mask live = 0;
    for (std::size_t a = 0; a < lx.size(); ++a) {
        s.push_back(lx[a] / Rational(2));
        if (lx[a].sign() > 0) live |= Mask{1} << a;
    }
    const ScalarField sf(std::move(s));
    const ConditionalSet x0 = hahn_positive_set(scaled(mu, sf), lambda);
    return f + sf.restricted(Event(mu.atoms(), live)) * indicator(x0);
}

/// Which premise of the finite Daniell-Stone statement a probe refuted.
class premise_error : public invalid_argument {
public:
    using invalid_argument::invalid_argument;
};

struct DaniellStoneOptions {
    std::size_t probes = 50;
    std::uint64_t seed = 7;
};

/// mu(V) := L(1_V) on the discrete stable sigma-algebra. Positivity,
/// stability and L^0-linearity of L are spot-checked on random probes first;
/// continuity from above holds trivially since decreasing sequences stabilize.
template <class Functional>
StableMeasure daniell_stone_finite(Functional&& l, std::size_t atoms, std::size_t points, DaniellStoneOptions opt = {}) {
    std::mt19937_64 rng(opt.seed);
    std::uniform_int_distribution<int> val(-3, 3), coin(0, 1);
    auto probe = [&](bool nonneg) {
        std::vector<std::vector<Rational>> t(atoms, std::vector<Rational>(points));
        for (auto& row : t)
            for (auto& v : row) v = Rational(nonneg ? std::abs(val(rng)) : val(rng), 1 + std::abs(val(rng)));
        return Integrand(points, std::move(t));
    };
    auto field = [&]() {
        std::vector<Rational> v;
        for (std::size_t a = 0; a < atoms; ++a) v.emplace_back(val(rng), 1 + std::abs(val(rng)));
        return ScalarField(std::move(v));
    };
    auto call = [&](const Integrand& f) { return ScalarField(l(f)); };
    for (std::size_t k = 0; k < opt.probes; ++k) {
        const Integrand f = probe(true), g = probe(false), h = probe(false);
        const ScalarField lf = call(f);
        if (!(ScalarField(atoms, Rational(0)) <= lf)) throw premise_error("functional is not positive");
        Mask m = 0;
        for (std::size_t a = 0; a < atoms; ++a)
            if (coin(rng)) m |= Mask{1} << a;
        const std::vector<Event> part{Event(atoms, m), Event(atoms, ~m)};
        if (!(call(concatenate_integrands({g, h}, part)) == concatenate_field(std::vector<ScalarField>{call(g), call(h)}, part)))
            throw premise_error("functional is not stable");
        const ScalarField r = field();
        if (!(call(r * g + h) == r * call(g) + call(h))) throw premise_error("functional is not L0-linear");
    }
    std::vector<std::vector<ExtRational>> masses(atoms, std::vector<ExtRational>(points));
    for (std::size_t p = 0; p < points; ++p) {
        const ScalarField m = call(indicator(ConditionalSet::uniform(Event::full(atoms), PointSet::single(points, p))));
        for (std::size_t a = 0; a < atoms; ++a) masses[a][p] = m[a];
    }
    return StableMeasure::from_point_masses(StableSigmaAlgebra::discrete(atoms, points), masses);
}

}  // namespace cms
