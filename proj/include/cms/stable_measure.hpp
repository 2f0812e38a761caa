#pragma once

// Stable pre-measures and measures, the stable outer measure induced by a
// pre-measure on a stable ring, Caratheodory measurability, extension and
// uniqueness.

#include "cms/stable_sigma.hpp"

#include <random>

namespace cms {

/// A classical finitely additive measure on one atom's ring, stored by block masses.
class FiberMeasure {
public:
    FiberMeasure() = default;
    FiberMeasure(SetRing ring, std::vector<ExtRational> block_mass) : ring_(std::move(ring)), mass_(std::move(block_mass)) {
        if (mass_.size() != ring_.blocks().size()) throw invalid_argument("one mass per ring block required");
        for (const auto& m : mass_)
            if (!m.is_nonnegative()) throw invalid_argument("masses must be nonnegative");
    }

    /// Block masses are the sums of the given point masses.
    static FiberMeasure from_point_masses(SetRing ring, const std::vector<ExtRational>& point_mass) {
        if (point_mass.size() != ring.points()) throw invalid_argument("one mass per point required");
        std::vector<ExtRational> m;
        for (const auto& b : ring.blocks()) {
            ExtRational s = 0;
            for (std::size_t p : b.points()) s += point_mass[p];
            m.push_back(s);
        }
        return FiberMeasure(std::move(ring), std::move(m));
    }

    const SetRing& ring() const { return ring_; }
    const std::vector<ExtRational>& block_masses() const { return mass_; }

    /// Mass of a ring member.
    ExtRational mass(const PointSet& s) const {
        if (!ring_.contains(s)) throw invalid_argument("not measurable");
        ExtRational total = 0;
        for (std::size_t i : ring_.blocks_in(s)) total += mass_[i];
        return total;
    }
    ExtRational total() const { return mass(ring_.cover()); }

    friend bool operator==(const FiberMeasure&, const FiberMeasure&) = default;

private:
    SetRing ring_;
    std::vector<ExtRational> mass_;
};

/// Stable (pre-)measure: one classical measure per atom. The domain is the
/// fiberwise family of the per-atom rings; it is a stable measure when every
/// ring is a field.
class StableMeasure {
public:
    StableMeasure() = default;
    StableMeasure(std::size_t points, std::vector<FiberMeasure> per_atom) : n_(points), m_(std::move(per_atom)) {
        if (m_.empty()) throw invalid_argument("measure needs at least one atom");
        for (const auto& f : m_)
            if (f.ring().points() != n_) throw invalid_argument("measure over wrong ground space");
    }

    /// Measure on `fields` with the given point masses per atom.
    static StableMeasure from_point_masses(const FiberwiseFamily& domain, const std::vector<std::vector<ExtRational>>& masses) {
        if (masses.size() != domain.atoms()) throw invalid_argument("one mass table per atom required");
        std::vector<FiberMeasure> per;
        for (std::size_t a = 0; a < domain.atoms(); ++a) per.push_back(FiberMeasure::from_point_masses(domain.ring(a), masses[a]));
        return StableMeasure(domain.points(), std::move(per));
    }

    std::size_t atoms() const { return m_.size(); }
    std::size_t points() const { return n_; }
    const FiberMeasure& at(std::size_t a) const { return m_.at(a); }
    const std::vector<FiberMeasure>& per_atom() const { return m_; }

    bool is_measure() const {
        return std::all_of(m_.begin(), m_.end(), [](const FiberMeasure& f) { return f.ring().is_field(); });
    }
    StableRing ring_domain() const {
        std::vector<SetRing> r;
        for (const auto& f : m_) r.push_back(f.ring());
        return StableRing(n_, std::move(r));
    }
    StableSigmaAlgebra domain() const {
        std::vector<SetRing> r;
        for (const auto& f : m_) r.push_back(f.ring());
        return StableSigmaAlgebra(n_, std::move(r));
    }
    bool measurable(const ConditionalSet& v) const { return ring_domain().contains(v); }

    friend bool operator==(const StableMeasure&, const StableMeasure&) = default;

private:
    std::size_t n_ = 0;
    std::vector<FiberMeasure> m_;
};

/// mu(V|A): the atom mass of the fiber on the support, 0 off the support.
inline ExtScalarField eval(const StableMeasure& mu, const ConditionalSet& v) {
    if (v.atoms() != mu.atoms() || v.points() != mu.points()) throw invalid_argument("set over wrong space");
    std::vector<ExtRational> out(mu.atoms(), ExtRational(0));
    for (std::size_t a = 0; a < mu.atoms(); ++a) {
        if (!v.support().contains(a)) continue;
        const PointSet f = v.fiber(a);
        if (!mu.at(a).ring().contains(f)) throw invalid_argument("not measurable: " + v.str());
        out[a] = mu.at(a).mass(f);
    }
    return ExtScalarField(std::move(out));
}

inline ExtScalarField total_mass(const StableMeasure& mu) { return eval(mu, ConditionalSet::top(mu.atoms(), mu.points())); }

inline bool is_finite_measure(const StableMeasure& mu) { return is_finite(total_mass(mu)); }

inline bool is_probability(const StableMeasure& mu) {
    if (!mu.is_measure()) return false;
    for (const auto& m : total_mass(mu))
        if (!(m == ExtRational(1))) return false;
    return true;
}

/// Outcome of an axiom check: the first violated property and a witness.
struct AxiomReport {
    bool ok = true;
    std::string axiom;
    std::string witness;
    explicit operator bool() const { return ok; }
};

struct AxiomCheckOptions {
    std::size_t exhaustive_limit = 64;  ///< all pairs when the domain is at most this large
    std::size_t samples = 3000;         ///< sampled pairs otherwise
    std::uint64_t seed = 1;
};

/// Verifies (M1)-(M8) and stability of a set function on an explicit domain.
/// `mu` maps members of the domain to extended fields. Pairs are exhaustive
/// for small domains and sampled beyond `exhaustive_limit`.
template <class SetFunction>
AxiomReport check_measure_axioms(const SetFunction& mu, const StableCollection& domain, AxiomCheckOptions opt = {}) {
    const auto& d = domain.members();
    const std::size_t atoms = domain.atoms();
    auto fail = [](std::string ax, std::string w) { return AxiomReport{false, std::move(ax), std::move(w)}; };
    auto val = [&](const ConditionalSet& v) { return ExtScalarField(mu(v)); };

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::mt19937_64 rng(opt.seed);
    if (d.size() <= opt.exhaustive_limit) {
        for (std::size_t i = 0; i < d.size(); ++i)
            for (std::size_t j = 0; j < d.size(); ++j) pairs.emplace_back(i, j);
    } else {
        std::uniform_int_distribution<std::size_t> pick(0, d.size() - 1);
        for (std::size_t k = 0; k < opt.samples; ++k) pairs.emplace_back(pick(rng), pick(rng));
    }

    bool all_finite = true;
    for (const auto& v : d) {
        const auto m = val(v);
        if (!is_finite(m)) all_finite = false;
        for (std::size_t a = 0; a < atoms; ++a) {
            if (!m[a].is_nonnegative()) return fail("M0", "negative value on " + v.str());
            if (!v.support().contains(a) && !m[a].is_zero()) return fail("M1", v.str());
        }
    }

    std::uniform_int_distribution<Mask> coin(0, low_bits(atoms));
    for (const auto& [i, j] : pairs) {
        const auto &v = d[i], &w = d[j];
        const auto mv = val(v), mw = val(w);
        const auto u = cond_union(v, w), n = cond_intersection(v, w);
        const auto mu_u = val(u), mu_n = val(n);
        // stability along a random two-block partition
        const Event e(atoms, coin(rng));
        const std::vector<ConditionalSet> vs{v, w};
        const std::vector<Event> part{e, e.complement()};
        const std::vector<ExtScalarField> fs{mv, mw};
        if (!(val(concatenate_sets(vs, part)) == concatenate_field(fs, part)))
            return fail("stable", v.str() + " | " + w.str());
        if (n.is_bottom() && !(mu_u == mv + mw)) return fail("M2", v.str() + " , " + w.str());
        if (!(mu_u + mu_n == mv + mw)) return fail("M3", v.str() + " , " + w.str());
        if (!(mu_u <= mv + mw)) return fail("M6", v.str() + " , " + w.str());
        if (cond_inclusion(v, w)) {
            if (!(mv <= mw)) return fail("M4", v.str() + " <= " + w.str());
            const auto diff = val(cond_intersection(w, cond_complement(v)));
            for (std::size_t a = 0; a < atoms; ++a)
                if (mv[a].is_finite() && !(diff[a] == mw[a] - mv[a])) return fail("M5", v.str() + " <= " + w.str());
        }
        // monotone sequences v, v|_|w, v|_|w|_|u ... and the decreasing dual
        const auto& z = d[(i + j) % d.size()];
        const std::vector<ConditionalSet> up{v, u, cond_union(u, z)};
        for (std::size_t k = 1; k < up.size(); ++k)
            if (!(val(up[k - 1]) <= val(up[k]))) return fail("M7", v.str() + " , " + w.str());
        if (!(val(up.back()) == val(cond_union(up)))) return fail("M7", v.str() + " , " + w.str());
        if (all_finite) {
            const std::vector<ConditionalSet> down{v, n, cond_intersection(n, z)};
            for (std::size_t k = 1; k < down.size(); ++k)
                if (!(val(down[k]) <= val(down[k - 1]))) return fail("M8", v.str() + " , " + w.str());
            if (!(val(down.back()) == val(cond_intersection(down)))) return fail("M8", v.str() + " , " + w.str());
        }
    }
    return {};
}

inline AxiomReport check_measure_axioms(const StableMeasure& mu, AxiomCheckOptions opt = {}) {
    return check_measure_axioms([&](const ConditionalSet& v) { return eval(mu, v); }, mu.ring_domain().members(), opt);
}

/// Stable Dirac measure: mass one on the block of each atom's field that contains x.
inline StableMeasure dirac(const PointFunction& x, const StableSigmaAlgebra& domain) {
    if (x.atoms() != domain.atoms() || x.points() != domain.points()) throw invalid_argument("point function over wrong space");
    std::vector<FiberMeasure> per;
    for (std::size_t a = 0; a < domain.atoms(); ++a) {
        const auto& f = domain.field(a);
        std::vector<ExtRational> m(f.blocks().size(), ExtRational(0));
        m[*f.block_of(x(a))] = 1;
        per.emplace_back(f, std::move(m));
    }
    return StableMeasure(domain.points(), std::move(per));
}

/// Stable outer measure induced by a pre-measure on a stable ring:
/// mu*(V|A) = inf{sum mu(U_k|C_k) : covers of (V|A)|B} on B = B_{V|A}, and +inf off B.
class OuterMeasure {
public:
    explicit OuterMeasure(StableMeasure premeasure) : mu_(std::move(premeasure)) {}

    const StableMeasure& premeasure() const { return mu_; }
    std::size_t atoms() const { return mu_.atoms(); }
    std::size_t points() const { return mu_.points(); }

    /// B_{V|A}: the largest event on which V|A can be covered by ring members.
    Event coverable_event(const ConditionalSet& v) const {
        return largest_event(v.atoms(), [&](const Event& b) {
            for (std::size_t a : b.atoms())
                if (v.support().contains(a) && !v.fiber(a).subset_of(mu_.at(a).ring().cover())) return false;
            return true;
        });
    }

    /// Evaluation with the infimum over covers reduced atomwise: the cheapest
    /// cover of a fiber is the union of the ring blocks it meets.
    ExtScalarField operator()(const ConditionalSet& v) const {
        check(v);
        const Event b = coverable_event(v);
        std::vector<ExtRational> out(atoms(), ExtRational(0));
        for (std::size_t a = 0; a < atoms(); ++a) {
            if (!b.contains(a)) {
                out[a] = ExtRational::infinity();
                continue;
            }
            if (!v.support().contains(a)) continue;
            const auto& fm = mu_.at(a);
            ExtRational s = 0;
            for (std::size_t i = 0; i < fm.ring().blocks().size(); ++i)
                if (!(fm.ring().blocks()[i] & v.fiber(a)).is_empty()) s += fm.block_masses()[i];
            out[a] = s;
        }
        return ExtScalarField(std::move(out));
    }

    /// Reference evaluation: enumerates every antichain of nonempty ring
    /// members covering the fiber and takes the least total mass.
    ExtScalarField by_cover_enumeration(const ConditionalSet& v) const {
        check(v);
        const Event b = coverable_event(v);
        std::vector<ExtRational> out(atoms(), ExtRational(0));
        for (std::size_t a = 0; a < atoms(); ++a) {
            if (!b.contains(a)) {
                out[a] = ExtRational::infinity();
                continue;
            }
            if (!v.support().contains(a)) continue;
            const auto& fm = mu_.at(a);
            std::vector<PointSet> ms;
            for (const auto& m : fm.ring().members())
                if (!m.is_empty()) ms.push_back(m);
            if (ms.size() > 20) throw invalid_argument("ring too large for cover enumeration");
            std::optional<ExtRational> best;
            for (Mask sel = 1; sel < (Mask{1} << ms.size()); ++sel) {
                Mask cover = 0;
                bool antichain = true;
                ExtRational sum = 0;
                for (std::size_t i = 0; i < ms.size() && antichain; ++i) {
                    if (!((sel >> i) & 1U)) continue;
                    for (std::size_t j = 0; j < i; ++j)
                        if (((sel >> j) & 1U) && (ms[i].subset_of(ms[j]) || ms[j].subset_of(ms[i]))) antichain = false;
                    cover |= ms[i].bits();
                    sum += fm.mass(ms[i]);
                }
                if (!antichain || (v.fiber(a).bits() & ~cover) != 0) continue;
                if (!best || sum < *best) best = sum;
            }
            out[a] = *best;
        }
        return ExtScalarField(std::move(out));
    }

private:
    void check(const ConditionalSet& v) const {
        if (v.atoms() != atoms() || v.points() != points()) throw invalid_argument("set over wrong space");
    }
    StableMeasure mu_;
};

inline OuterMeasure outer_from_premeasure(const StableMeasure& mu) { return OuterMeasure(mu); }

/// (A1) localization, (A2) monotonicity and (A3) subadditivity of an outer
/// measure, checked over the given sets (pairs and consecutive triples).
template <class Outer>
AxiomReport check_outer_axioms(const Outer& mstar, const std::vector<ConditionalSet>& sets) {
    auto fail = [](std::string ax, std::string w) { return AxiomReport{false, std::move(ax), std::move(w)}; };
    if (sets.empty()) return {};
    const std::size_t atoms = sets.front().atoms();
    for (const auto& v : sets) {
        const auto mv = mstar(v);
        for (Mask b = 0; b <= low_bits(std::min<std::size_t>(atoms, 6)); ++b) {
            const Event e(atoms, b);
            if (!(mstar(v.restricted(e)) == mv.restricted(e))) return fail("A1", v.str());
        }
    }
    for (std::size_t i = 0; i < sets.size(); ++i) {
        const auto& v = sets[i];
        const auto mv = mstar(v);
        for (std::size_t j = 0; j < sets.size(); ++j) {
            const auto& w = sets[j];
            const auto mw = mstar(w);
            if (cond_inclusion(v, w) && !(mv <= mw)) return fail("A2", v.str() + " <= " + w.str());
            if (!(mstar(cond_union(v, w)) <= mv + mw)) return fail("A3", v.str() + " , " + w.str());
        }
        const auto& z = sets[(i + 1) % sets.size()];
        const auto& u = sets[(i + 2) % sets.size()];
        const std::vector<ConditionalSet> tri{v, z, u};
        if (!(mstar(cond_union(tri)) <= mv + mstar(z) + mstar(u))) return fail("A3", v.str() + " , " + z.str() + " , " + u.str());
    }
    return {};
}

/// Test sets for the splitting identity: all of P(X) when small, otherwise
/// X together with every subset of E placed at a single atom.
inline std::vector<ConditionalSet> caratheodory_test_sets(std::size_t atoms, std::size_t points) {
    if (atoms * points <= 12) return all_conditional_sets(atoms, points);
    std::vector<ConditionalSet> out{ConditionalSet::top(atoms, points)};
    if (points > 16) throw invalid_argument("ground space too large for measurability test");
    for (std::size_t a = 0; a < atoms; ++a)
        for (Mask m = 1; m <= low_bits(points); ++m)
            out.push_back(ConditionalSet::uniform(Event::atom(atoms, a), PointSet(points, m)));
    return out;
}

/// mu*(W ⊓ V) + mu*(W ⊓ V^c) = mu*(W) for all test sets W.
template <class Outer>
bool is_caratheodory_measurable(const Outer& mstar, const ConditionalSet& v) {
    const ConditionalSet vc = cond_complement(v);
    for (const auto& w : caratheodory_test_sets(v.atoms(), v.points()))
        if (!(mstar(cond_intersection(w, v)) + mstar(cond_intersection(w, vc)) == mstar(w))) return false;
    return true;
}

/// Sigma-algebra generated by a stable ring: explicit closure for small
/// lattices, per-atom field generation otherwise.
inline StableSigmaAlgebra sigma_of(const StableRing& r) {
    if (r.atoms() * r.points() <= 12 && r.size() <= 4096) return generate_sigma(r.members());
    std::vector<SetRing> fields;
    for (const auto& ring : r.rings()) fields.push_back(SetRing::generated_field(r.points(), ring.blocks()));
    return StableSigmaAlgebra(r.points(), std::move(fields));
}

/// Extension of a pre-measure on a stable ring to Sigma(R): the induced outer
/// measure restricted to the generated sigma-algebra.
inline StableMeasure caratheodory_extend(const StableMeasure& premeasure) {
    const OuterMeasure mstar(premeasure);
    const StableSigmaAlgebra sigma = sigma_of(premeasure.ring_domain());
    std::vector<FiberMeasure> per;
    for (std::size_t a = 0; a < sigma.atoms(); ++a) {
        std::vector<ExtRational> m;
        for (const auto& b : sigma.field(a).blocks())
            m.push_back(mstar(ConditionalSet::uniform(Event::atom(sigma.atoms(), a), b))[a]);
        per.emplace_back(sigma.field(a), std::move(m));
    }
    return StableMeasure(sigma.points(), std::move(per));
}

/// True iff mu and nu agree on every member of the generated sigma-algebra.
inline bool uniqueness_check(const StableMeasure& mu, const StableMeasure& nu, std::span<const ConditionalSet> generator) {
    for (const auto& v : sigma_closure(generator)) {
        if (!mu.measurable(v) || !nu.measurable(v)) return false;
        if (!(eval(mu, v) == eval(nu, v))) return false;
    }
    return true;
}

/// Hypotheses of the uniqueness statement: the generator is stable and
/// closed under finite intersections, mu and nu agree on it, and a disjoint
/// family of finite-mass generator members covers X.
inline bool uniqueness_preconditions(const StableMeasure& mu, const StableMeasure& nu, const StableCollection& generator) {
    if (!is_stable_collection(generator)) return false;
    for (const auto& v : generator)
        for (const auto& w : generator)
            if (!generator.contains(cond_intersection(v, w))) return false;
    std::vector<ConditionalSet> finite;
    for (const auto& v : generator) {
        if (!mu.measurable(v) || !nu.measurable(v)) return false;
        const auto m = eval(mu, v);
        if (!(m == eval(nu, v))) return false;
        if (is_finite(m)) finite.push_back(v);
    }
    // X is finite-mass covered iff the finite-mass members exhaust every atom and point.
    if (finite.empty()) return false;
    return cond_union(finite).is_top();
}

}  // namespace cms
