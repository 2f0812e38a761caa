#pragma once

// Randomized property suites over the whole library, with deterministic
// seeding, optional fault injection and shrinking of failing instances.

#include "cms/oracle.hpp"

#include <functional>
#include <sstream>

namespace cms::verify {

/// splitmix64: small, portable and fully specified, so reports are stable
/// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : s_(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (s_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }
    bool chance(std::size_t num, std::size_t den) { return below(den) < num; }
    /// p/q with p in [lo, hi], q in [1, maxden].
    Rational rational(std::int64_t lo, std::int64_t hi, std::int64_t maxden) {
        const auto p = lo + static_cast<std::int64_t>(below(static_cast<std::size_t>(hi - lo + 1)));
        const auto q = 1 + static_cast<std::int64_t>(below(static_cast<std::size_t>(maxden)));
        return Rational(p, q);
    }

private:
    std::uint64_t s_;
};

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    Rng r(a ^ (b * 0xD6E8FEB86659FD93ULL));
    r.next();
    return r.next();
}

inline std::uint64_t hash_name(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
    return h;
}

// ---------------------------------------------------------------- generators

inline Event random_event(Rng& r, std::size_t atoms) { return Event(atoms, r.next()); }

/// Random conditional set; roughly a quarter of the atoms are unsupported.
inline ConditionalSet random_set(Rng& r, std::size_t atoms, std::size_t points) {
    return build_conditional_set(atoms, points, [&](std::size_t) -> Mask {
        if (r.chance(1, 4)) return 0;
        if (r.chance(1, 5)) return low_bits(points);
        return r.next() & low_bits(points);
    });
}

/// Random stable set S (support Omega).
inline ConditionalSet random_stable_set(Rng& r, std::size_t atoms, std::size_t points) {
    return build_conditional_set(atoms, points, [&](std::size_t) {
        Mask m = 0;
        while (m == 0) m = r.next() & low_bits(points);
        return m;
    });
}

/// Partition of the atoms into k (possibly empty) parts.
inline std::vector<Event> random_partition(Rng& r, std::size_t atoms, std::size_t k) {
    std::vector<Mask> parts(k, 0);
    for (std::size_t a = 0; a < atoms; ++a) parts[r.below(k)] |= Mask{1} << a;
    std::vector<Event> out;
    for (Mask m : parts) out.emplace_back(atoms, m);
    return out;
}

/// Random field of subsets of a points-element set (random block labels).
inline SetRing random_field(Rng& r, std::size_t points) {
    const std::size_t labels = 1 + r.below(points);
    std::vector<Mask> blocks(labels, 0);
    for (std::size_t p = 0; p < points; ++p) blocks[r.below(labels)] |= Mask{1} << p;
    std::vector<PointSet> bs;
    for (Mask m : blocks)
        if (m) bs.emplace_back(points, m);
    return SetRing(points, std::move(bs));
}

/// Random ring: a random subset of the blocks of a random field.
inline SetRing random_ring(Rng& r, std::size_t points) {
    const SetRing f = random_field(r, points);
    std::vector<PointSet> bs;
    for (const auto& b : f.blocks())
        if (!r.chance(1, 3)) bs.push_back(b);
    return SetRing(points, std::move(bs));
}

inline StableSigmaAlgebra random_sigma(Rng& r, std::size_t atoms, std::size_t points) {
    std::vector<SetRing> fs;
    for (std::size_t a = 0; a < atoms; ++a) fs.push_back(random_field(r, points));
    return StableSigmaAlgebra(points, std::move(fs));
}

/// Block masses in [0, 3] with small denominators, occasionally +inf.
inline std::vector<ExtRational> random_masses(Rng& r, std::size_t blocks, bool allow_inf) {
    std::vector<ExtRational> m;
    for (std::size_t i = 0; i < blocks; ++i) {
        if (allow_inf && r.chance(1, 6)) m.push_back(ExtRational::infinity());
        else if (r.chance(1, 6)) m.emplace_back(0);
        else m.emplace_back(r.rational(1, 6, 4));
    }
    return m;
}

inline StableMeasure random_measure(Rng& r, const FiberwiseFamily& domain, bool allow_inf) {
    std::vector<FiberMeasure> per;
    for (const auto& ring : domain.rings()) per.emplace_back(ring, random_masses(r, ring.blocks().size(), allow_inf));
    return StableMeasure(domain.points(), std::move(per));
}

/// Probability block masses; zero blocks allowed when `zeros`.
inline StableMeasure random_probability(Rng& r, const StableSigmaAlgebra& domain, bool zeros) {
    std::vector<FiberMeasure> per;
    for (const auto& f : domain.rings()) {
        std::vector<Rational> w;
        Rational total = 0;
        for (std::size_t i = 0; i < f.blocks().size(); ++i) {
            w.emplace_back(zeros && r.chance(1, 4) ? 0 : static_cast<std::int64_t>(1 + r.below(6)));
            total += w.back();
        }
        if (total.is_zero()) {
            w.back() = 1;
            total = 1;
        }
        std::vector<ExtRational> m;
        for (const auto& x : w) m.emplace_back(x / total);
        per.emplace_back(f, std::move(m));
    }
    return StableMeasure(domain.points(), std::move(per));
}

/// Integrand constant on the blocks of `domain` (free on uncovered points).
inline Integrand random_integrand(Rng& r, const FiberwiseFamily& domain, bool signed_values, std::int64_t maxden = 4) {
    std::vector<std::vector<Rational>> t(domain.atoms(), std::vector<Rational>(domain.points()));
    for (std::size_t a = 0; a < domain.atoms(); ++a) {
        for (auto& v : t[a]) v = r.rational(signed_values ? -4 : 0, 4, maxden);
        for (const auto& b : domain.ring(a).blocks()) {
            const Rational v = r.chance(1, 5) ? Rational(0) : r.rational(signed_values ? -4 : 0, 4, maxden);
            for (std::size_t p : b.points()) t[a][p] = v;
        }
    }
    return Integrand(domain.points(), std::move(t));
}

/// Nonnegative measurable integrand with dyadic values k / 2^j, j <= 3.
inline Integrand random_dyadic_integrand(Rng& r, const FiberwiseFamily& domain) {
    std::vector<std::vector<Rational>> t(domain.atoms(), std::vector<Rational>(domain.points(), Rational(0)));
    for (std::size_t a = 0; a < domain.atoms(); ++a)
        for (const auto& b : domain.ring(a).blocks()) {
            const Rational v(static_cast<std::int64_t>(r.below(24)), std::int64_t{1} << r.below(4));
            for (std::size_t p : b.points()) t[a][p] = v;
        }
    return Integrand(domain.points(), std::move(t));
}

/// k pairwise disjoint conditional sets (each point of each atom goes to one
/// of the k sets or to none).
inline std::vector<ConditionalSet> random_disjoint_family(Rng& r, std::size_t atoms, std::size_t points, std::size_t k) {
    std::vector<std::vector<Mask>> fib(k, std::vector<Mask>(atoms, 0));
    for (std::size_t a = 0; a < atoms; ++a)
        for (std::size_t p = 0; p < points; ++p) {
            const std::size_t lab = r.below(k + 1);
            if (lab < k) fib[lab][a] |= Mask{1} << p;
        }
    std::vector<ConditionalSet> out;
    for (const auto& f : fib) out.push_back(build_conditional_set(atoms, points, [&](std::size_t a) { return f[a]; }));
    return out;
}

/// Random measurable member of a fiberwise family.
inline ConditionalSet random_member(Rng& r, const FiberwiseFamily& domain) {
    return build_conditional_set(domain.atoms(), domain.points(), [&](std::size_t a) {
        Mask m = 0;
        for (const auto& b : domain.ring(a).blocks())
            if (r.chance(1, 2)) m |= b.bits();
        return m;
    });
}

/// Closure of a family under binary intersection and atomwise concatenation.
inline StableCollection meet_stable_closure(std::vector<ConditionalSet> gen) {
    std::unordered_set<ConditionalSet> seen(gen.begin(), gen.end());
    std::vector<ConditionalSet> all(seen.begin(), seen.end());
    std::sort(all.begin(), all.end());
    bool grew = true;
    while (grew) {
        grew = false;
        auto add = [&](const ConditionalSet& v) {
            if (seen.insert(v).second) {
                all.push_back(v);
                grew = true;
            }
        };
        const std::vector<ConditionalSet> snap = all;
        for (std::size_t i = 0; i < snap.size(); ++i)
            for (std::size_t j = 0; j < i; ++j) add(cond_intersection(snap[i], snap[j]));
        detail::for_each_atomic_concatenation(snap, [&](const ConditionalSet& v) {
            add(v);
            return true;
        });
    }
    return StableCollection(std::move(all));
}

// ------------------------------------------------------------ fault injection

enum class Fault { none, complement, union_drop, sigma_no_complement, integral_truncated, rn_swapped };

struct FaultInfo {
    Fault fault;
    const char* name;
    const char* description;
};

inline const std::vector<FaultInfo>& faults() {
    static const std::vector<FaultInfo> f{
        {Fault::complement, "complement", "conditional complement drops the X|A^c part"},
        {Fault::union_drop, "union", "conditional union drops its last member"},
        {Fault::sigma_no_complement, "sigma", "sigma-algebra closure skips complements"},
        {Fault::integral_truncated, "integral", "integral stops at the first dyadic approximation"},
        {Fault::rn_swapped, "rn", "Radon-Nikodym density uses mu/nu instead of nu/mu"},
    };
    return f;
}

inline std::optional<Fault> parse_fault(const std::string& name) {
    if (name.empty() || name == "none") return Fault::none;
    for (const auto& f : faults())
        if (name == f.name) return f.fault;
    return std::nullopt;
}

/// The operations under test; the suites only reach them through here.
struct Ops {
    std::function<ConditionalSet(const ConditionalSet&)> complement = [](const ConditionalSet& v) { return cond_complement(v); };
    std::function<ConditionalSet(const ConditionalSet&, const ConditionalSet&)> join =
        [](const ConditionalSet& v, const ConditionalSet& w) { return cond_union(v, w); };
    std::function<StableCollection(const StableCollection&)> sigma = [](const StableCollection& g) { return sigma_closure(g); };
    std::function<ExtScalarField(const Integrand&, const StableMeasure&)> integrate =
        [](const Integrand& f, const StableMeasure& mu) { return cms::integrate(f, mu); };
    std::function<Integrand(const StableMeasure&, const StableMeasure&)> density =
        [](const StableMeasure& mu, const StableMeasure& nu) { return radon_nikodym(mu, nu); };

    static Ops with(Fault f) {
        Ops o;
        switch (f) {
            case Fault::complement:
                o.complement = [](const ConditionalSet& v) {
                    const auto c = cond_complement(v);
                    return c.restricted(v.support());
                };
                break;
            case Fault::union_drop:
                o.join = [](const ConditionalSet& v, const ConditionalSet&) { return v; };
                break;
            case Fault::sigma_no_complement:
                o.sigma = [](const StableCollection& g) {
                    return detail::closure(std::span(g.members()),
                                           [](const ConditionalSet&, const ConditionalSet&) { return true; }, false);
                };
                break;
            case Fault::integral_truncated:
                o.integrate = [](const Integrand& f, const StableMeasure& mu) {
                    const auto p = dyadic_integral(f.positive_part(), mu, 1);
                    if (f.is_nonnegative()) return p;
                    return p - dyadic_integral(f.negative_part(), mu, 1);
                };
                break;
            case Fault::rn_swapped:
                o.density = [](const StableMeasure& mu, const StableMeasure& nu) {
                    std::vector<std::vector<Rational>> t(mu.atoms(), std::vector<Rational>(mu.points(), Rational(0)));
                    for (std::size_t a = 0; a < mu.atoms(); ++a) {
                        const auto& bs = mu.at(a).ring().blocks();
                        for (std::size_t i = 0; i < bs.size(); ++i) {
                            const Rational n = nu.at(a).block_masses()[i].value();
                            if (n.is_zero()) continue;
                            for (std::size_t p : bs[i].points()) t[a][p] = mu.at(a).block_masses()[i].value() / n;
                        }
                    }
                    return Integrand(mu.points(), std::move(t));
                };
                break;
            case Fault::none: break;
        }
        return o;
    }
};

// ------------------------------------------------------------------- suites

struct Size {
    std::size_t atoms = 1;
    std::size_t points = 1;
};

/// Tallies that acceptance checks report (instances of each kind checked).
struct Counters {
    std::map<std::string, std::size_t> n;
    void add(const std::string& key, std::size_t k = 1) { n[key] += k; }
};

using Failure = std::optional<std::string>;
using CaseFn = std::function<Failure(Rng&, Size, const Ops&, Counters&)>;

struct Suite {
    std::string name;
    std::string description;
    Size max;
    std::function<bool(Size)> admissible;
    CaseFn run;
};

#define CMS_EXPECT(cond, msg)                                 \
    do {                                                      \
        if (!(cond)) return std::optional<std::string>(msg);  \
    } while (0)

namespace suites {

inline Failure lattice(Rng& r, Size s, const Ops& ops, Counters& c) {
    const std::size_t n = s.atoms, m = s.points;
    const auto& comp = ops.complement;
    const auto& join = ops.join;
    auto meet = [](const ConditionalSet& x, const ConditionalSet& y) { return cond_intersection(x, y); };
    const auto top = ConditionalSet::top(n, m), bot = ConditionalSet::bottom(n, m);
    const auto v = random_set(r, n, m), w = random_set(r, n, m), u = random_set(r, n, m);
    const std::string ctx = " [V=" + v.str() + " W=" + w.str() + " U=" + u.str() + "]";

    CMS_EXPECT(join(v, w) == join(w, v), "union not commutative" + ctx);
    CMS_EXPECT(meet(v, w) == meet(w, v), "intersection not commutative" + ctx);
    CMS_EXPECT(join(join(v, w), u) == join(v, join(w, u)), "union not associative" + ctx);
    CMS_EXPECT(meet(meet(v, w), u) == meet(v, meet(w, u)), "intersection not associative" + ctx);
    CMS_EXPECT(join(v, meet(v, w)) == v && meet(v, join(v, w)) == v, "absorption fails" + ctx);
    CMS_EXPECT(meet(v, join(w, u)) == join(meet(v, w), meet(v, u)), "intersection does not distribute" + ctx);
    CMS_EXPECT(join(v, meet(w, u)) == meet(join(v, w), join(v, u)), "union does not distribute" + ctx);
    CMS_EXPECT(join(v, bot) == v && meet(v, top) == v && join(v, v) == v && meet(v, v) == v, "identity laws fail" + ctx);
    CMS_EXPECT(join(v, comp(v)) == top, "V join V^c != X" + ctx);
    CMS_EXPECT(meet(v, comp(v)).is_bottom(), "V meet V^c != bottom" + ctx);
    CMS_EXPECT(comp(comp(v)) == v, "complement not involutive" + ctx);
    CMS_EXPECT(comp(join(v, w)) == meet(comp(v), comp(w)), "De Morgan (union) fails" + ctx);
    CMS_EXPECT(comp(meet(v, w)) == join(comp(v), comp(w)), "De Morgan (intersection) fails" + ctx);
    CMS_EXPECT(comp(top).is_bottom() && comp(bot) == top, "complement of bounds wrong" + ctx);
    const bool inc = cond_inclusion(v, w);
    CMS_EXPECT(inc == (meet(v, w) == v) && inc == (join(v, w) == w), "inclusion disagrees with the lattice order" + ctx);

    // (S1) for stable sets restricted to events
    const auto s1 = random_stable_set(r, n, m), s2 = random_stable_set(r, n, m);
    const auto a1 = random_event(r, n), a2 = random_event(r, n);
    CMS_EXPECT(meet(s1.restricted(a1), s2.restricted(a2)) == meet(s1, s2).restricted(a1 & a2), "(S1) intersection fails" + ctx);
    // The union half only holds over a common support: with disjoint
    // supports the left side keeps each fiber apart.
    CMS_EXPECT(join(s1.restricted(a1), s2.restricted(a1)) == join(s1, s2).restricted(a1), "(S1) union fails" + ctx);
    CMS_EXPECT(join(s1.restricted(a1), s2.restricted(a2)).support() == (a1 | a2), "(S1) union support fails" + ctx);

    // (S2)-(S4) along a random partition
    const std::size_t k = 2 + r.below(2);
    const auto d = random_partition(r, n, k);
    std::vector<ConditionalSet> vk, wk, vk_meet_v, vk_join_v, meets, joins, comps;
    for (std::size_t i = 0; i < k; ++i) {
        vk.push_back(random_set(r, n, m));
        wk.push_back(random_set(r, n, m));
        vk_meet_v.push_back(meet(vk[i], v));
        vk_join_v.push_back(join(vk[i], v));
        meets.push_back(meet(vk[i], wk[i]));
        joins.push_back(join(vk[i], wk[i]));
        comps.push_back(comp(vk[i]));
    }
    const auto cv = concatenate_sets(vk, d), cw = concatenate_sets(wk, d);
    CMS_EXPECT(meet(cv, v) == concatenate_sets(vk_meet_v, d), "(S2) intersection fails" + ctx);
    CMS_EXPECT(join(cv, v) == concatenate_sets(vk_join_v, d), "(S2) union fails" + ctx);
    CMS_EXPECT(concatenate_sets(meets, d) == meet(cv, cw), "(S3) intersection fails" + ctx);
    CMS_EXPECT(concatenate_sets(joins, d) == join(cv, cw), "(S3) union fails" + ctx);
    CMS_EXPECT(comp(cv) == concatenate_sets(comps, d), "(S4) fails for " + cv.str());

    if (n <= 3 && m <= 3) {
        std::size_t count = 0;
        CMS_EXPECT(comp(v) == oracle::brute_complement(v, &count), "complement differs from brute-force supremum for " + v.str());
        c.add("brute-force complements");
        c.add("enumerated sets", count);
    }
    c.add("lattice instances");
    return std::nullopt;
}

inline Failure pi_lambda(Rng& r, Size s, const Ops& ops, Counters& c) {
    std::vector<ConditionalSet> g0;
    const std::size_t k = 1 + r.below(3);
    for (std::size_t i = 0; i < k; ++i) g0.push_back(random_set(r, s.atoms, s.points));
    const StableCollection gen = meet_stable_closure(g0);
    std::string ctx = " [generator:";
    for (const auto& g : g0) ctx += " " + g.str();
    ctx += "]";
    CMS_EXPECT(is_stable_collection(gen), "generator closure is not stable" + ctx);
    const StableCollection sig = ops.sigma(gen);
    const StableCollection dyn = generate_dynkin(gen);
    CMS_EXPECT(sig == dyn, "sigma(E) != D(E): " + std::to_string(sig.size()) + " vs " + std::to_string(dyn.size()) + " members" + ctx);
    CMS_EXPECT(classify(sig) == CollectionKind::sigma, "generated collection is not a stable sigma-algebra" + ctx);
    try {
        CMS_EXPECT(to_fiberwise(sig) == fiberwise_sigma_oracle(gen), "sigma(E) differs from the fiberwise oracle" + ctx);
    } catch (const std::exception& e) {
        return std::string("sigma(E) is not fiberwise: ") + e.what() + ctx;
    }
    c.add("pi-lambda generators");
    return std::nullopt;
}

inline Failure measure(Rng& r, Size s, const Ops&, Counters& c) {
    const std::size_t n = s.atoms, m = s.points;
    const bool inf = r.chance(1, 3);
    const auto sigma = random_sigma(r, n, m);
    const StableMeasure mu = random_measure(r, sigma, inf);
    AxiomCheckOptions opt;
    opt.seed = r.next();
    const auto rep = check_measure_axioms(mu, opt);
    CMS_EXPECT(rep.ok, "measure axiom " + rep.axiom + " fails: " + rep.witness);
    c.add("measures");
    if (!is_finite(total_mass(mu))) c.add("infinite measures");

    // pre-measure on a random ring, its outer measure and extension
    std::vector<SetRing> rings;
    for (std::size_t a = 0; a < n; ++a) rings.push_back(random_ring(r, m));
    const StableRing ring(m, rings);
    const StableMeasure pm = random_measure(r, ring, r.chance(1, 4));
    const OuterMeasure outer(pm);
    std::vector<ConditionalSet> tests;
    if (n * m <= 8) tests = all_conditional_sets(n, m);
    else
        for (std::size_t i = 0; i < 40; ++i) tests.push_back(random_set(r, n, m));
    const auto orep = check_outer_axioms(outer, tests);
    CMS_EXPECT(orep.ok, "outer measure axiom " + orep.axiom + " fails: " + orep.witness);
    for (const auto& v : tests) {
        const auto x = outer(v);
        CMS_EXPECT(x == outer.by_cover_enumeration(v), "outer measure shortcut differs from cover enumeration on " + v.str());
        CMS_EXPECT(x == oracle::outer_measure(pm, v), "outer measure differs from the classical one on " + v.str());
    }
    c.add("outer measures");
    const StableMeasure ext = caratheodory_extend(pm);
    CMS_EXPECT(ext == oracle::caratheodory_extension(pm), "extension differs from the classical extension");
    for (const auto& v : ring.members())
        CMS_EXPECT(eval(ext, v) == eval(pm, v), "extension disagrees with the pre-measure on " + v.str());
    c.add("extensions");
    if (n * m <= 6) {
        for (const auto& v : block_generator(ring))
            CMS_EXPECT(is_caratheodory_measurable(outer, v), "ring member not Caratheodory measurable: " + v.str());
        std::vector<ConditionalSet> meas;
        for (const auto& v : all_conditional_sets(n, m))
            if (is_caratheodory_measurable(outer, v)) meas.push_back(v);
        const StableCollection mc(meas);
        CMS_EXPECT(classify(mc) == CollectionKind::sigma, "measurable sets do not form a stable sigma-algebra");
        const auto mrep = check_measure_axioms([&](const ConditionalSet& v) { return outer(v); }, mc, opt);
        CMS_EXPECT(mrep.ok, "outer measure on measurable sets violates " + mrep.axiom + ": " + mrep.witness);
        c.add("measurable-set checks");
    }
    // uniqueness on a stable, intersection-closed generator
    if (sigma.size() <= 512) {
        std::vector<std::vector<Mask>> options(n);
        for (std::size_t a = 0; a < n; ++a) {
            options[a] = {0, low_bits(m)};
            for (const auto& b : sigma.field(a).blocks())
                if (!b.is_full()) options[a].push_back(b.bits());
        }
        std::vector<ConditionalSet> gen;
        std::vector<std::size_t> idx(n, 0);
        while (true) {
            gen.push_back(build_conditional_set(n, m, [&](std::size_t a) { return options[a][idx[a]]; }));
            std::size_t a = 0;
            while (a < n && ++idx[a] == options[a].size()) idx[a++] = 0;
            if (a == n) break;
        }
        const StableCollection g(gen);
        const StableMeasure nu = caratheodory_extend(mu);
        if (uniqueness_preconditions(mu, nu, g)) {
            CMS_EXPECT(uniqueness_check(mu, nu, g.members()), "uniqueness fails for conforming measures");
            c.add("uniqueness pairs");
        }
    }
    return std::nullopt;
}

inline Failure integral(Rng& r, Size s, const Ops& ops, Counters& c) {
    const std::size_t n = s.atoms, m = s.points;
    const auto sigma = random_sigma(r, n, m);
    const bool inf = r.chance(1, 4);
    const StableMeasure mu = random_measure(r, sigma, inf);
    const StableMeasure fin = random_measure(r, sigma, false);
    const auto top = ConditionalSet::top(n, m);
    const auto one = Integrand::constant(n, m, 1), zero = Integrand::constant(n, m, 0);

    // (D1)-(D4)
    const auto sv = random_stable_set(r, n, m);
    const auto a = random_event(r, n);
    CMS_EXPECT(indicator(sv.restricted(a)) == concatenate_integrands({indicator(sv), zero}, {a, a.complement()}), "(D1) fails");
    const auto d = random_partition(r, n, 2);
    const std::vector<ConditionalSet> vk{random_set(r, n, m), random_set(r, n, m)};
    CMS_EXPECT(indicator(concatenate_sets(vk, d)) == concatenate_integrands({indicator(vk[0]), indicator(vk[1])}, d), "(D2) fails");
    const auto fam = random_disjoint_family(r, n, m, 3);
    CMS_EXPECT(indicator(cond_union(fam)) == indicator(fam[0]) + indicator(fam[1]) + indicator(fam[2]), "(D3) fails");
    const auto v = random_set(r, n, m);
    CMS_EXPECT(indicator(v) == one - indicator(cond_complement(v)), "(D4) fails on " + v.str());

    // oracle equivalence
    const Integrand f = random_integrand(r, sigma, r.chance(1, 2));
    const Integrand g = random_integrand(r, sigma, r.chance(1, 2));
    for (const auto* h : {&f, &g}) {
        const auto ref = oracle::integral(*h, mu);
        if (ref) {
            const auto got = ops.integrate(*h, mu);
            CMS_EXPECT(got == *ref, "integral " + to_string(got) + " != oracle " + to_string(*ref));
        }
        const auto got = ops.integrate(*h, fin);
        CMS_EXPECT(got == *oracle::integral(*h, fin), "integral " + to_string(got) + " differs from the finite-sum oracle");
        c.add("integrands");
    }
    // (I1) stability, (I3) linearity (finite measure), (I2) monotonicity
    const auto ifin = [&](const Integrand& h) { return ops.integrate(h, fin); };
    CMS_EXPECT(ifin(concatenate_integrands({f, g}, d)) == concatenate_field(std::vector<ExtScalarField>{ifin(f), ifin(g)}, d), "(I1) fails");
    std::vector<Rational> rv;
    for (std::size_t i = 0; i < n; ++i) rv.push_back(r.rational(-3, 3, 3));
    const ScalarField rf(rv);
    CMS_EXPECT(finite_part(ifin(rf * f + g)) == rf * finite_part(ifin(f)) + finite_part(ifin(g)), "(I3) fails");
    const Integrand pos = random_integrand(r, sigma, false);
    const Integrand fp = f.positive_part();
    CMS_EXPECT(ops.integrate(fp, mu) <= ops.integrate(fp + pos, mu), "(I2) fails");
    CMS_EXPECT(ops.integrate(indicator(top), fin) == total_mass(fin), "integral of 1 != mu(X)");

    // dyadic approximation: below f, increasing in n
    Integrand prev = zero;
    for (unsigned k = 1; k <= 6; ++k) {
        const Integrand fk = dyadic_approximation(fp, k).as_integrand();
        CMS_EXPECT(fk <= fp, "dyadic approximation exceeds f at n=" + std::to_string(k));
        CMS_EXPECT(prev <= fk, "dyadic approximation not increasing at n=" + std::to_string(k));
        prev = fk;
    }
    // sup of the dyadic integrals and monotone convergence on dyadic-valued integrands
    const Integrand big = random_dyadic_integrand(r, sigma);
    const Integrand small = min(big, random_dyadic_integrand(r, sigma));
    const unsigned top_n = stabilization_level(big) + 2;
    ExtScalarField best(n, ExtRational(0)), last(n, ExtRational(0));
    for (unsigned k = 1; k <= top_n; ++k) {
        const auto ik = dyadic_integral(big, mu, k);
        CMS_EXPECT(last <= ik, "integrals of the approximations not increasing");
        last = ik;
        best = ik;
    }
    CMS_EXPECT(ops.integrate(small, mu) <= best, "integral of f exceeds sup of dominating approximations");
    CMS_EXPECT(best == ops.integrate(big, mu), "sup of approximating integrals != integral of the limit");
    const Integrand h1 = random_integrand(r, sigma, false), h2 = random_integrand(r, sigma, false);
    CMS_EXPECT(ops.integrate(h1 + h2 + big, mu) == ops.integrate(h1, mu) + ops.integrate(h2, mu) + ops.integrate(big, mu),
               "series form of monotone convergence fails");
    CMS_EXPECT(ops.integrate(max(h1, h2), mu) == ops.integrate(h1 + (h2 - h1).positive_part(), mu), "sup of increasing pair fails");
    return std::nullopt;
}

inline Failure kernel(Rng& r, Size s, const Ops& ops, Counters& c) {
    const std::size_t n = s.atoms, m = s.points;
    std::vector<std::string> ids;
    std::vector<Rational> coords;
    while (coords.size() < m) {
        const Rational x = r.rational(-9, 9, 3);
        if (std::find(coords.begin(), coords.end(), x) == coords.end()) {
            coords.push_back(x);
            ids.push_back("e" + std::to_string(coords.size()));
        }
    }
    const GroundSpace ground(ids, coords);
    const StableMeasure mu = random_probability(r, StableSigmaAlgebra::discrete(n, m), true);
    const Kernel kap = Kernel(m, mu.per_atom());
    CMS_EXPECT(measure_to_kernel(kernel_to_measure(kap), ground) == kap, "kernel round trip fails");
    const StableMeasure back = kernel_to_measure(measure_to_kernel(mu, ground));
    CMS_EXPECT(back == mu, "measure round trip fails");
    for (int i = 0; i < 8; ++i) {
        const auto v = random_set(r, n, m);
        CMS_EXPECT(eval(back, v) == eval(mu, v), "measure round trip differs on " + v.str());
    }
    c.add("kernels");

    // conditional expectation on a random (xi, G, f)
    const std::size_t fa = 1 + r.below(6);
    std::vector<std::string> aid;
    std::vector<Rational> w;
    Rational tot = 0;
    for (std::size_t a = 0; a < fa; ++a) {
        aid.push_back("w" + std::to_string(a));
        w.emplace_back(static_cast<std::int64_t>(1 + r.below(5)));
        tot += w.back();
    }
    for (auto& x : w) x /= tot;
    const MeasureAlgebra p(aid, w);
    std::vector<std::size_t> xs;
    for (std::size_t a = 0; a < fa; ++a) xs.push_back(r.below(m));
    const RandomVariable xi(m, xs);
    std::vector<Event> blocks;
    for (const auto& e : random_partition(r, fa, 1 + r.below(fa)))
        if (!e.is_empty()) blocks.push_back(e);
    const SubAlgebra g(fa, blocks);
    std::vector<Rational> f;
    for (std::size_t e = 0; e < m; ++e) f.push_back(r.rational(-5, 5, 3));
    const auto nu = conditional_distribution(p, xi, g);
    const ScalarField ce = finite_part(ops.integrate(lift_function(f, g.size()), nu));
    CMS_EXPECT(ce == oracle::conditional_expectation(p, xi, g, f), "conditional expectation " + to_string(ce) + " differs from the classical value");
    Rational tower = 0;
    for (std::size_t b = 0; b < g.size(); ++b) tower += p.probability(g.block(b)) * ce[b];
    CMS_EXPECT(tower == expectation(p, xi, f), "tower property fails");
    CMS_EXPECT(is_probability(nu), "conditional distribution is not a probability measure");
    // G-stability: splice two random variables along a G-event
    std::vector<std::size_t> ys;
    for (std::size_t a = 0; a < fa; ++a) ys.push_back(r.below(m));
    const RandomVariable eta(m, ys);
    Mask gm = 0, fm = 0;
    for (std::size_t b = 0; b < g.size(); ++b)
        if (r.chance(1, 2)) {
            gm |= Mask{1} << b;
            fm |= g.block(b).bits();
        }
    std::vector<std::size_t> zs;
    for (std::size_t a = 0; a < fa; ++a) zs.push_back(((fm >> a) & 1U) ? xs[a] : ys[a]);
    const RandomVariable zeta(m, zs);
    const Event ge(g.size(), gm);
    const auto ce_eta = conditional_expectation(p, eta, g, f);
    CMS_EXPECT(conditional_expectation(p, zeta, g, f) ==
                   concatenate_field(std::vector<ScalarField>{conditional_expectation(p, xi, g, f), ce_eta}, {ge, ge.complement()}),
               "conditional expectation is not G-stable");
    c.add("conditional expectations");
    return std::nullopt;
}

inline Failure product_rn(Rng& r, Size s, const Ops& ops, Counters& c) {
    const std::size_t n = s.atoms;
    const std::size_t m1 = 1 + r.below(std::min<std::size_t>(s.points, 3));
    const std::size_t m2 = s.points;
    const ProductSpace ps(m1, m2);
    const auto sx = random_sigma(r, n, m1), sy = random_sigma(r, n, m2);
    const StableMeasure mu = random_probability(r, sx, true), nu = random_probability(r, sy, true);
    const StableMeasure lam = product_measure(mu, nu, ps);
    CMS_EXPECT(lam == oracle::product_measure(mu, nu, ps), "product measure differs from the fiberwise product");
    const auto v = random_member(r, sx), w = random_member(r, sy);
    CMS_EXPECT(eval(lam, cartesian_product(v, w)) == eval(mu, v) * eval(nu, w), "product of rectangle masses fails");
    const auto psig = ps.product_sigma(sx, sy);
    const Integrand f = random_integrand(r, psig, true);
    const auto tri = fubini(f, mu, nu, ps);
    CMS_EXPECT(tri.equal(), "Fubini triple differs: " + to_string(tri.product) + " " + to_string(tri.left_iterated) + " " + to_string(tri.right_iterated));
    CMS_EXPECT(tri.product == *oracle::integral(f, lam), "product integral differs from the oracle");
    c.add("fubini integrands");

    // (F1)-(F7)
    const auto z = random_set(r, n, ps.points()), z2 = random_set(r, n, ps.points());
    auto pf = [&](std::size_t pts) {
        std::vector<std::size_t> vals;
        for (std::size_t a = 0; a < n; ++a) vals.push_back(r.below(pts));
        return PointFunction(pts, vals);
    };
    const PointFunction x = pf(m1), x2 = pf(m1);
    const auto d = random_partition(r, n, 2);
    CMS_EXPECT(section(z, x, ps) == oracle::section(z, x, ps), "section differs from the fiber read-off");
    CMS_EXPECT(section(concatenate_sets(std::vector{z, z2}, d), x, ps) ==
                   concatenate_sets(std::vector{section(z, x, ps), section(z2, x, ps)}, d), "(F1) fails");
    CMS_EXPECT(section(z, concatenate_points({x, x2}, d), ps) == concatenate_sets(std::vector{section(z, x, ps), section(z, x2, ps)}, d),
               "(F2) fails");
    CMS_EXPECT(section(cond_union(z, z2), x, ps) == cond_union(section(z, x, ps), section(z2, x, ps)), "(F3) fails");
    CMS_EXPECT(cond_complement(section(z, x, ps)) == section(cond_complement(z), x, ps), "(F4) fails on " + z.str());
    const auto zm = random_member(r, psig);
    CMS_EXPECT(sy.contains(section(zm, x, ps)), "(F5) fails on " + zm.str());
    CMS_EXPECT(is_measurable(section(f, x, ps), sy), "(F6) fails");
    const Integrand s_nu = integrand_from(n, m1, [&](const PointFunction& xx) { return finite_part(eval(nu, section(zm, xx, ps))); });
    CMS_EXPECT(is_measurable(s_nu, sx), "(F7) fails on " + zm.str());
    c.add("sections");

    // positive set of a signed difference
    const StableMeasure m1s = random_measure(r, sx, false), m2s = random_measure(r, sx, false);
    const auto x0 = hahn_positive_set(m1s, m2s);
    CMS_EXPECT(x0 == oracle::positive_set(m1s, m2s), "positive set " + x0.str() + " differs from the oracle");
    const auto top = ConditionalSet::top(n, m1);
    CMS_EXPECT(signed_difference(m1s, m2s, top) <= signed_difference(m1s, m2s, x0), "positive set violates (i)");
    for (const auto& u : sx.members())
        if (cond_inclusion(u, x0))
            CMS_EXPECT(ScalarField(n, Rational(0)) <= signed_difference(m1s, m2s, u), "positive set violates (ii) at " + u.str());
    c.add("positive sets");

    // Radon-Nikodym with an absolutely continuous pair
    std::vector<FiberMeasure> per;
    for (std::size_t a = 0; a < n; ++a) {
        std::vector<Rational> wts;
        Rational tot = 0;
        for (const auto& x_ : mu.at(a).block_masses()) {
            wts.emplace_back(x_.is_zero() || r.chance(1, 4) ? 0 : static_cast<std::int64_t>(r.below(5)));
            tot += wts.back();
        }
        std::vector<ExtRational> ms;
        for (std::size_t i = 0; i < wts.size(); ++i) {
            if (tot.is_zero()) ms.push_back(mu.at(a).block_masses()[i]);
            else ms.emplace_back(wts[i] / tot);
        }
        per.emplace_back(mu.at(a).ring(), std::move(ms));
    }
    const StableMeasure nuac(m1, per);
    const Integrand dens = ops.density(mu, nuac);
    const auto bad = rn_certificate(dens, mu, nuac, true);
    CMS_EXPECT(!bad, "density certificate fails on " + (bad ? bad->str() : std::string()));
    c.add("radon-nikodym pairs");
    Integrand cur = Integrand::constant(n, m1, 0);
    for (int step = 0; step < 3; ++step) {
        const auto lx = finite_part(total_mass(rn_residual(cur, mu, nuac)));
        const Integrand next = rn_improvement_step(cur, mu, nuac);
        const auto before = integrate_finite(cur, mu), after = integrate_finite(next, mu);
        for (std::size_t a = 0; a < n; ++a) {
            if (lx[a].sign() > 0) CMS_EXPECT(before[a] < after[a], "improvement step does not increase the integral");
            else CMS_EXPECT(before[a] == after[a], "improvement step moves a settled atom");
        }
        cur = next;
    }
    c.add("improvement steps");

    // finite Daniell-Stone
    const StableMeasure mu0 = random_measure(r, StableSigmaAlgebra::discrete(n, m1), false);
    const auto l = [&](const Integrand& h) { return integrate_finite(h, mu0); };
    DaniellStoneOptions dopt;
    dopt.probes = 10;
    dopt.seed = r.next();
    const StableMeasure rec = daniell_stone_finite(l, n, m1, dopt);
    CMS_EXPECT(rec == mu0, "Daniell-Stone does not recover the integration functional");
    for (int i = 0; i < 3; ++i) {
        const Integrand h = random_integrand(r, StableSigmaAlgebra::discrete(n, m1), true);
        CMS_EXPECT(l(h) == integrate_finite(h, rec), "L(f) != integral of f");
    }
    const PointFunction xd = pf(m1);
    const StableMeasure dm = daniell_stone_finite([&](const Integrand& h) { return h(xd); }, n, m1, dopt);
    CMS_EXPECT(dm == dirac(xd, StableSigmaAlgebra::discrete(n, m1)), "Dirac functional does not give the Dirac measure");
    c.add("daniell-stone functionals");

    // Markov product
    std::vector<std::vector<std::vector<Rational>>> rows(n);
    for (std::size_t a = 0; a < n; ++a) {
        rows[a].assign(m1, {});
        for (const auto& b : sx.field(a).blocks()) {
            std::vector<Rational> row;
            Rational t = 0;
            for (std::size_t j = 0; j < m2; ++j) {
                row.emplace_back(static_cast<std::int64_t>(r.below(4)));
                t += row.back();
            }
            if (t.is_zero()) {
                row[0] = 1;
                t = 1;
            }
            for (auto& x_ : row) x_ /= t;
            for (std::size_t i : b.points()) rows[a][i] = row;
        }
    }
    const StableMarkovKernel k(m2, rows);
    const StableMeasure km = markov_product(k, mu, ps);
    CMS_EXPECT(km == oracle::markov_product(k, mu, ps), "Markov product differs from the row-weighted oracle");
    const Integrand fk = random_integrand(r, km.domain(), true);
    const auto [joint, iter] = markov_fubini(fk, k, mu, ps);
    CMS_EXPECT(joint == iter, "Markov Fubini identity fails");
    c.add("markov products");
    return std::nullopt;
}

}  // namespace suites

#undef CMS_EXPECT

inline const std::vector<Suite>& all_suites() {
    static const std::vector<Suite> s{
        {"lattice", "Boolean-algebra laws, (S1)-(S4), brute-force complement", {4, 5},
         [](Size) { return true; }, suites::lattice},
        {"pi-lambda", "sigma(E) = D(E) = fiberwise oracle on intersection-closed generators", {3, 4},
         [](Size z) { return z.atoms * z.points <= 8; }, suites::pi_lambda},
        {"measure", "(M1)-(M8), (A1)-(A3), Caratheodory extension, uniqueness", {3, 4},
         [](Size z) { return z.atoms * z.points <= 9; }, suites::measure},
        {"integral", "(D1)-(D4), (I1)-(I3), dyadic approximation, monotone convergence, oracle", {3, 4},
         [](Size) { return true; }, suites::integral},
        {"kernel", "kernel/measure reciprocity, conditional expectation, tower property", {4, 5},
         [](Size) { return true; }, suites::kernel},
        {"product-rn", "product measure, Fubini, (F1)-(F7), positive sets, Radon-Nikodym, Daniell-Stone, Markov", {2, 3},
         [](Size) { return true; }, suites::product_rn},
    };
    return s;
}

inline const Suite* find_suite(const std::string& name) {
    for (const auto& s : all_suites())
        if (s.name == name) return &s;
    return nullptr;
}

struct SuiteResult {
    std::string name;
    std::size_t cases = 0;
    std::size_t passed = 0;
    Counters counters;
    std::optional<std::string> failure;  ///< first failure, shrunk
    bool ok() const { return !failure; }
};

namespace detail {

inline Failure run_case(const Suite& s, std::uint64_t seed, Size z, const Ops& ops, Counters& c) {
    Rng r(seed);
    try {
        return s.run(r, z, ops, c);
    } catch (const std::exception& e) {
        return std::string("exception: ") + e.what();
    }
}

inline Size draw_size(const Suite& s, Rng& r) {
    while (true) {
        Size z{1 + r.below(s.max.atoms), 1 + r.below(s.max.points)};
        if (s.admissible(z)) return z;
    }
}

/// Smallest (atoms * points, atoms, points) at which some derived seed fails.
inline std::optional<std::pair<Size, std::string>> shrink(const Suite& s, std::uint64_t seed, Size failing, const Ops& ops) {
    std::vector<Size> sizes;
    for (std::size_t a = 1; a <= failing.atoms; ++a)
        for (std::size_t p = 1; p <= failing.points; ++p)
            if (s.admissible({a, p})) sizes.push_back({a, p});
    std::stable_sort(sizes.begin(), sizes.end(), [](Size x, Size y) { return x.atoms * x.points < y.atoms * y.points; });
    Counters scratch;
    for (const auto& z : sizes)
        for (std::uint64_t t = 0; t < 40; ++t)
            if (auto f = run_case(s, mix(seed, t), z, ops, scratch)) return std::pair{z, *f};
    return std::nullopt;
}

}  // namespace detail

inline SuiteResult run_suite(const Suite& s, std::uint64_t seed, std::size_t cases, const Ops& ops) {
    SuiteResult res;
    res.name = s.name;
    const std::uint64_t base = mix(seed, hash_name(s.name));
    for (std::size_t i = 0; i < cases; ++i) {
        const std::uint64_t cs = mix(base, i);
        Rng sizer(cs);
        const Size z = detail::draw_size(s, sizer);
        ++res.cases;
        if (auto f = detail::run_case(s, mix(cs, 0xC0FFEE), z, ops, res.counters)) {
            std::ostringstream os;
            os << "case " << i << " (atoms=" << z.atoms << ", points=" << z.points << "): " << *f;
            if (auto sh = detail::shrink(s, cs, z, ops))
                os << "\n    shrunk to atoms=" << sh->first.atoms << ", points=" << sh->first.points << ": " << sh->second;
            res.failure = os.str();
            break;
        }
        ++res.passed;
    }
    return res;
}

struct VerifyOptions {
    std::uint64_t seed = 42;
    std::size_t cases = 100;
    std::string suite;  ///< empty = all
    Fault fault = Fault::none;
};

struct VerifyReport {
    std::vector<SuiteResult> results;
    bool ok() const {
        return std::all_of(results.begin(), results.end(), [](const SuiteResult& r) { return r.ok(); });
    }
};

inline VerifyReport run_verify(const VerifyOptions& opt) {
    const Ops ops = Ops::with(opt.fault);
    VerifyReport rep;
    for (const auto& s : all_suites())
        if (opt.suite.empty() || opt.suite == s.name) rep.results.push_back(run_suite(s, opt.seed, opt.cases, ops));
    if (rep.results.empty()) throw invalid_argument("unknown suite '" + opt.suite + "'");
    return rep;
}

}  // namespace cms::verify
