#pragma once

// Stable rings, Dynkin systems and sigma-algebras of conditional sets.
//
// Two representations are used. Extensionally, a stable collection is the
// explicit list of its members; generation is a closure fixpoint over the
// conditional lattice. Intensionally, a stable ring (sigma-algebra) is one
// classical ring (field) of subsets of E per atom, with the empty set standing
// for "unsupported at this atom". Both are interconvertible.

#include "cms/conditional_set.hpp"

#include <algorithm>
#include <map>
#include <unordered_set>

namespace cms {

/// A classical ring of subsets of a finite E, stored by its atoms (blocks):
/// pairwise disjoint nonempty sets whose unions are exactly the members.
class SetRing {
public:
    SetRing() = default;
    SetRing(std::size_t points, std::vector<PointSet> blocks) : n_(points), blocks_(std::move(blocks)) {
        Mask seen = 0;
        for (const auto& b : blocks_) {
            if (b.size() != n_ || b.is_empty()) throw invalid_argument("ring blocks must be nonempty");
            if (seen & b.bits()) throw invalid_argument("ring blocks must be disjoint");
            seen |= b.bits();
        }
        std::sort(blocks_.begin(), blocks_.end(), [](const PointSet& x, const PointSet& y) {
            return std::countr_zero(x.bits()) < std::countr_zero(y.bits());
        });
    }

    static SetRing discrete(std::size_t points) {
        std::vector<PointSet> b;
        for (std::size_t p = 0; p < points; ++p) b.push_back(PointSet::single(points, p));
        return SetRing(points, std::move(b));
    }
    static SetRing trivial(std::size_t points) { return SetRing(points, {PointSet::full(points)}); }

    /// The smallest field containing `sets` (partition refinement starting from {E}).
    static SetRing generated_field(std::size_t points, const std::vector<PointSet>& sets) {
        std::vector<PointSet> blocks{PointSet::full(points)};
        for (const auto& s : sets) {
            std::vector<PointSet> next;
            for (const auto& b : blocks) {
                if (!(b & s).is_empty()) next.push_back(b & s);
                if (!(b - s).is_empty()) next.push_back(b - s);
            }
            blocks = std::move(next);
        }
        return SetRing(points, std::move(blocks));
    }

    /// The smallest ring containing `sets`.
    static SetRing generated_ring(std::size_t points, const std::vector<PointSet>& sets) {
        PointSet cover = PointSet::empty(points);
        for (const auto& s : sets) cover = cover | s;
        std::vector<PointSet> blocks;
        if (!cover.is_empty()) blocks.push_back(cover);
        for (const auto& s : sets) {
            std::vector<PointSet> next;
            for (const auto& b : blocks) {
                if (!(b & s).is_empty()) next.push_back(b & s);
                if (!(b - s).is_empty()) next.push_back(b - s);
            }
            blocks = std::move(next);
        }
        return SetRing(points, std::move(blocks));
    }

    /// Validates an explicit member list (must contain the empty set and be
    /// closed under union and difference) and recovers its blocks.
    static SetRing from_members(std::size_t points, const std::vector<PointSet>& members) {
        std::vector<Mask> ms;
        for (const auto& m : members) {
            if (m.size() != points) throw invalid_argument("ring member over wrong ground space");
            ms.push_back(m.bits());
        }
        std::sort(ms.begin(), ms.end());
        ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
        auto has = [&](Mask m) { return std::binary_search(ms.begin(), ms.end(), m); };
        if (!has(0)) throw invalid_argument("ring must contain the empty set");
        for (Mask x : ms)
            for (Mask y : ms)
                if (!has(x | y) || !has(x & ~y)) throw invalid_argument("family is not closed under union and difference");
        Mask cover = 0;
        for (Mask x : ms) cover |= x;
        std::vector<PointSet> blocks;
        Mask done = 0;
        for (std::size_t p = 0; p < points; ++p) {
            if (!((cover >> p) & 1U) || ((done >> p) & 1U)) continue;
            Mask b = cover;
            for (Mask x : ms)
                if ((x >> p) & 1U) b &= x;
            blocks.emplace_back(points, b);
            done |= b;
        }
        return SetRing(points, std::move(blocks));
    }

    std::size_t points() const { return n_; }
    const std::vector<PointSet>& blocks() const { return blocks_; }
    PointSet cover() const {
        PointSet c = PointSet::empty(n_);
        for (const auto& b : blocks_) c = c | b;
        return c;
    }
    bool is_field() const { return cover().is_full(); }

    /// Member test: s is a union of blocks.
    bool contains(const PointSet& s) const {
        Mask rest = s.bits();
        for (const auto& b : blocks_) {
            Mask in = s.bits() & b.bits();
            if (in != 0 && in != b.bits()) return false;
            rest &= ~b.bits();
        }
        return rest == 0;
    }

    /// Index of the block containing p, if any.
    std::optional<std::size_t> block_of(std::size_t p) const {
        for (std::size_t i = 0; i < blocks_.size(); ++i)
            if (blocks_[i].contains(p)) return i;
        return std::nullopt;
    }

    /// Blocks contained in s (s must be a member).
    std::vector<std::size_t> blocks_in(const PointSet& s) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < blocks_.size(); ++i)
            if (blocks_[i].subset_of(s)) out.push_back(i);
        return out;
    }

    /// All members, ordered by bit pattern.
    std::vector<PointSet> members() const {
        if (blocks_.size() > 20) throw invalid_argument("ring too large to enumerate");
        std::vector<PointSet> out;
        for (Mask sel = 0; sel < (Mask{1} << blocks_.size()); ++sel) {
            Mask m = 0;
            for (std::size_t i = 0; i < blocks_.size(); ++i)
                if ((sel >> i) & 1U) m |= blocks_[i].bits();
            out.emplace_back(n_, m);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    friend bool operator==(const SetRing&, const SetRing&) = default;

private:
    std::size_t n_ = 0;
    std::vector<PointSet> blocks_;
};

/// Explicit finite collection of conditional sets (sorted, duplicate-free).
class StableCollection {
public:
    StableCollection() = default;
    explicit StableCollection(std::vector<ConditionalSet> members) : m_(std::move(members)) {
        if (m_.empty()) throw invalid_argument("collection must be nonempty");
        for (const auto& v : m_) detail::check_same_shape(m_.front(), v);
        std::sort(m_.begin(), m_.end());
        m_.erase(std::unique(m_.begin(), m_.end()), m_.end());
    }
    const std::vector<ConditionalSet>& members() const { return m_; }
    std::size_t size() const { return m_.size(); }
    std::size_t atoms() const { return m_.front().atoms(); }
    std::size_t points() const { return m_.front().points(); }
    bool contains(const ConditionalSet& v) const { return std::binary_search(m_.begin(), m_.end(), v); }
    auto begin() const { return m_.begin(); }
    auto end() const { return m_.end(); }
    friend bool operator==(const StableCollection&, const StableCollection&) = default;

private:
    std::vector<ConditionalSet> m_;
};

/// Per-atom classical rings describing a product-form stable collection.
class FiberwiseFamily {
public:
    FiberwiseFamily() = default;
    FiberwiseFamily(std::size_t points, std::vector<SetRing> rings) : n_(points), rings_(std::move(rings)) {
        if (rings_.empty()) throw invalid_argument("family needs at least one atom");
        for (const auto& r : rings_)
            if (r.points() != n_) throw invalid_argument("ring over wrong ground space");
    }

    std::size_t atoms() const { return rings_.size(); }
    std::size_t points() const { return n_; }
    const SetRing& ring(std::size_t a) const { return rings_.at(a); }
    const std::vector<SetRing>& rings() const { return rings_; }

    /// V belongs iff every supported fiber is a member of that atom's ring.
    bool contains(const ConditionalSet& v) const {
        if (v.atoms() != atoms() || v.points() != n_) return false;
        for (std::size_t a : v.support().atoms())
            if (!rings_[a].contains(v.fiber(a))) return false;
        return true;
    }

    /// Number of members (product of per-atom member counts).
    std::size_t size() const {
        std::size_t s = 1;
        for (const auto& r : rings_) s *= std::size_t{1} << r.blocks().size();
        return s;
    }

    /// Extensional form: every member, in canonical order.
    StableCollection members() const {
        std::vector<std::vector<PointSet>> per;
        for (const auto& r : rings_) per.push_back(r.members());
        std::vector<ConditionalSet> out;
        std::vector<std::size_t> idx(atoms(), 0);
        while (true) {
            out.push_back(build_conditional_set(atoms(), n_, [&](std::size_t a) { return per[a][idx[a]].bits(); }));
            std::size_t a = 0;
            while (a < atoms() && ++idx[a] == per[a].size()) idx[a++] = 0;
            if (a == atoms()) break;
        }
        return StableCollection(std::move(out));
    }

    friend bool operator==(const FiberwiseFamily&, const FiberwiseFamily&) = default;

protected:
    std::size_t n_ = 0;
    std::vector<SetRing> rings_;
};

/// Stable ring in fiberwise form.
class StableRing : public FiberwiseFamily {
public:
    StableRing() = default;
    StableRing(std::size_t points, std::vector<SetRing> rings) : FiberwiseFamily(points, std::move(rings)) {}
};

/// Stable sigma-algebra in fiberwise form: one field per atom.
class StableSigmaAlgebra : public FiberwiseFamily {
public:
    StableSigmaAlgebra() = default;
    StableSigmaAlgebra(std::size_t points, std::vector<SetRing> fields) : FiberwiseFamily(points, std::move(fields)) {
        for (const auto& f : rings_)
            if (!f.is_field()) throw invalid_argument("sigma-algebra needs a field at every atom");
    }
    const SetRing& field(std::size_t a) const { return ring(a); }

    /// {X|A : A event}.
    static StableSigmaAlgebra trivial(std::size_t atoms, std::size_t points) {
        return StableSigmaAlgebra(points, std::vector<SetRing>(atoms, SetRing::trivial(points)));
    }
    /// The whole conditional power set.
    static StableSigmaAlgebra discrete(std::size_t atoms, std::size_t points) {
        return StableSigmaAlgebra(points, std::vector<SetRing>(atoms, SetRing::discrete(points)));
    }
    StableRing as_ring() const { return StableRing(n_, rings_); }
};

/// Per-atom fiber families {fiber_a(V)} (empty set = unsupported) of a collection.
inline std::vector<std::vector<PointSet>> atom_families(const StableCollection& c) {
    std::vector<std::vector<PointSet>> out(c.atoms());
    for (std::size_t a = 0; a < c.atoms(); ++a) {
        for (const auto& v : c) out[a].push_back(v.fiber(a));
        std::sort(out[a].begin(), out[a].end());
        out[a].erase(std::unique(out[a].begin(), out[a].end()), out[a].end());
    }
    return out;
}

namespace detail {

/// Every concatenation of members along the atomic partition, fed to `sink`
/// until it returns false. Returns false if stopped early.
template <class Sink>
bool for_each_atomic_concatenation(const std::vector<ConditionalSet>& members, Sink&& sink) {
    const std::size_t n = members.front().atoms();
    std::vector<Event> partition;
    for (std::size_t a = 0; a < n; ++a) partition.push_back(Event::atom(n, a));
    // One representative member per distinct fiber at each atom.
    std::vector<std::vector<std::size_t>> reps(n);
    for (std::size_t a = 0; a < n; ++a) {
        std::vector<Mask> seen;
        for (std::size_t i = 0; i < members.size(); ++i) {
            Mask f = members[i].raw_fibers()[a];
            if (std::find(seen.begin(), seen.end(), f) == seen.end()) {
                seen.push_back(f);
                reps[a].push_back(i);
            }
        }
    }
    std::vector<std::size_t> idx(n, 0);
    std::vector<ConditionalSet> pick(n);
    while (true) {
        for (std::size_t a = 0; a < n; ++a) pick[a] = members[reps[a][idx[a]]];
        if (!sink(concatenate_sets(pick, partition))) return false;
        std::size_t a = 0;
        while (a < n && ++idx[a] == reps[a].size()) idx[a++] = 0;
        if (a == n) return true;
    }
}

}  // namespace detail

/// True iff every concatenation of members along the atoms is a member.
inline bool is_stable_collection(const StableCollection& c) {
    std::unordered_set<ConditionalSet> set(c.begin(), c.end());
    return detail::for_each_atomic_concatenation(c.members(), [&](const ConditionalSet& v) { return set.contains(v); });
}

enum class CollectionKind { none, ring, dynkin, sigma };

inline const char* to_string(CollectionKind k) {
    switch (k) {
        case CollectionKind::ring: return "ring";
        case CollectionKind::dynkin: return "dynkin";
        case CollectionKind::sigma: return "sigma";
        default: return "none";
    }
}

/// Strongest of ring / Dynkin system / sigma-algebra whose defining closures hold.
inline CollectionKind classify(const StableCollection& c) {
    if (!is_stable_collection(c)) return CollectionKind::none;
    const auto& ms = c.members();
    const bool has_top = c.contains(ConditionalSet::top(c.atoms(), c.points()));
    bool complements = true, unions = true, disjoint_unions = true, differences = true;
    for (const auto& v : ms) {
        const ConditionalSet vc = cond_complement(v);
        if (!c.contains(vc)) complements = false;
        for (const auto& w : ms) {
            const ConditionalSet u = cond_union(v, w);
            if (!c.contains(u)) {
                unions = false;
                if (disjoint(v, w)) disjoint_unions = false;
            }
            if (!c.contains(cond_intersection(v, cond_complement(w)))) differences = false;
        }
    }
    if (has_top && complements && unions) return CollectionKind::sigma;
    if (has_top && complements && disjoint_unions) return CollectionKind::dynkin;
    if (unions && differences) return CollectionKind::ring;
    return CollectionKind::none;
}

namespace detail {

/// Least collection containing `generator` and X that is closed under
/// concatenation, complement (unless disabled) and the binary unions
/// admitted by `admit`.
template <class Admit>
StableCollection closure(std::span<const ConditionalSet> generator, Admit&& admit, bool complements = true) {
    if (generator.empty()) throw invalid_argument("empty generator");
    const std::size_t atoms = generator.front().atoms(), points = generator.front().points();
    std::unordered_set<ConditionalSet> seen;
    std::vector<ConditionalSet> all;
    auto add = [&](const ConditionalSet& v) {
        if (seen.insert(v).second) all.push_back(v);
    };
    add(ConditionalSet::top(atoms, points));
    for (const auto& g : generator) {
        check_same_shape(generator.front(), g);
        add(g);
    }
    std::size_t done = 0;
    while (true) {
        // concatenation closure of everything so far
        std::vector<ConditionalSet> snapshot = all;
        for_each_atomic_concatenation(snapshot, [&](const ConditionalSet& v) {
            add(v);
            return true;
        });
        if (done == all.size()) break;
        const std::size_t frontier = all.size();
        for (std::size_t i = done; i < frontier; ++i) {
            if (complements) add(cond_complement(all[i]));
            for (std::size_t j = 0; j <= i; ++j)
                if (admit(all[i], all[j])) add(cond_union(all[i], all[j]));
        }
        done = frontier;
    }
    return StableCollection(std::move(all));
}

}  // namespace detail

/// Sigma(E) as an explicit member list: least fixpoint of concatenation,
/// complement and finite union starting from the generator.
inline StableCollection sigma_closure(std::span<const ConditionalSet> generator) {
    return detail::closure(generator, [](const ConditionalSet&, const ConditionalSet&) { return true; });
}
inline StableCollection sigma_closure(const StableCollection& g) { return sigma_closure(std::span(g.members())); }

/// D(E): least fixpoint of concatenation, complement and disjoint finite union.
inline StableCollection generate_dynkin(std::span<const ConditionalSet> generator) {
    return detail::closure(generator, [](const ConditionalSet& v, const ConditionalSet& w) { return disjoint(v, w); });
}
inline StableCollection generate_dynkin(const StableCollection& g) { return generate_dynkin(std::span(g.members())); }

/// Converts an explicit stable sigma-algebra into fiberwise form; throws if
/// the collection is not a product of per-atom fields.
inline StableSigmaAlgebra to_fiberwise(const StableCollection& c) {
    auto fams = atom_families(c);
    std::vector<SetRing> fields;
    for (const auto& fam : fams) fields.push_back(SetRing::from_members(c.points(), fam));
    StableSigmaAlgebra s(c.points(), std::move(fields));
    if (s.size() != c.size()) throw invalid_argument("collection is not concatenation-closed");
    return s;
}

/// Same for stable rings (per-atom rings, not necessarily fields).
inline StableRing to_fiberwise_ring(const StableCollection& c) {
    auto fams = atom_families(c);
    std::vector<SetRing> rings;
    for (const auto& fam : fams) rings.push_back(SetRing::from_members(c.points(), fam));
    StableRing r(c.points(), std::move(rings));
    if (r.size() != c.size()) throw invalid_argument("collection is not concatenation-closed");
    return r;
}

/// Stable sigma-algebra generated by `generator`.
inline StableSigmaAlgebra generate_sigma(std::span<const ConditionalSet> generator) {
    return to_fiberwise(sigma_closure(generator));
}
inline StableSigmaAlgebra generate_sigma(const StableCollection& g) { return generate_sigma(std::span(g.members())); }

/// Sigma(E) == D(E), which holds whenever E is stable and closed under finite intersections.
inline bool pi_lambda_check(const StableCollection& generator) {
    return sigma_closure(generator) == generate_dynkin(generator);
}

/// Independent route to Sigma(E): per atom, the classical field generated by
/// the fibers present there together with E (blocks = points grouped by
/// membership signature), then the product of those fields.
inline StableSigmaAlgebra fiberwise_sigma_oracle(std::span<const ConditionalSet> generator) {
    if (generator.empty()) throw invalid_argument("empty generator");
    const std::size_t atoms = generator.front().atoms(), points = generator.front().points();
    std::vector<SetRing> fields;
    for (std::size_t a = 0; a < atoms; ++a) {
        std::vector<Mask> sets;
        for (const auto& v : generator)
            if (v.support().contains(a)) sets.push_back(v.raw_fibers()[a]);
        std::map<std::vector<bool>, Mask> groups;
        for (std::size_t p = 0; p < points; ++p) {
            std::vector<bool> sig;
            for (Mask s : sets) sig.push_back((s >> p) & 1U);
            groups[sig] |= Mask{1} << p;
        }
        std::vector<PointSet> blocks;
        for (const auto& [sig, m] : groups) blocks.emplace_back(points, m);
        fields.emplace_back(points, std::move(blocks));
    }
    return StableSigmaAlgebra(points, std::move(fields));
}
inline StableSigmaAlgebra fiberwise_sigma_oracle(const StableCollection& g) { return fiberwise_sigma_oracle(std::span(g.members())); }

/// Stable function L^0(E_X) -> L^0(E_Y): acts at each atom by a point map.
class StableFunction {
public:
    StableFunction(std::size_t source_points, std::size_t target_points, std::vector<std::vector<std::size_t>> maps)
        : src_(source_points), dst_(target_points), maps_(std::move(maps)) {
        for (const auto& g : maps_) {
            if (g.size() != src_) throw invalid_argument("point map must be total");
            for (auto y : g)
                if (y >= dst_) throw invalid_argument("point map value out of range");
        }
    }
    static StableFunction identity(std::size_t atoms, std::size_t points) {
        std::vector<std::size_t> id(points);
        for (std::size_t p = 0; p < points; ++p) id[p] = p;
        return StableFunction(points, points, std::vector<std::vector<std::size_t>>(atoms, id));
    }
    std::size_t atoms() const { return maps_.size(); }
    std::size_t source_points() const { return src_; }
    std::size_t target_points() const { return dst_; }
    std::size_t map(std::size_t a, std::size_t p) const { return maps_.at(a).at(p); }

    PointFunction operator()(const PointFunction& x) const {
        std::vector<std::size_t> v;
        for (std::size_t a = 0; a < atoms(); ++a) v.push_back(maps_[a][x(a)]);
        return PointFunction(dst_, std::move(v));
    }

private:
    std::size_t src_, dst_;
    std::vector<std::vector<std::size_t>> maps_;
};

/// f^{-1}(W|A) = V|C*, C* the largest event in A where some x has f(x) in W.
inline ConditionalSet cond_preimage(const StableFunction& f, const ConditionalSet& w) {
    if (w.atoms() != f.atoms() || w.points() != f.target_points()) throw invalid_argument("preimage over wrong space");
    auto pre = [&](std::size_t a) {
        Mask m = 0;
        for (std::size_t p = 0; p < f.source_points(); ++p)
            if (w.fiber(a).contains(f.map(a, p))) m |= Mask{1} << p;
        return m;
    };
    const Event c_star = largest_event(w.atoms(), [&](const Event& b) {
        for (std::size_t a : b.atoms())
            if (!w.support().contains(a) || pre(a) == 0) return false;
        return true;
    });
    return build_conditional_set(w.atoms(), f.source_points(),
                                 [&](std::size_t a) { return c_star.contains(a) ? pre(a) : Mask{0}; });
}

/// Generator of a fiberwise sigma-algebra: X plus each field block placed at a single atom.
inline std::vector<ConditionalSet> block_generator(const FiberwiseFamily& s) {
    std::vector<ConditionalSet> gen{ConditionalSet::top(s.atoms(), s.points())};
    for (std::size_t a = 0; a < s.atoms(); ++a)
        for (const auto& b : s.ring(a).blocks())
            gen.push_back(ConditionalSet::uniform(Event::atom(s.atoms(), a), b));
    return gen;
}

/// Checks f^{-1}(V) in X for every V of a generator of Y.
inline bool is_stably_measurable(const StableFunction& f, const StableSigmaAlgebra& x, const StableSigmaAlgebra& y) {
    for (const auto& v : block_generator(y))
        if (!x.contains(cond_preimage(f, v))) return false;
    return true;
}

/// Same test against every member of Y.
inline bool is_stably_measurable_exhaustive(const StableFunction& f, const StableSigmaAlgebra& x,
                                            const StableSigmaAlgebra& y) {
    for (const auto& v : y.members())
        if (!x.contains(cond_preimage(f, v))) return false;
    return true;
}

}  // namespace cms
