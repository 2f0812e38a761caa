#pragma once

// Conditional subsets V|A of the stable set of all atomwise-constant point
// functions. Over finitely many atoms a stable set is a product of nonempty
// per-atom fibers, so a conditional set is a support event plus one nonempty
// fiber per supported atom. The conditional power set is a complete Boolean
// algebra under the operations defined here.

#include "cms/measure_algebra.hpp"

#include <boost/container/small_vector.hpp>

#include <optional>
#include <string>
#include <vector>

namespace cms {

inline constexpr std::size_t max_points = 64;

/// A set of points of a ground space with `size()` points.
class PointSet {
public:
    PointSet() = default;
    PointSet(std::size_t points, Mask bits) : n_(points), bits_(bits & low_bits(points)) {}
    static PointSet empty(std::size_t points) { return PointSet(points, 0); }
    static PointSet full(std::size_t points) { return PointSet(points, low_bits(points)); }
    static PointSet single(std::size_t points, std::size_t p) { return PointSet(points, Mask{1} << p); }
    static PointSet of(std::size_t points, std::initializer_list<std::size_t> ps) {
        Mask m = 0;
        for (auto p : ps) m |= Mask{1} << p;
        return PointSet(points, m);
    }

    std::size_t size() const { return n_; }
    Mask bits() const { return bits_; }
    bool contains(std::size_t p) const { return (bits_ >> p) & 1U; }
    bool is_empty() const { return bits_ == 0; }
    bool is_full() const { return bits_ == low_bits(n_); }
    std::size_t count() const { return static_cast<std::size_t>(std::popcount(bits_)); }
    bool subset_of(const PointSet& o) const { return (bits_ & ~o.bits_) == 0; }

    PointSet complement() const { return PointSet(n_, ~bits_); }
    friend PointSet operator|(PointSet a, const PointSet& b) { return PointSet(a.n_, a.bits_ | b.bits_); }
    friend PointSet operator&(PointSet a, const PointSet& b) { return PointSet(a.n_, a.bits_ & b.bits_); }
    friend PointSet operator-(PointSet a, const PointSet& b) { return PointSet(a.n_, a.bits_ & ~b.bits_); }

    std::vector<std::size_t> points() const {
        std::vector<std::size_t> out;
        for (std::size_t p = 0; p < n_; ++p)
            if (contains(p)) out.push_back(p);
        return out;
    }

    friend bool operator==(const PointSet&, const PointSet&) = default;
    friend auto operator<=>(const PointSet&, const PointSet&) = default;

private:
    std::size_t n_ = 0;
    Mask bits_ = 0;
};

/// Finite ground space E: distinct point identifiers, optional distinct rational coordinates.
class GroundSpace {
public:
    explicit GroundSpace(std::vector<std::string> ids, std::optional<std::vector<Rational>> coords = std::nullopt)
        : ids_(std::move(ids)), coords_(std::move(coords)) {
        if (ids_.empty()) throw invalid_argument("ground space must be nonempty");
        if (ids_.size() > max_points) throw invalid_argument("too many points (max 64)");
        for (std::size_t i = 0; i < ids_.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (ids_[i] == ids_[j]) throw invalid_argument("duplicate point id '" + ids_[i] + "'");
        if (coords_) {
            if (coords_->size() != ids_.size()) throw invalid_argument("coordinate count mismatch");
            for (std::size_t i = 0; i < coords_->size(); ++i)
                for (std::size_t j = 0; j < i; ++j)
                    if ((*coords_)[i] == (*coords_)[j]) throw invalid_argument("coordinates must be distinct");
        }
    }

    /// Points "1".."n" with coordinates 1..n.
    static GroundSpace integers(std::size_t n) {
        std::vector<std::string> ids;
        std::vector<Rational> c;
        for (std::size_t i = 1; i <= n; ++i) {
            ids.push_back(std::to_string(i));
            c.emplace_back(static_cast<std::int64_t>(i));
        }
        return GroundSpace(std::move(ids), std::move(c));
    }

    std::size_t size() const { return ids_.size(); }
    const std::string& id(std::size_t p) const { return ids_.at(p); }
    const std::vector<std::string>& ids() const { return ids_; }
    bool has_coordinates() const { return coords_.has_value(); }
    const Rational& coordinate(std::size_t p) const {
        if (!coords_) throw invalid_argument("ground space has no coordinates");
        return coords_->at(p);
    }
    const std::optional<std::vector<Rational>>& coordinates() const { return coords_; }

    std::size_t index_of(const std::string& id) const {
        for (std::size_t p = 0; p < ids_.size(); ++p)
            if (ids_[p] == id) return p;
        throw invalid_argument("unknown point '" + id + "'");
    }

    friend bool operator==(const GroundSpace&, const GroundSpace&) = default;

private:
    std::vector<std::string> ids_;
    std::optional<std::vector<Rational>> coords_;
};

/// Atomwise-constant function Omega -> E: one point per atom.
class PointFunction {
public:
    PointFunction() = default;
    PointFunction(std::size_t points, std::vector<std::size_t> values) : n_(points), v_(std::move(values)) {
        for (auto p : v_)
            if (p >= n_) throw invalid_argument("point function value out of range");
    }
    static PointFunction constant(std::size_t atoms, std::size_t points, std::size_t p) {
        return PointFunction(points, std::vector<std::size_t>(atoms, p));
    }
    std::size_t atoms() const { return v_.size(); }
    std::size_t points() const { return n_; }
    std::size_t operator()(std::size_t a) const { return v_.at(a); }
    const std::vector<std::size_t>& values() const { return v_; }
    friend bool operator==(const PointFunction&, const PointFunction&) = default;

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> v_;
};

/// Concatenation sum x_k|A_k of point functions along a partition.
inline PointFunction concatenate_points(const std::vector<PointFunction>& xs, const std::vector<Event>& partition) {
    if (xs.empty() || xs.size() != partition.size() || !is_partition(partition, xs.front().atoms()))
        throw invalid_argument("not a partition");
    std::vector<std::size_t> v(xs.front().atoms());
    for (std::size_t k = 0; k < xs.size(); ++k)
        for (std::size_t a : partition[k].atoms()) v[a] = xs[k](a);
    return PointFunction(xs.front().points(), std::move(v));
}

using FiberVector = boost::container::small_vector<Mask, 8>;

/// A stable subset of L^0(E): a product of nonempty per-atom fibers.
class StableSet {
public:
    StableSet(std::size_t points, std::vector<PointSet> fibers) : n_(points), fibers_(std::move(fibers)) {
        for (const auto& f : fibers_)
            if (f.is_empty() || f.size() != n_) throw invalid_argument("stable set fibers must be nonempty");
    }
    std::size_t atoms() const { return fibers_.size(); }
    std::size_t points() const { return n_; }
    const PointSet& fiber(std::size_t a) const { return fibers_.at(a); }
    friend bool operator==(const StableSet&, const StableSet&) = default;

private:
    std::size_t n_;
    std::vector<PointSet> fibers_;
};

/// V|A: a support event A and a nonempty fiber for every atom of A.
/// The value with empty support is the least element {*}.
class ConditionalSet {
public:
    ConditionalSet() = default;

    /// Builds from per-atom fibers; empty fibers mark unsupported atoms.
    static ConditionalSet from_fibers(std::size_t points, const std::vector<PointSet>& fibers) {
        ConditionalSet v(fibers.size(), points);
        for (std::size_t a = 0; a < fibers.size(); ++a) {
            if (fibers[a].size() != points) throw invalid_argument("fiber over wrong ground space");
            v.set_fiber(a, fibers[a].bits());
        }
        return v;
    }

    /// Builds V|A; every supported fiber must be nonempty.
    static ConditionalSet make(const Event& support, std::size_t points, const std::vector<PointSet>& fibers) {
        if (fibers.size() != support.size()) throw invalid_argument("fiber count must equal atom count");
        ConditionalSet v(support.size(), points);
        for (std::size_t a = 0; a < fibers.size(); ++a) {
            if (!support.contains(a)) continue;
            if (fibers[a].is_empty()) throw invalid_argument("fibers must be nonempty on the support");
            v.set_fiber(a, fibers[a].bits());
        }
        return v;
    }

    static ConditionalSet bottom(std::size_t atoms, std::size_t points) { return ConditionalSet(atoms, points); }
    static ConditionalSet top(std::size_t atoms, std::size_t points) {
        ConditionalSet v(atoms, points);
        for (std::size_t a = 0; a < atoms; ++a) v.set_fiber(a, low_bits(points));
        return v;
    }
    /// The stable set S restricted to A.
    static ConditionalSet of(const StableSet& s, const Event& a) {
        ConditionalSet v(s.atoms(), s.points());
        for (std::size_t i : a.atoms()) v.set_fiber(i, s.fiber(i).bits());
        return v;
    }
    /// L^0(F)|A: every supported atom has fiber F (bottom if F is empty).
    static ConditionalSet uniform(const Event& a, const PointSet& f) {
        ConditionalSet v(a.size(), f.size());
        if (!f.is_empty())
            for (std::size_t i : a.atoms()) v.set_fiber(i, f.bits());
        return v;
    }

    std::size_t atoms() const { return fib_.size(); }
    std::size_t points() const { return n_; }
    const Event& support() const { return support_; }
    bool is_bottom() const { return support_.is_empty(); }
    bool is_top() const {
        for (auto f : fib_)
            if (f != low_bits(n_)) return false;
        return true;
    }
    /// Fiber at atom a; empty when a is outside the support.
    PointSet fiber(std::size_t a) const { return PointSet(n_, fib_.at(a)); }
    const FiberVector& raw_fibers() const { return fib_; }

    /// (V|A)|B = V|(A ∩ B).
    ConditionalSet restricted(const Event& b) const {
        ConditionalSet v = *this;
        for (std::size_t a = 0; a < atoms(); ++a)
            if (!b.contains(a)) v.set_fiber(a, 0);
        return v;
    }

    std::string str() const {
        if (is_bottom()) return "{*}";
        std::string s = "(";
        for (std::size_t a = 0; a < atoms(); ++a) {
            if (a) s += ", ";
            if (!support_.contains(a)) {
                s += "-";
                continue;
            }
            s += "{";
            bool first = true;
            for (std::size_t p : fiber(a).points()) {
                s += (first ? "" : ",") + std::to_string(p + 1);
                first = false;
            }
            s += "}";
        }
        return s + ")";
    }

    friend bool operator==(const ConditionalSet& x, const ConditionalSet& y) {
        return x.n_ == y.n_ && x.fib_ == y.fib_;
    }
    friend std::strong_ordering operator<=>(const ConditionalSet& x, const ConditionalSet& y) {
        if (auto c = x.n_ <=> y.n_; c != 0) return c;
        if (auto c = x.fib_.size() <=> y.fib_.size(); c != 0) return c;
        for (std::size_t a = 0; a < x.fib_.size(); ++a)
            if (auto c = x.fib_[a] <=> y.fib_[a]; c != 0) return c;
        return std::strong_ordering::equal;
    }

private:
    ConditionalSet(std::size_t atoms, std::size_t points)
        : n_(points), support_(Event::empty(atoms)), fib_(atoms, 0) {
        if (points == 0 || points > max_points) throw invalid_argument("ground space size must be 1..64");
    }
    void set_fiber(std::size_t a, Mask bits) {
        bits &= low_bits(n_);
        fib_[a] = bits;
        Mask s = support_.bits();
        s = bits ? (s | (Mask{1} << a)) : (s & ~(Mask{1} << a));
        support_ = Event(fib_.size(), s);
    }
    template <class F>
    friend ConditionalSet build_conditional_set(std::size_t atoms, std::size_t points, F&& fiber_at);

    std::size_t n_ = 1;
    Event support_;
    FiberVector fib_;
};

/// Builds a conditional set from a per-atom fiber generator (empty = unsupported).
template <class F>
ConditionalSet build_conditional_set(std::size_t atoms, std::size_t points, F&& fiber_at) {
    ConditionalSet v(atoms, points);
    for (std::size_t a = 0; a < atoms; ++a) v.set_fiber(a, std::invoke(fiber_at, a));
    return v;
}

namespace detail {
inline void check_same_shape(const ConditionalSet& v, const ConditionalSet& w) {
    if (v.atoms() != w.atoms() || v.points() != w.points())
        throw invalid_argument("conditional sets over different spaces");
}
}  // namespace detail

/// A_x: the largest event on which x lies in V.
inline Event membership(const PointFunction& x, const ConditionalSet& v) {
    if (x.atoms() != v.atoms() || x.points() != v.points()) throw invalid_argument("point function over different space");
    return largest_event(v.atoms(), [&](const Event& b) {
        for (std::size_t a : b.atoms())
            if (!v.support().contains(a) || !v.fiber(a).contains(x(a))) return false;
        return true;
    });
}

/// V|A ⊑ W|B iff A ⊆ B and V|A ⊆ W|A.
inline bool cond_inclusion(const ConditionalSet& v, const ConditionalSet& w) {
    detail::check_same_shape(v, w);
    if (!v.support().subset_of(w.support())) return false;
    for (std::size_t a : v.support().atoms())
        if (!v.fiber(a).subset_of(w.fiber(a))) return false;
    return true;
}

/// Supremum: support is the sup of the supports; at each atom the fiber is the
/// union of the fibers of the members supported there.
inline ConditionalSet cond_union(std::span<const ConditionalSet> family) {
    if (family.empty()) throw invalid_argument("empty family");
    const auto& first = family.front();
    for (const auto& v : family) detail::check_same_shape(first, v);
    return build_conditional_set(first.atoms(), first.points(), [&](std::size_t a) {
        Mask m = 0;
        for (const auto& v : family) m |= v.raw_fibers()[a];
        return m;
    });
}

/// Infimum: the support is the largest event below all supports on which the
/// fibers have a common point; the fiber there is the intersection.
inline ConditionalSet cond_intersection(std::span<const ConditionalSet> family) {
    if (family.empty()) throw invalid_argument("empty family");
    const auto& first = family.front();
    for (const auto& v : family) detail::check_same_shape(first, v);
    std::vector<Event> supports;
    for (const auto& v : family) supports.push_back(v.support());
    const Event below = inf_event(supports);
    auto common = [&](std::size_t a) {
        Mask m = low_bits(first.points());
        for (const auto& v : family) m &= v.raw_fibers()[a];
        return m;
    };
    const Event attained = largest_event(first.atoms(), [&](const Event& b) {
        for (std::size_t a : b.atoms())
            if (!below.contains(a) || common(a) == 0) return false;
        return true;
    });
    return build_conditional_set(first.atoms(), first.points(),
                                 [&](std::size_t a) { return attained.contains(a) ? common(a) : Mask{0}; });
}

inline ConditionalSet cond_union(const ConditionalSet& v, const ConditionalSet& w) {
    const ConditionalSet f[] = {v, w};
    return cond_union(f);
}
inline ConditionalSet cond_intersection(const ConditionalSet& v, const ConditionalSet& w) {
    const ConditionalSet f[] = {v, w};
    return cond_intersection(f);
}
inline ConditionalSet cond_union(const std::vector<ConditionalSet>& f) { return cond_union(std::span<const ConditionalSet>(f)); }
inline ConditionalSet cond_intersection(const std::vector<ConditionalSet>& f) {
    return cond_intersection(std::span<const ConditionalSet>(f));
}

/// (V|A)^c = Z|B* + X|A^c, where B* is the largest event inside A on which V
/// differs from X everywhere and Z collects the points missed by V there.
inline ConditionalSet cond_complement(const ConditionalSet& v) {
    const Event& a_set = v.support();
    const Event b_star = largest_event(v.atoms(), [&](const Event& b) {
        for (std::size_t a : b.atoms())
            if (!a_set.contains(a) || v.fiber(a).is_full()) return false;
        return true;
    });
    const Mask all = low_bits(v.points());
    return build_conditional_set(v.atoms(), v.points(), [&](std::size_t a) -> Mask {
        if (!a_set.contains(a)) return all;
        if (b_star.contains(a)) return all & ~v.raw_fibers()[a];
        return 0;
    });
}

inline bool disjoint(const ConditionalSet& v, const ConditionalSet& w) { return cond_intersection(v, w).is_bottom(); }

/// sum_k (V_k|B_k)|A_k = (sum_k V_k|A_k) | ∪_k (A_k ∩ B_k).
inline ConditionalSet concatenate_sets(std::span<const ConditionalSet> sets, std::span<const Event> partition) {
    if (sets.empty() || sets.size() != partition.size()) throw invalid_argument("not a partition");
    const auto& first = sets.front();
    if (!is_partition(partition, first.atoms())) throw invalid_argument("not a partition");
    for (const auto& v : sets) detail::check_same_shape(first, v);
    return build_conditional_set(first.atoms(), first.points(), [&](std::size_t a) {
        for (std::size_t k = 0; k < partition.size(); ++k)
            if (partition[k].contains(a)) return sets[k].raw_fibers()[a];
        return Mask{0};
    });
}
inline ConditionalSet concatenate_sets(const std::vector<ConditionalSet>& s, const std::vector<Event>& p) {
    return concatenate_sets(std::span<const ConditionalSet>(s), std::span<const Event>(p));
}

/// st(V): all concatenations of the given functions; fiber at a = {x(a)}.
inline StableSet stable_hull(const std::vector<PointFunction>& vectors) {
    if (vectors.empty()) throw invalid_argument("empty family");
    std::size_t atoms = vectors.front().atoms(), points = vectors.front().points();
    std::vector<PointSet> fib(atoms, PointSet::empty(points));
    for (const auto& x : vectors) {
        if (x.atoms() != atoms || x.points() != points) throw invalid_argument("point function over different space");
        for (std::size_t a = 0; a < atoms; ++a) fib[a] = fib[a] | PointSet::single(points, x(a));
    }
    return StableSet(points, std::move(fib));
}

/// Index of the pair (i, j) in E1 x E2.
inline std::size_t pair_index(std::size_t i, std::size_t j, std::size_t right_points) { return i * right_points + j; }

/// V|A x W|B = (V x W)|(A ∩ B) over E1 x E2 (pairs indexed by pair_index).
inline ConditionalSet cartesian_product(const ConditionalSet& v, const ConditionalSet& w) {
    if (v.atoms() != w.atoms()) throw invalid_argument("conditional sets over different algebras");
    const std::size_t m1 = v.points(), m2 = w.points();
    if (m1 * m2 > max_points) throw invalid_argument("product ground space too large");
    const Event s = v.support() & w.support();
    return build_conditional_set(v.atoms(), m1 * m2, [&](std::size_t a) {
        Mask m = 0;
        if (!s.contains(a)) return m;
        for (std::size_t i : v.fiber(a).points())
            for (std::size_t j : w.fiber(a).points()) m |= Mask{1} << pair_index(i, j, m2);
        return m;
    });
}

/// Every conditional set over (atoms, points), in lexicographic fiber order.
inline std::vector<ConditionalSet> all_conditional_sets(std::size_t atoms, std::size_t points) {
    if (atoms * points > 22) throw invalid_argument("enumeration too large");
    std::vector<ConditionalSet> out;
    const Mask per = low_bits(points);
    const std::size_t total = std::size_t{1} << (atoms * points);
    out.reserve(total);
    for (std::size_t code = 0; code < total; ++code)
        out.push_back(build_conditional_set(atoms, points, [&](std::size_t a) {
            return (Mask(code) >> (a * points)) & per;
        }));
    return out;
}

}  // namespace cms

template <>
struct std::hash<cms::ConditionalSet> {
    std::size_t operator()(const cms::ConditionalSet& v) const noexcept {
        std::size_t h = v.points();
        for (auto f : v.raw_fibers()) h = h * 0x9E3779B97F4A7C15ULL + std::hash<cms::Mask>{}(f) + (h >> 29);
        return h;
    }
};
