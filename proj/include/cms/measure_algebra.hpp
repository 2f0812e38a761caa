#pragma once

// The ambient finite measure algebra: atoms with positive weights, events
// (sets of atoms), atom-indexed scalar fields and the exhaustion operation
// that produces the largest event on which a local property holds.

#include "cms/rational.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cms {

/// Violated precondition of a public operation (bad partition, mismatched sizes, ...).
class invalid_argument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using Mask = std::uint64_t;
inline constexpr std::size_t max_atoms = 64;

inline Mask low_bits(std::size_t n) { return n >= 64 ? ~Mask{0} : ((Mask{1} << n) - 1); }

/// A set of atoms of an algebra with `size()` atoms.
class Event {
public:
    Event() = default;
    Event(std::size_t atoms, Mask bits) : n_(atoms), bits_(bits & low_bits(atoms)) {
        if (atoms > max_atoms) throw invalid_argument("too many atoms (max 64)");
    }
    static Event empty(std::size_t atoms) { return Event(atoms, 0); }
    static Event full(std::size_t atoms) { return Event(atoms, low_bits(atoms)); }
    static Event atom(std::size_t atoms, std::size_t a) { return Event(atoms, Mask{1} << a); }

    std::size_t size() const { return n_; }
    Mask bits() const { return bits_; }
    bool contains(std::size_t a) const { return (bits_ >> a) & 1U; }
    bool is_empty() const { return bits_ == 0; }
    bool is_full() const { return bits_ == low_bits(n_); }
    std::size_t count() const { return static_cast<std::size_t>(std::popcount(bits_)); }
    bool subset_of(const Event& o) const { return (bits_ & ~o.bits_) == 0; }

    Event complement() const { return Event(n_, ~bits_); }
    friend Event operator|(Event a, const Event& b) { return Event(a.n_, a.bits_ | b.bits_); }
    friend Event operator&(Event a, const Event& b) { return Event(a.n_, a.bits_ & b.bits_); }
    friend Event operator-(Event a, const Event& b) { return Event(a.n_, a.bits_ & ~b.bits_); }

    /// Atom indices in increasing order.
    std::vector<std::size_t> atoms() const {
        std::vector<std::size_t> out;
        for (std::size_t a = 0; a < n_; ++a)
            if (contains(a)) out.push_back(a);
        return out;
    }

    friend bool operator==(const Event&, const Event&) = default;
    friend auto operator<=>(const Event&, const Event&) = default;

private:
    std::size_t n_ = 0;
    Mask bits_ = 0;
};

/// Finite atoms with strictly positive weights summing to exactly one.
class MeasureAlgebra {
public:
    MeasureAlgebra(std::vector<std::string> ids, std::vector<Rational> weights)
        : ids_(std::move(ids)), weights_(std::move(weights)) {
        if (ids_.empty()) throw invalid_argument("measure algebra needs at least one atom");
        if (ids_.size() != weights_.size()) throw invalid_argument("atom/weight count mismatch");
        if (ids_.size() > max_atoms) throw invalid_argument("too many atoms (max 64)");
        Rational total = 0;
        for (std::size_t i = 0; i < ids_.size(); ++i) {
            if (weights_[i].sign() <= 0) throw invalid_argument("atom weights must be positive");
            for (std::size_t j = 0; j < i; ++j)
                if (ids_[i] == ids_[j]) throw invalid_argument("duplicate atom id '" + ids_[i] + "'");
            total += weights_[i];
        }
        if (total != Rational(1)) throw invalid_argument("weights must sum to 1");
    }

    /// n atoms "a1".."an" with equal weights.
    static MeasureAlgebra uniform(std::size_t n) {
        std::vector<std::string> ids;
        std::vector<Rational> w;
        for (std::size_t i = 0; i < n; ++i) {
            ids.push_back("a" + std::to_string(i + 1));
            w.emplace_back(1, static_cast<std::int64_t>(n));
        }
        return MeasureAlgebra(std::move(ids), std::move(w));
    }

    std::size_t size() const { return ids_.size(); }
    const std::string& id(std::size_t a) const { return ids_.at(a); }
    const std::vector<std::string>& ids() const { return ids_; }
    const Rational& weight(std::size_t a) const { return weights_.at(a); }
    const std::vector<Rational>& weights() const { return weights_; }

    std::size_t index_of(const std::string& id) const {
        auto it = std::find(ids_.begin(), ids_.end(), id);
        if (it == ids_.end()) throw invalid_argument("unknown atom '" + id + "'");
        return static_cast<std::size_t>(it - ids_.begin());
    }

    Rational probability(const Event& e) const {
        Rational p = 0;
        for (std::size_t a : e.atoms()) p += weights_[a];
        return p;
    }

    Event omega() const { return Event::full(size()); }

    friend bool operator==(const MeasureAlgebra&, const MeasureAlgebra&) = default;

private:
    std::vector<std::string> ids_;
    std::vector<Rational> weights_;
};

/// Atom-indexed field of values; ScalarField = L^0 (rationals), ExtScalarField = extended values.
template <class T>
class BasicField {
public:
    BasicField() = default;
    explicit BasicField(std::vector<T> v) : v_(std::move(v)) {}
    BasicField(std::size_t atoms, const T& fill) : v_(atoms, fill) {}

    std::size_t size() const { return v_.size(); }
    const T& operator[](std::size_t a) const { return v_[a]; }
    T& operator[](std::size_t a) { return v_[a]; }
    const std::vector<T>& values() const { return v_; }
    auto begin() const { return v_.begin(); }
    auto end() const { return v_.end(); }

    friend bool operator==(const BasicField&, const BasicField&) = default;

    friend BasicField operator+(const BasicField& x, const BasicField& y) {
        return zip(x, y, [](const T& a, const T& b) { return a + b; });
    }
    friend BasicField operator-(const BasicField& x, const BasicField& y) {
        return zip(x, y, [](const T& a, const T& b) { return a - b; });
    }
    friend BasicField operator*(const BasicField& x, const BasicField& y) {
        return zip(x, y, [](const T& a, const T& b) { return a * b; });
    }

    /// x <= y on every atom.
    friend bool operator<=(const BasicField& x, const BasicField& y) {
        check(x, y);
        for (std::size_t a = 0; a < x.size(); ++a)
            if (y[a] < x[a]) return false;
        return true;
    }

    /// Event {x <= y}.
    friend Event le_event(const BasicField& x, const BasicField& y) {
        check(x, y);
        Mask m = 0;
        for (std::size_t a = 0; a < x.size(); ++a)
            if (!(y[a] < x[a])) m |= Mask{1} << a;
        return Event(x.size(), m);
    }

    /// Keeps values on `e`, zero elsewhere.
    BasicField restricted(const Event& e) const {
        BasicField out = *this;
        for (std::size_t a = 0; a < size(); ++a)
            if (!e.contains(a)) out.v_[a] = T(0);
        return out;
    }

    template <class F>
    static BasicField zip(const BasicField& x, const BasicField& y, F f) {
        check(x, y);
        std::vector<T> out;
        out.reserve(x.size());
        for (std::size_t a = 0; a < x.size(); ++a) out.push_back(f(x[a], y[a]));
        return BasicField(std::move(out));
    }

private:
    static void check(const BasicField& x, const BasicField& y) {
        if (x.size() != y.size()) throw invalid_argument("field size mismatch");
    }
    std::vector<T> v_;
};

using ScalarField = BasicField<Rational>;
using ExtScalarField = BasicField<ExtRational>;

inline ExtScalarField extend(const ScalarField& x) {
    std::vector<ExtRational> v(x.begin(), x.end());
    return ExtScalarField(std::move(v));
}

inline bool is_finite(const ExtScalarField& x) {
    return std::all_of(x.begin(), x.end(), [](const ExtRational& e) { return e.is_finite(); });
}

/// Finite part; throws if any entry is infinite.
inline ScalarField finite_part(const ExtScalarField& x) {
    std::vector<Rational> v;
    for (const auto& e : x) v.push_back(e.value());
    return ScalarField(std::move(v));
}

/// Indicator field of an event.
inline ScalarField indicator_field(const Event& e) {
    std::vector<Rational> v;
    for (std::size_t a = 0; a < e.size(); ++a) v.emplace_back(e.contains(a) ? 1 : 0);
    return ScalarField(std::move(v));
}

/// Least event containing every member.
inline Event sup_event(std::span<const Event> family) {
    if (family.empty()) throw invalid_argument("empty family");
    Event out = Event::empty(family.front().size());
    for (const auto& e : family) out = out | e;
    return out;
}

/// Greatest event contained in every member.
inline Event inf_event(std::span<const Event> family) {
    if (family.empty()) throw invalid_argument("empty family");
    Event out = Event::full(family.front().size());
    for (const auto& e : family) out = out & e;
    return out;
}

/// Largest event satisfying a predicate that holds on the empty event and is
/// closed under subsets and unions. Over finitely many atoms such a predicate
/// is atom-local, so the maximum is the union of the satisfying singletons.
template <class Pred>
Event largest_event(std::size_t atoms, Pred&& pred) {
    Mask m = 0;
    for (std::size_t a = 0; a < atoms; ++a)
        if (std::invoke(pred, Event::atom(atoms, a))) m |= Mask{1} << a;
    return Event(atoms, m);
}

/// Checks that `parts` is a partition of the atoms (pairwise disjoint, covering).
inline bool is_partition(std::span<const Event> parts, std::size_t atoms) {
    Mask seen = 0;
    for (const auto& p : parts) {
        if (p.size() != atoms || (seen & p.bits())) return false;
        seen |= p.bits();
    }
    return seen == low_bits(atoms);
}

/// The field equal to fields[k] on partition[k].
template <class T>
BasicField<T> concatenate_field(std::span<const BasicField<T>> fields, std::span<const Event> partition) {
    if (fields.size() != partition.size() || fields.empty())
        throw invalid_argument("not a partition");
    std::size_t n = fields.front().size();
    if (!is_partition(partition, n)) throw invalid_argument("not a partition");
    std::vector<T> out(n);
    for (std::size_t k = 0; k < fields.size(); ++k) {
        if (fields[k].size() != n) throw invalid_argument("field size mismatch");
        for (std::size_t a : partition[k].atoms()) out[a] = fields[k][a];
    }
    return BasicField<T>(std::move(out));
}

template <class T>
BasicField<T> concatenate_field(const std::vector<BasicField<T>>& fields, const std::vector<Event>& partition) {
    return concatenate_field(std::span<const BasicField<T>>(fields), std::span<const Event>(partition));
}

/// All 2^n events over n atoms, in increasing bit order.
inline std::vector<Event> all_events(std::size_t atoms) {
    if (atoms > 20) throw invalid_argument("event enumeration limited to 20 atoms");
    std::vector<Event> out;
    for (Mask m = 0; m <= low_bits(atoms); ++m) out.emplace_back(atoms, m);
    return out;
}

inline std::string to_string(const ScalarField& x) {
    std::string s = "(";
    for (std::size_t a = 0; a < x.size(); ++a) s += (a ? ", " : "") + x[a].str();
    return s + ")";
}

inline std::string to_string(const ExtScalarField& x) {
    std::string s = "(";
    for (std::size_t a = 0; a < x.size(); ++a) s += (a ? ", " : "") + x[a].str();
    return s + ")";
}

}  // namespace cms
