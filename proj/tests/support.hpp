#pragma once

// Small builders for readable fixtures. Points and atoms are written 1-based
// here, as in the printed form of conditional sets.

#include "cms/verify.hpp"

#include <gtest/gtest.h>

#include <ostream>

namespace cms {

// Readable gtest failure messages for value fields.
template <class T>
std::ostream& operator<<(std::ostream& os, const BasicField<T>& x) {
    return os << to_string(x);
}

}  // namespace cms

namespace fx {

using namespace cms;

inline Rational Q(const char* s) { return Rational::parse(s); }
inline ExtRational X(const char* s) { return ExtRational::parse(s); }

inline PointSet P(std::size_t n, std::initializer_list<std::size_t> pts) {
    Mask m = 0;
    for (auto p : pts) m |= Mask{1} << (p - 1);
    return PointSet(n, m);
}

inline Event E(std::size_t atoms, std::initializer_list<std::size_t> as) {
    Mask m = 0;
    for (auto a : as) m |= Mask{1} << (a - 1);
    return Event(atoms, m);
}

/// One fiber per atom; an empty list leaves the atom outside the support.
inline ConditionalSet C(std::size_t n, std::vector<std::vector<std::size_t>> fibers) {
    std::vector<PointSet> f;
    for (const auto& pts : fibers) {
        Mask m = 0;
        for (auto p : pts) m |= Mask{1} << (p - 1);
        f.emplace_back(n, m);
    }
    return ConditionalSet::from_fibers(n, f);
}

inline ScalarField F(std::initializer_list<const char*> vs) {
    std::vector<Rational> v;
    for (auto s : vs) v.push_back(Q(s));
    return ScalarField(std::move(v));
}

inline ExtScalarField XF(std::initializer_list<const char*> vs) {
    std::vector<ExtRational> v;
    for (auto s : vs) v.push_back(X(s));
    return ExtScalarField(std::move(v));
}

/// Point masses per atom on the discrete stable sigma-algebra.
inline StableMeasure discrete_measure(std::vector<std::vector<const char*>> rows) {
    std::vector<std::vector<ExtRational>> m;
    for (const auto& r : rows) {
        m.emplace_back();
        for (auto s : r) m.back().push_back(X(s));
    }
    return StableMeasure::from_point_masses(StableSigmaAlgebra::discrete(m.size(), m.front().size()), m);
}

inline Integrand I(std::vector<std::vector<const char*>> rows) {
    std::vector<std::vector<Rational>> t;
    for (const auto& r : rows) {
        t.emplace_back();
        for (auto s : r) t.back().push_back(Q(s));
    }
    const std::size_t n = t.front().size();
    return Integrand(n, std::move(t));
}

inline verify::Rng rng(std::uint64_t salt) { return verify::Rng(verify::mix(0x5EED, salt)); }

}  // namespace fx
