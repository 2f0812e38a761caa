#pragma once

// Stably measurable functions X -> L^0 over the finite model, stable indicator
// and elementary functions, the dyadic approximation and the stable Lebesgue
// integral.

#include "cms/stable_measure.hpp"

#include <set>

namespace cms {

/// f: X -> L^0 with f(x)(a) = g_a(x(a)); one value table per atom.
class Integrand {
public:
    Integrand() = default;
    Integrand(std::size_t points, std::vector<std::vector<Rational>> values) : n_(points), g_(std::move(values)) {
        if (g_.empty()) throw invalid_argument("integrand needs at least one atom");
        for (const auto& row : g_)
            if (row.size() != n_) throw invalid_argument("one value per point required");
    }
    static Integrand constant(std::size_t atoms, std::size_t points, const Rational& c) {
        return Integrand(points, std::vector<std::vector<Rational>>(atoms, std::vector<Rational>(points, c)));
    }
    /// The same point map at every atom.
    static Integrand lifted(std::size_t atoms, const std::vector<Rational>& f) {
        return Integrand(f.size(), std::vector<std::vector<Rational>>(atoms, f));
    }

    std::size_t atoms() const { return g_.size(); }
    std::size_t points() const { return n_; }
    const Rational& at(std::size_t a, std::size_t p) const { return g_.at(a).at(p); }
    const std::vector<Rational>& row(std::size_t a) const { return g_.at(a); }
    const std::vector<std::vector<Rational>>& table() const { return g_; }

    ScalarField operator()(const PointFunction& x) const {
        if (x.atoms() != atoms() || x.points() != n_) throw invalid_argument("point function over wrong space");
        std::vector<Rational> v;
        for (std::size_t a = 0; a < atoms(); ++a) v.push_back(g_[a][x(a)]);
        return ScalarField(std::move(v));
    }

    template <class F>
    Integrand map(F&& f) const {
        Integrand out = *this;
        for (auto& row : out.g_)
            for (auto& v : row) v = f(v);
        return out;
    }
    template <class F>
    static Integrand zip(const Integrand& x, const Integrand& y, F&& f) {
        if (x.atoms() != y.atoms() || x.points() != y.points()) throw invalid_argument("integrands over different spaces");
        Integrand out = x;
        for (std::size_t a = 0; a < x.atoms(); ++a)
            for (std::size_t p = 0; p < x.points(); ++p) out.g_[a][p] = f(x.g_[a][p], y.g_[a][p]);
        return out;
    }

    friend Integrand operator+(const Integrand& x, const Integrand& y) {
        return zip(x, y, [](const Rational& a, const Rational& b) { return a + b; });
    }
    friend Integrand operator-(const Integrand& x, const Integrand& y) {
        return zip(x, y, [](const Rational& a, const Rational& b) { return a - b; });
    }
    friend Integrand operator*(const Integrand& x, const Integrand& y) {
        return zip(x, y, [](const Rational& a, const Rational& b) { return a * b; });
    }
    /// r * f with r in L^0 acting atomwise.
    friend Integrand operator*(const ScalarField& r, const Integrand& f) {
        if (r.size() != f.atoms()) throw invalid_argument("field size mismatch");
        Integrand out = f;
        for (std::size_t a = 0; a < f.atoms(); ++a)
            for (auto& v : out.g_[a]) v = r[a] * v;
        return out;
    }

    Integrand positive_part() const { return map([](const Rational& v) { return v.sign() > 0 ? v : Rational(0); }); }
    Integrand negative_part() const { return map([](const Rational& v) { return v.sign() < 0 ? -v : Rational(0); }); }
    bool is_nonnegative() const {
        for (const auto& row : g_)
            for (const auto& v : row)
                if (v.sign() < 0) return false;
        return true;
    }

    /// f <= g at every atom and point.
    friend bool operator<=(const Integrand& x, const Integrand& y) {
        if (x.atoms() != y.atoms() || x.points() != y.points()) throw invalid_argument("integrands over different spaces");
        for (std::size_t a = 0; a < x.atoms(); ++a)
            for (std::size_t p = 0; p < x.points(); ++p)
                if (y.g_[a][p] < x.g_[a][p]) return false;
        return true;
    }
    friend bool operator==(const Integrand&, const Integrand&) = default;

private:
    std::size_t n_ = 0;
    std::vector<std::vector<Rational>> g_;
};

inline Integrand max(const Integrand& x, const Integrand& y) {
    return Integrand::zip(x, y, [](const Rational& a, const Rational& b) { return a < b ? b : a; });
}
inline Integrand min(const Integrand& x, const Integrand& y) {
    return Integrand::zip(x, y, [](const Rational& a, const Rational& b) { return a < b ? a : b; });
}

/// The integrand equal to fs[k] on partition[k].
inline Integrand concatenate_integrands(const std::vector<Integrand>& fs, const std::vector<Event>& partition) {
    if (fs.empty() || fs.size() != partition.size() || !is_partition(partition, fs.front().atoms()))
        throw invalid_argument("not a partition");
    std::vector<std::vector<Rational>> t(fs.front().atoms());
    for (std::size_t k = 0; k < fs.size(); ++k)
        for (std::size_t a : partition[k].atoms()) t[a] = fs[k].row(a);
    return Integrand(fs.front().points(), std::move(t));
}

/// Stable indicator 1_{V|A}: 1 on the fibers of the support, 0 elsewhere.
inline Integrand indicator(const ConditionalSet& v) {
    std::vector<std::vector<Rational>> t(v.atoms(), std::vector<Rational>(v.points(), Rational(0)));
    for (std::size_t a : v.support().atoms())
        for (std::size_t p : v.fiber(a).points()) t[a][p] = 1;
    return Integrand(v.points(), std::move(t));
}

/// Every per-atom value table is constant on the blocks of that atom's ring.
inline bool is_measurable(const Integrand& f, const FiberwiseFamily& domain) {
    if (f.atoms() != domain.atoms() || f.points() != domain.points()) return false;
    for (std::size_t a = 0; a < f.atoms(); ++a)
        for (const auto& b : domain.ring(a).blocks()) {
            const auto ps = b.points();
            for (std::size_t p : ps)
                if (f.at(a, p) != f.at(a, ps.front())) return false;
        }
    return true;
}

/// {x : f(x) in [lo, hi)} as a conditional set (hi absent = unbounded).
inline ConditionalSet level_set(const Integrand& f, const Rational& lo, const std::optional<Rational>& hi) {
    return build_conditional_set(f.atoms(), f.points(), [&](std::size_t a) {
        Mask m = 0;
        for (std::size_t p = 0; p < f.points(); ++p) {
            const auto& v = f.at(a, p);
            if (lo <= v && (!hi || v < *hi)) m |= Mask{1} << p;
        }
        return m;
    });
}

/// sum_k r_k 1_{V_k|A_k} with nonnegative coefficient fields and pairwise
/// disjoint cells whose union is X.
class ElementaryFunction {
public:
    struct Term {
        ScalarField coefficient;
        ConditionalSet cell;
    };

    explicit ElementaryFunction(std::vector<Term> terms) : t_(std::move(terms)) {
        if (t_.empty()) throw invalid_argument("elementary function needs at least one cell");
        std::vector<ConditionalSet> cells;
        for (const auto& t : t_) {
            if (t.coefficient.size() != t.cell.atoms()) throw invalid_argument("coefficient over wrong algebra");
            for (const auto& r : t.coefficient)
                if (r.sign() < 0) throw invalid_argument("coefficients must be nonnegative");
            cells.push_back(t.cell);
        }
        for (std::size_t i = 0; i < cells.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (!disjoint(cells[i], cells[j])) throw invalid_argument("cells must be pairwise disjoint");
        if (!cond_union(cells).is_top()) throw invalid_argument("cells must cover X");
    }

    const std::vector<Term>& terms() const { return t_; }
    std::size_t atoms() const { return t_.front().cell.atoms(); }
    std::size_t points() const { return t_.front().cell.points(); }

    Integrand as_integrand() const {
        std::vector<std::vector<Rational>> g(atoms(), std::vector<Rational>(points(), Rational(0)));
        for (const auto& t : t_)
            for (std::size_t a : t.cell.support().atoms())
                for (std::size_t p : t.cell.fiber(a).points()) g[a][p] = t.coefficient[a];
        return Integrand(points(), std::move(g));
    }

private:
    std::vector<Term> t_;
};

/// sum_k r_k mu(V_k|A_k), with 0 * inf = 0.
inline ExtScalarField elementary_integral(const ElementaryFunction& phi, const StableMeasure& mu) {
    ExtScalarField out(mu.atoms(), ExtRational(0));
    for (const auto& t : phi.terms()) out = out + extend(t.coefficient) * eval(mu, t.cell);
    return out;
}

/// f_n = sum_k k 2^-n 1{k 2^-n <= f < (k+1) 2^-n} + n 1{f >= n}, over
/// k < n 2^n. Only cells with nonempty support are materialized.
inline ElementaryFunction dyadic_approximation(const Integrand& f, unsigned n) {
    if (!f.is_nonnegative()) throw invalid_argument("dyadic approximation needs a nonnegative integrand");
    const Rational step = pow2(-static_cast<int>(n));
    const Rational cap(static_cast<std::int64_t>(n));
    // Occupied levels: k = floor(v 2^n) for v < n, and the top level for v >= n.
    std::set<Rational::integer_type> levels;
    bool top = false;
    for (const auto& row : f.table())
        for (const auto& v : row) {
            if (cap <= v) top = true;
            else levels.insert((v / step).floor());
        }
    std::vector<ElementaryFunction::Term> terms;
    for (const auto& k : levels) {
        const Rational lo = Rational(Rational::value_type(k)) * step;
        const Rational hi = lo + step;
        terms.push_back({ScalarField(f.atoms(), lo), level_set(f, lo, hi)});
    }
    if (top) terms.push_back({ScalarField(f.atoms(), cap), level_set(f, cap, std::nullopt)});
    return ElementaryFunction(std::move(terms));
}

/// Least n with n > max f and 2^-n below every gap between distinct values:
/// from there on the cells of f_n are exactly the level sets of f.
inline unsigned stabilization_level(const Integrand& f) {
    std::set<Rational> vals;
    for (const auto& row : f.table()) vals.insert(row.begin(), row.end());
    Rational gap = 1;
    for (auto it = vals.begin(); std::next(it) != vals.end() && it != vals.end(); ++it) {
        const Rational d = *std::next(it) - *it;
        if (d < gap) gap = d;
    }
    unsigned n = 1;
    while (!(*vals.rbegin() < Rational(static_cast<std::int64_t>(n))) || gap < pow2(-static_cast<int>(n))) ++n;
    return n;
}

/// Integral of the n-th dyadic approximation.
inline ExtScalarField dyadic_integral(const Integrand& f, const StableMeasure& mu, unsigned n) {
    return elementary_integral(dyadic_approximation(f, n), mu);
}

/// sup_n of the dyadic integrals of a nonnegative integrand. Past the
/// stabilization level the cells no longer change and each cell coefficient
/// floor(2^n v)/2^n increases to v, so the supremum is the elementary
/// integral with every coefficient replaced by its limit v.
inline ExtScalarField integrate_nonnegative(const Integrand& f, const StableMeasure& mu) {
    const ElementaryFunction phi = dyadic_approximation(f, stabilization_level(f));
    std::vector<ElementaryFunction::Term> limit;
    for (const auto& t : phi.terms()) {
        std::vector<Rational> sup(f.atoms(), Rational(0));
        for (std::size_t a : t.cell.support().atoms()) sup[a] = f.at(a, t.cell.fiber(a).points().front());
        limit.push_back({ScalarField(std::move(sup)), t.cell});
    }
    return elementary_integral(ElementaryFunction(std::move(limit)), mu);
}

/// Stable Lebesgue integral int f dmu = int f+ dmu - int f- dmu. A
/// nonnegative integrand may integrate to +inf; a signed one must have both
/// parts finite at every atom.
inline ExtScalarField integrate(const Integrand& f, const StableMeasure& mu) {
    if (f.atoms() != mu.atoms() || f.points() != mu.points()) throw invalid_argument("integrand over wrong space");
    if (!mu.is_measure()) throw invalid_argument("integration needs a measure on a stable sigma-algebra");
    if (!is_measurable(f, mu.ring_domain())) throw invalid_argument("integrand is not measurable");
    const Integrand neg = f.negative_part();
    const ExtScalarField ip = integrate_nonnegative(f.positive_part(), mu);
    if (neg == Integrand::constant(f.atoms(), f.points(), 0)) return ip;
    const ExtScalarField in = integrate_nonnegative(neg, mu);
    if (!is_finite(ip) || !is_finite(in)) throw invalid_argument("not integrable");
    return ip - in;
}

/// Finite-valued integral; throws if any atom is infinite.
inline ScalarField integrate_finite(const Integrand& f, const StableMeasure& mu) {
    const auto r = integrate(f, mu);
    if (!is_finite(r)) throw invalid_argument("not integrable");
    return finite_part(r);
}

}  // namespace cms
