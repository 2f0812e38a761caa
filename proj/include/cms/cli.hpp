#pragma once

// Scenario files, query execution with oracle cross-checks, report
// rendering and the command-line front end.

#include "cms/verify.hpp"

#include <json.hpp>

#include <iomanip>

namespace cms::cli {

using Json = nlohmann::ordered_json;

class error : public std::runtime_error {
public:
    enum class Kind { usage, syntax, validation, reference, verification };
    error(Kind k, const std::string& msg) : std::runtime_error(msg), kind_(k) {}
    Kind kind() const { return kind_; }
    int exit_code() const {
        switch (kind_) {
            case Kind::usage: return 1;
            case Kind::verification: return 3;
            default: return 2;
        }
    }

private:
    Kind kind_;
};

inline error syntax(const std::string& m) { return error(error::Kind::syntax, "syntax error " + m); }
inline error invalid(const std::string& m) { return error(error::Kind::validation, "validation error: " + m); }
inline error unknown(const std::string& what, const std::string& id) {
    return error(error::Kind::reference, "unknown reference: " + what + " '" + id + "'");
}

struct Scenario {
    MeasureAlgebra algebra;
    GroundSpace ground;
    std::vector<SetRing> fields;  ///< per atom; discrete unless given
    std::vector<std::pair<std::string, std::vector<std::vector<ExtRational>>>> measures;  ///< point masses [atom][point]
    std::optional<RandomVariable> rv;
    std::optional<SubAlgebra> subalgebra;
    std::vector<Json> queries;

    StableSigmaAlgebra domain() const { return StableSigmaAlgebra(ground.size(), fields); }
    const std::vector<std::vector<ExtRational>>& masses(const std::string& name) const {
        for (const auto& [n, m] : measures)
            if (n == name) return m;
        throw unknown("measure", name);
    }
    StableMeasure measure(const std::string& name) const { return StableMeasure::from_point_masses(domain(), masses(name)); }

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

// ------------------------------------------------------------------ parsing

namespace detail {

/// Identifier lists with lookup, for atoms, points and product pairs.
struct Names {
    std::vector<std::string> ids;
    std::string what;
    std::size_t index(const std::string& id) const {
        for (std::size_t i = 0; i < ids.size(); ++i)
            if (ids[i] == id) return i;
        throw unknown(what, id);
    }
};

inline Names atom_names(const MeasureAlgebra& p) {
    Names n{{}, "atom"};
    for (std::size_t a = 0; a < p.size(); ++a) n.ids.push_back(p.id(a));
    return n;
}
inline Names point_names(const GroundSpace& g) { return {g.ids(), "point"}; }
inline Names pair_names(const GroundSpace& g) {
    Names n{{}, "pair"};
    for (const auto& x : g.ids())
        for (const auto& y : g.ids()) n.ids.push_back("(" + x + "," + y + ")");
    return n;
}

class Reader {
public:
    explicit Reader(std::string_view text) : text_(text) {}

    /// 1-based line and column of the first occurrence of `token` as a
    /// JSON string, or of byte offset `pos`.
    std::string where_token(const std::string& token) const {
        const auto pos = text_.find("\"" + token + "\"");
        return pos == std::string_view::npos ? std::string("in input") : where(pos + 1);
    }
    std::string where(std::size_t pos) const {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < pos && i < text_.size(); ++i) {
            if (text_[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        return "at line " + std::to_string(line) + ", column " + std::to_string(col);
    }

    ExtRational ext(const Json& j) const {
        if (!j.is_string()) throw syntax(where_token(j.dump()) + ": rationals must be strings like \"p/q\" or \"inf\"");
        const auto s = j.get<std::string>();
        try {
            return ExtRational::parse(s);
        } catch (const std::exception& e) {
            throw syntax(where_token(s) + ": " + e.what());
        }
    }
    Rational rat(const Json& j) const {
        const auto x = ext(j);
        if (x.is_infinite()) throw invalid("'inf' is not allowed here");
        return x.value();
    }

private:
    std::string_view text_;
};

inline const Json& require(const Json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) throw invalid(where + " needs key \"" + key + "\"");
    return obj.at(key);
}
inline std::string str_of(const Json& j, const std::string& where) {
    if (!j.is_string()) throw invalid(where + " must be a string");
    return j.get<std::string>();
}
inline const Json& object_of(const Json& j, const std::string& where) {
    if (!j.is_object()) throw invalid(where + " must be an object");
    return j;
}
inline const Json& array_of(const Json& j, const std::string& where) {
    if (!j.is_array()) throw invalid(where + " must be an array");
    return j;
}

inline PointSet parse_points(const Json& j, const Names& pts, const std::string& where) {
    Mask m = 0;
    for (const auto& p : array_of(j, where)) {
        const auto bit = Mask{1} << pts.index(str_of(p, where));
        if (m & bit) throw invalid(where + " lists a point twice");
        m |= bit;
    }
    return PointSet(pts.ids.size(), m);
}

}  // namespace detail

inline Scenario parse_scenario(std::string_view text) {
    using namespace detail;
    Json doc;
    try {
        doc = Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        const Reader r(text);
        std::string msg = e.what();
        if (auto k = msg.find("syntax error while parsing"); k != std::string::npos) msg = msg.substr(k + 13);
        throw syntax(r.where(e.byte > 0 ? e.byte - 1 : 0) + ": " + msg);
    }
    const Reader r(text);
    if (!doc.is_object()) throw invalid("scenario must be a JSON object");
    for (const auto& [k, _] : doc.items())
        if (k != "atoms" && k != "ground" && k != "fields" && k != "measures" && k != "rv" && k != "subalgebra" && k != "queries")
            throw invalid("unexpected top-level key \"" + k + "\"");

    std::vector<std::string> ids;
    std::vector<Rational> w;
    for (const auto& a : array_of(require(doc, "atoms", "scenario"), "\"atoms\"")) {
        ids.push_back(str_of(require(a, "id", "atom"), "atom id"));
        w.push_back(r.rat(require(a, "prob", "atom '" + ids.back() + "'")));
    }
    std::optional<MeasureAlgebra> alg;
    try {
        alg.emplace(ids, w);
    } catch (const invalid_argument& e) {
        throw invalid(e.what());
    }
    const Names atoms = atom_names(*alg);

    const Json& g = require(doc, "ground", "scenario");
    std::vector<std::string> pids;
    for (const auto& p : array_of(require(g, "points", "\"ground\""), "\"ground.points\"")) pids.push_back(str_of(p, "point id"));
    std::optional<std::vector<Rational>> coords;
    if (g.contains("coords")) {
        const Json& c = object_of(g.at("coords"), "\"ground.coords\"");
        coords.emplace(pids.size());
        std::vector<bool> seen(pids.size(), false);
        const Names tmp{pids, "point"};
        for (const auto& [p, v] : c.items()) {
            const auto i = tmp.index(p);
            (*coords)[i] = r.rat(v);
            seen[i] = true;
        }
        for (std::size_t i = 0; i < pids.size(); ++i)
            if (!seen[i]) throw invalid("point '" + pids[i] + "' has no coordinate");
    }
    std::optional<GroundSpace> ground;
    try {
        ground.emplace(pids, coords);
    } catch (const invalid_argument& e) {
        throw invalid(e.what());
    }
    const Names pts = point_names(*ground);
    const std::size_t n = alg->size(), m = ground->size();

    std::vector<SetRing> fields(n, SetRing::discrete(m));
    if (doc.contains("fields")) {
        for (const auto& [a, sets] : object_of(doc.at("fields"), "\"fields\"").items()) {
            std::vector<PointSet> gen;
            for (const auto& s : array_of(sets, "field of atom '" + a + "'")) gen.push_back(parse_points(s, pts, "field of atom '" + a + "'"));
            fields[atoms.index(a)] = SetRing::generated_field(m, gen);
        }
    }

    std::vector<std::pair<std::string, std::vector<std::vector<ExtRational>>>> measures;
    if (doc.contains("measures")) {
        for (const auto& [name, per] : object_of(doc.at("measures"), "\"measures\"").items()) {
            std::vector<std::vector<ExtRational>> t(n, std::vector<ExtRational>(m, ExtRational(0)));
            for (const auto& [a, row] : object_of(per, "measure '" + name + "'").items()) {
                const auto ai = atoms.index(a);
                for (const auto& [p, v] : object_of(row, "measure '" + name + "' at atom '" + a + "'").items()) {
                    t[ai][pts.index(p)] = r.ext(v);
                    if (!t[ai][pts.index(p)].is_nonnegative()) throw invalid("measure '" + name + "' has a negative mass");
                }
            }
            measures.emplace_back(name, std::move(t));
        }
    }

    std::optional<RandomVariable> rv;
    if (doc.contains("rv")) {
        std::vector<std::optional<std::size_t>> vals(n);
        for (const auto& [a, p] : object_of(doc.at("rv"), "\"rv\"").items()) vals[atoms.index(a)] = pts.index(str_of(p, "rv value"));
        std::vector<std::size_t> v;
        for (std::size_t a = 0; a < n; ++a) {
            if (!vals[a]) throw invalid("rv has no value at atom '" + alg->id(a) + "'");
            v.push_back(*vals[a]);
        }
        rv.emplace(m, std::move(v));
    }
    std::optional<SubAlgebra> sub;
    if (doc.contains("subalgebra")) {
        std::vector<Event> blocks;
        for (const auto& b : array_of(doc.at("subalgebra"), "\"subalgebra\"")) {
            Mask e = 0;
            for (const auto& a : array_of(b, "subalgebra block")) e |= Mask{1} << atoms.index(str_of(a, "atom id"));
            blocks.emplace_back(n, e);
        }
        try {
            sub.emplace(n, blocks);
        } catch (const invalid_argument& e) {
            throw invalid(e.what());
        }
    }
    std::vector<Json> queries;
    if (doc.contains("queries"))
        for (const auto& q : array_of(doc.at("queries"), "\"queries\"")) {
            str_of(require(q, "op", "query"), "query op");
            queries.push_back(q);
        }
    return Scenario{*alg, *ground, std::move(fields), std::move(measures), std::move(rv), std::move(sub), std::move(queries)};
}

// ----------------------------------------------------------------- printing

namespace detail {

inline Json points_json(const PointSet& s, const Names& pts) {
    Json a = Json::array();
    for (std::size_t p : s.points()) a.push_back(pts.ids[p]);
    return a;
}

inline Json set_json(const ConditionalSet& v, const Names& atoms, const Names& pts) {
    Json sup = Json::array(), fib = Json::object();
    for (std::size_t a : v.support().atoms()) {
        sup.push_back(atoms.ids[a]);
        fib[atoms.ids[a]] = points_json(v.fiber(a), pts);
    }
    return Json{{"support", sup}, {"fibers", fib}};
}

inline ConditionalSet parse_set(const Json& j, const Names& atoms, const Names& pts) {
    const Json& sup = require(j, "support", "conditional set");
    const Json& fib = object_of(require(j, "fibers", "conditional set"), "\"fibers\"");
    std::vector<PointSet> fibers(atoms.ids.size(), PointSet::empty(pts.ids.size()));
    Mask support = 0;
    for (const auto& a : array_of(sup, "\"support\"")) support |= Mask{1} << atoms.index(str_of(a, "atom id"));
    for (const auto& [a, ps] : fib.items()) {
        const auto ai = atoms.index(a);
        if (!((support >> ai) & 1U)) throw invalid("fiber given for atom '" + a + "' outside the support");
        fibers[ai] = parse_points(ps, pts, "fiber of atom '" + a + "'");
    }
    for (std::size_t a = 0; a < atoms.ids.size(); ++a)
        if (((support >> a) & 1U) && fibers[a].is_empty())
            throw invalid("atom '" + atoms.ids[a] + "' is in the support but has an empty fiber");
    return ConditionalSet::from_fibers(pts.ids.size(), fibers);
}

inline std::string set_text(const ConditionalSet& v, const Names& atoms, const Names& pts) {
    if (v.is_bottom()) return "bottom";
    std::string s;
    for (std::size_t a : v.support().atoms()) {
        if (!s.empty()) s += " ";
        s += atoms.ids[a] + ":{";
        bool first = true;
        for (std::size_t p : v.fiber(a).points()) {
            s += (first ? "" : ",") + pts.ids[p];
            first = false;
        }
        s += "}";
    }
    return s;
}

template <class Field>
Json field_json(const Field& f, const Names& atoms) {
    Json o = Json::object();
    for (std::size_t a = 0; a < f.size(); ++a) o[atoms.ids[a]] = f[a].str();
    return o;
}

inline Json integrand_json(const Integrand& f, const Names& atoms, const Names& pts) {
    Json o = Json::object();
    for (std::size_t a = 0; a < f.atoms(); ++a) {
        Json row = Json::object();
        for (std::size_t p = 0; p < f.points(); ++p) row[pts.ids[p]] = f.at(a, p).str();
        o[atoms.ids[a]] = row;
    }
    return o;
}

/// Point masses when every field is discrete, block lists otherwise.
inline Json measure_json(const StableMeasure& mu, const Names& atoms, const Names& pts) {
    Json o = Json::object();
    for (std::size_t a = 0; a < mu.atoms(); ++a) {
        const auto& fm = mu.at(a);
        const bool discrete = fm.ring() == SetRing::discrete(mu.points());
        Json row = discrete ? Json::object() : Json::array();
        for (std::size_t i = 0; i < fm.ring().blocks().size(); ++i) {
            const auto& b = fm.ring().blocks()[i];
            if (discrete) row[pts.ids[b.points().front()]] = fm.block_masses()[i].str();
            else row.push_back(Json{{"block", points_json(b, pts)}, {"mass", fm.block_masses()[i].str()}});
        }
        o[atoms.ids[a]] = row;
    }
    return o;
}

/// Plain text table: columns padded to the widest cell, two spaces apart.
inline std::string table(const std::vector<std::vector<std::string>>& rows, std::size_t indent = 4) {
    std::vector<std::size_t> w;
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (w.size() <= c) w.push_back(0);
            w[c] = std::max(w[c], r[c].size());
        }
    std::ostringstream os;
    for (const auto& r : rows) {
        std::string line(indent, ' ');
        for (std::size_t c = 0; c < r.size(); ++c) {
            line += r[c];
            if (c + 1 < r.size()) line += std::string(w[c] - r[c].size() + 2, ' ');
        }
        os << line << "\n";
    }
    return os.str();
}

template <class Field>
std::vector<std::vector<std::string>> field_rows(const std::string& head, const Field& f, const Names& atoms) {
    std::vector<std::vector<std::string>> rows{{"atom", head}};
    for (std::size_t a = 0; a < f.size(); ++a) rows.push_back({atoms.ids[a], f[a].str()});
    return rows;
}

inline std::string measure_text(const StableMeasure& mu, const Names& atoms, const Names& pts) {
    std::vector<std::vector<std::string>> rows{{"atom", "block", "mass"}};
    for (std::size_t a = 0; a < mu.atoms(); ++a) {
        const auto& fm = mu.at(a);
        for (std::size_t i = 0; i < fm.ring().blocks().size(); ++i) {
            std::string b = "{";
            bool first = true;
            for (std::size_t p : fm.ring().blocks()[i].points()) {
                b += (first ? "" : ",") + pts.ids[p];
                first = false;
            }
            rows.push_back({i == 0 ? atoms.ids[a] : "", b + "}", fm.block_masses()[i].str()});
        }
    }
    return table(rows);
}

inline std::string integrand_text(const Integrand& f, const Names& atoms, const Names& pts) {
    std::vector<std::vector<std::string>> rows{{"atom"}};
    for (const auto& p : pts.ids) rows[0].push_back(p);
    for (std::size_t a = 0; a < f.atoms(); ++a) {
        rows.push_back({atoms.ids[a]});
        for (std::size_t p = 0; p < f.points(); ++p) rows.back().push_back(f.at(a, p).str());
    }
    return table(rows);
}

}  // namespace detail

/// Canonical JSON for a scenario; parse_scenario(print_scenario(s)) == s.
inline Json scenario_json(const Scenario& s) {
    using namespace detail;
    const Names atoms = atom_names(s.algebra), pts = point_names(s.ground);
    Json doc = Json::object();
    Json al = Json::array();
    for (std::size_t a = 0; a < s.algebra.size(); ++a) al.push_back(Json{{"id", s.algebra.id(a)}, {"prob", s.algebra.weight(a).str()}});
    doc["atoms"] = al;
    Json g = Json::object();
    g["points"] = s.ground.ids();
    if (s.ground.has_coordinates()) {
        Json c = Json::object();
        for (std::size_t p = 0; p < s.ground.size(); ++p) c[s.ground.id(p)] = s.ground.coordinate(p).str();
        g["coords"] = c;
    }
    doc["ground"] = g;
    Json fields = Json::object();
    for (std::size_t a = 0; a < s.fields.size(); ++a)
        if (!(s.fields[a] == SetRing::discrete(s.ground.size()))) {
            Json bs = Json::array();
            for (const auto& b : s.fields[a].blocks()) bs.push_back(points_json(b, pts));
            fields[atoms.ids[a]] = bs;
        }
    if (!fields.empty()) doc["fields"] = fields;
    if (!s.measures.empty()) {
        Json ms = Json::object();
        for (const auto& [name, t] : s.measures) {
            Json per = Json::object();
            for (std::size_t a = 0; a < t.size(); ++a) {
                Json row = Json::object();
                for (std::size_t p = 0; p < t[a].size(); ++p)
                    if (!t[a][p].is_zero()) row[pts.ids[p]] = t[a][p].str();
                if (!row.empty()) per[atoms.ids[a]] = row;
            }
            ms[name] = per;
        }
        doc["measures"] = ms;
    }
    if (s.rv) {
        Json rv = Json::object();
        for (std::size_t a = 0; a < s.rv->atoms(); ++a) rv[atoms.ids[a]] = pts.ids[(*s.rv)(a)];
        doc["rv"] = rv;
    }
    if (s.subalgebra) {
        Json sub = Json::array();
        for (const auto& b : s.subalgebra->blocks()) {
            Json blk = Json::array();
            for (std::size_t a : b.atoms()) blk.push_back(atoms.ids[a]);
            sub.push_back(blk);
        }
        doc["subalgebra"] = sub;
    }
    doc["queries"] = s.queries;
    return doc;
}

inline std::string print_scenario(const Scenario& s) { return scenario_json(s).dump(2) + "\n"; }

// ------------------------------------------------------------------ queries

struct QueryResult {
    Json result;
    bool oracle_match = false;
    std::string text;  ///< rendered result table
};

namespace detail {

struct Context {
    const Scenario& s;
    Names atoms, pts, pairs;
    Reader reader;
    explicit Context(const Scenario& sc)
        : s(sc), atoms(atom_names(sc.algebra)), pts(point_names(sc.ground)), pairs(pair_names(sc.ground)), reader("") {}

    std::string name(const Json& q, const char* key) const { return str_of(require(q, key, "query"), std::string("\"") + key + "\""); }

    /// "f": {point: r} (same map at every atom) or "f_atoms": {atom: {point: r}}.
    Integrand integrand(const Json& q, const Names& points) const {
        std::vector<std::vector<Rational>> t(atoms.ids.size(), std::vector<Rational>(points.ids.size(), Rational(0)));
        if (q.contains("f")) {
            for (const auto& [p, v] : object_of(q.at("f"), "\"f\"").items()) {
                const auto pi = points.index(p);
                for (auto& row : t) row[pi] = reader.rat(v);
            }
        } else if (q.contains("f_atoms")) {
            for (const auto& [a, row] : object_of(q.at("f_atoms"), "\"f_atoms\"").items())
                for (const auto& [p, v] : object_of(row, "\"f_atoms\" row").items()) t[atoms.index(a)][points.index(p)] = reader.rat(v);
        } else if (q.contains("set")) {
            return indicator(parse_set(q.at("set"), atoms, points));
        } else {
            throw invalid("query needs an integrand (\"f\", \"f_atoms\" or \"set\")");
        }
        return Integrand(points.ids.size(), std::move(t));
    }
    std::vector<Rational> point_map(const Json& j) const {
        std::vector<Rational> f(pts.ids.size(), Rational(0));
        for (const auto& [p, v] : object_of(j, "\"f\"").items()) f[pts.index(p)] = reader.rat(v);
        return f;
    }
};

inline const char* verdict(bool ok) { return ok ? "oracle-match" : "oracle-MISMATCH"; }

inline QueryResult q_eval(const Context& c, const Json& q) {
    const auto name = c.name(q, "measure");
    const auto v = parse_set(require(q, "set", "query"), c.atoms, c.pts);
    const auto mu = c.s.measure(name);
    const auto val = eval(mu, v);
    // classical: sum the point masses of the fiber on the support
    const auto& pm = c.s.masses(name);
    std::vector<ExtRational> ref;
    for (std::size_t a = 0; a < v.atoms(); ++a) {
        ExtRational x = 0;
        if (v.support().contains(a))
            for (std::size_t p : v.fiber(a).points()) x += pm[a][p];
        ref.push_back(x);
    }
    QueryResult r;
    r.oracle_match = val == ExtScalarField(ref);
    r.result = field_json(val, c.atoms);
    r.text = "    set: " + set_text(v, c.atoms, c.pts) + "\n" + table(field_rows("mass", val, c.atoms));
    return r;
}

inline QueryResult q_integrate(const Context& c, const Json& q) {
    const auto mu = c.s.measure(c.name(q, "measure"));
    const Integrand f = c.integrand(q, c.pts);
    const auto val = integrate(f, mu);
    const auto ref = oracle::integral(f, mu);
    QueryResult r;
    r.oracle_match = ref && val == *ref;
    r.result = field_json(val, c.atoms);
    r.text = table(field_rows("integral", val, c.atoms));
    return r;
}

inline QueryResult q_cond_expect(const Context& c, const Json& q) {
    if (!c.s.rv) throw invalid("cond-expect needs \"rv\"");
    const SubAlgebra g = c.s.subalgebra ? *c.s.subalgebra : SubAlgebra::trivial(c.s.algebra.size());
    const auto f = c.point_map(require(q, "f", "query"));
    const auto val = conditional_expectation(c.s.algebra, *c.s.rv, g, f);
    const auto ref = oracle::conditional_expectation(c.s.algebra, *c.s.rv, g, f);
    const auto ga = g.induced(c.s.algebra);
    QueryResult r;
    r.oracle_match = val == ref;
    r.result = Json::object();
    std::vector<std::vector<std::string>> rows{{"G-atom", "prob", "E[f(xi)|G]"}};
    for (std::size_t b = 0; b < g.size(); ++b) {
        r.result[ga.id(b)] = val[b].str();
        rows.push_back({ga.id(b), ga.weight(b).str(), val[b].str()});
    }
    r.text = table(rows);
    return r;
}

inline QueryResult q_rn(const Context& c, const Json& q) {
    const auto mu_name = c.name(q, "mu"), nu_name = c.name(q, "nu");
    const auto mu = c.s.measure(mu_name), nu = c.s.measure(nu_name);
    const Integrand dens = radon_nikodym(mu, nu);
    // classical quotient of block sums, straight from the point masses
    const auto& pm = c.s.masses(mu_name);
    const auto& pn = c.s.masses(nu_name);
    bool quotient_ok = true;
    for (std::size_t a = 0; a < mu.atoms(); ++a)
        for (const auto& b : c.s.fields[a].blocks()) {
            ExtRational sm = 0, sn = 0;
            for (std::size_t p : b.points()) {
                sm += pm[a][p];
                sn += pn[a][p];
            }
            const Rational want = sm.is_zero() ? Rational(0) : sn.value() / sm.value();
            for (std::size_t p : b.points()) quotient_ok = quotient_ok && dens.at(a, p) == want;
        }
    QueryResult r;
    r.oracle_match = quotient_ok && !rn_certificate(dens, mu, nu, true);
    r.result = integrand_json(dens, c.atoms, c.pts);
    r.text = integrand_text(dens, c.atoms, c.pts);
    return r;
}

inline QueryResult q_fubini(const Context& c, const Json& q) {
    const auto mu = c.s.measure(c.name(q, "mu")), nu = c.s.measure(c.name(q, "nu"));
    const ProductSpace ps(c.s.ground.size(), c.s.ground.size());
    const Integrand f = c.integrand(q, c.pairs);
    const auto tri = fubini(f, mu, nu, ps);
    const auto ref = oracle::integral(f, oracle::product_measure(mu, nu, ps));
    QueryResult r;
    r.oracle_match = tri.equal() && ref && tri.product == *ref;
    r.result = Json{{"product", field_json(tri.product, c.atoms)},
                    {"left-iterated", field_json(tri.left_iterated, c.atoms)},
                    {"right-iterated", field_json(tri.right_iterated, c.atoms)},
                    {"equal", tri.equal()}};
    std::vector<std::vector<std::string>> rows{{"atom", "product", "dx-then-dy", "dy-then-dx"}};
    for (std::size_t a = 0; a < mu.atoms(); ++a)
        rows.push_back({c.atoms.ids[a], tri.product[a].str(), tri.left_iterated[a].str(), tri.right_iterated[a].str()});
    r.text = table(rows) + "    equal: " + (tri.equal() ? "yes" : "no") + "\n";
    return r;
}

inline QueryResult q_extend(const Context& c, const Json& q) {
    const std::size_t n = c.atoms.ids.size(), m = c.pts.ids.size();
    std::vector<std::vector<PointSet>> given(n);
    std::vector<std::vector<ExtRational>> mass(n);
    for (const auto& [a, bs] : object_of(require(q, "ring", "query"), "\"ring\"").items())
        for (const auto& b : array_of(bs, "ring blocks")) given[c.atoms.index(a)].push_back(parse_points(b, c.pts, "ring block"));
    const Json& masses = object_of(require(q, "masses", "query"), "\"masses\"");
    for (const auto& [a, ms] : masses.items())
        for (const auto& x : array_of(ms, "masses")) mass[c.atoms.index(a)].push_back(c.reader.ext(x));
    std::vector<FiberMeasure> per;
    for (std::size_t a = 0; a < n; ++a) {
        if (given[a].size() != mass[a].size())
            throw invalid("atom '" + c.atoms.ids[a] + "' needs one mass per ring block");
        SetRing ring(m, given[a]);
        std::vector<ExtRational> sorted;
        for (const auto& b : ring.blocks())
            for (std::size_t i = 0; i < given[a].size(); ++i)
                if (given[a][i] == b) sorted.push_back(mass[a][i]);
        per.emplace_back(std::move(ring), std::move(sorted));
    }
    const StableMeasure pm(m, std::move(per));
    const StableMeasure ext = caratheodory_extend(pm);
    bool ok = ext == oracle::caratheodory_extension(pm);
    for (std::size_t a = 0; a < n; ++a)
        for (const auto& b : pm.at(a).ring().blocks()) {
            const auto v = ConditionalSet::uniform(Event::atom(n, a), b);
            ok = ok && eval(ext, v) == eval(pm, v);
        }
    QueryResult r;
    r.result = Json{{"extension", measure_json(ext, c.atoms, c.pts)}};
    r.text = measure_text(ext, c.atoms, c.pts);
    if (q.contains("sets")) {
        const OuterMeasure outer(pm);
        Json vals = Json::array();
        std::vector<std::vector<std::string>> rows{{"set", "outer", "extension"}};
        for (const auto& sj : array_of(q.at("sets"), "\"sets\"")) {
            const auto v = parse_set(sj, c.atoms, c.pts);
            const auto o = outer(v);
            ok = ok && o == oracle::outer_measure(pm, v);
            Json e = Json{{"set", set_json(v, c.atoms, c.pts)}, {"outer", field_json(o, c.atoms)}};
            std::string es = "not measurable";
            if (ext.measurable(v)) {
                const auto x = eval(ext, v);
                ok = ok && x == o;
                e["extension"] = field_json(x, c.atoms);
                es = to_string(x);
            }
            vals.push_back(e);
            rows.push_back({set_text(v, c.atoms, c.pts), to_string(o), es});
        }
        r.result["values"] = vals;
        r.text += table(rows);
    }
    r.oracle_match = ok;
    return r;
}

inline QueryResult q_hahn(const Context& c, const Json& q) {
    const auto mu1 = c.s.measure(c.name(q, "mu1")), mu2 = c.s.measure(c.name(q, "mu2"));
    const auto x0 = hahn_positive_set(mu1, mu2);
    const auto diff = signed_difference(mu1, mu2, x0);
    QueryResult r;
    r.oracle_match = x0 == oracle::positive_set(mu1, mu2);
    r.result = Json{{"set", set_json(x0, c.atoms, c.pts)}, {"difference", field_json(diff, c.atoms)}};
    r.text = "    positive set: " + set_text(x0, c.atoms, c.pts) + "\n" + table(field_rows("(mu2-mu1)(X0)", diff, c.atoms));
    return r;
}

inline QueryResult q_daniell_stone(const Context& c, const Json& q) {
    const std::size_t n = c.atoms.ids.size(), m = c.pts.ids.size();
    const auto kind = c.name(q, "functional");
    const auto discrete = StableSigmaAlgebra::discrete(n, m);
    std::vector<std::vector<ExtRational>> want(n, std::vector<ExtRational>(m, ExtRational(0)));
    std::function<ScalarField(const Integrand&)> l;
    if (kind == "integrate") {
        const auto name = c.name(q, "measure");
        const auto mu = StableMeasure::from_point_masses(discrete, c.s.masses(name));
        if (!is_finite_measure(mu)) throw invalid("daniell-stone needs a finite measure");
        want = c.s.masses(name);
        l = [mu](const Integrand& f) { return integrate_finite(f, mu); };
    } else if (kind == "dirac") {
        std::vector<std::size_t> xs(n, m);
        for (const auto& [a, p] : object_of(require(q, "x", "query"), "\"x\"").items())
            xs[c.atoms.index(a)] = c.pts.index(str_of(p, "point"));
        for (std::size_t a = 0; a < n; ++a) {
            if (xs[a] == m) throw invalid("\"x\" has no value at atom '" + c.atoms.ids[a] + "'");
            want[a][xs[a]] = 1;
        }
        const PointFunction x(m, xs);
        l = [x](const Integrand& f) { return f(x); };
    } else if (kind == "mixture") {
        const Json& names = array_of(require(q, "measures", "query"), "\"measures\"");
        const Json& ws = array_of(require(q, "weights", "query"), "\"weights\"");
        if (names.size() != ws.size() || names.empty()) throw invalid("mixture needs one weight per measure");
        std::vector<std::pair<Rational, StableMeasure>> parts;
        for (std::size_t i = 0; i < names.size(); ++i) {
            const auto name = str_of(names[i], "measure name");
            const Rational w = c.reader.rat(ws[i]);
            if (w.sign() < 0) throw invalid("mixture weights must be nonnegative");
            parts.emplace_back(w, StableMeasure::from_point_masses(discrete, c.s.masses(name)));
            if (!is_finite_measure(parts.back().second)) throw invalid("daniell-stone needs finite measures");
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t p = 0; p < m; ++p) want[a][p] += ExtRational(w) * c.s.masses(name)[a][p];
        }
        l = [parts, n](const Integrand& f) {
            ScalarField s(n, Rational(0));
            for (const auto& [w, mu] : parts) s = s + ScalarField(n, w) * integrate_finite(f, mu);
            return s;
        };
    } else {
        throw invalid("unknown functional '" + kind + "' (integrate, dirac, mixture)");
    }
    const StableMeasure rec = daniell_stone_finite(l, n, m);
    QueryResult r;
    r.oracle_match = rec == StableMeasure::from_point_masses(discrete, want);
    r.result = measure_json(rec, c.atoms, c.pts);
    r.text = measure_text(rec, c.atoms, c.pts);
    return r;
}

inline QueryResult q_markov(const Context& c, const Json& q) {
    const std::size_t n = c.atoms.ids.size(), m = c.pts.ids.size();
    const auto mu = c.s.measure(c.name(q, "mu"));
    std::vector<std::vector<std::vector<Rational>>> rows(n, std::vector<std::vector<Rational>>(m, std::vector<Rational>(m, Rational(0))));
    std::vector<std::vector<bool>> seen(n, std::vector<bool>(m, false));
    for (const auto& [a, per] : object_of(require(q, "kernel", "query"), "\"kernel\"").items()) {
        const auto ai = c.atoms.index(a);
        for (const auto& [x, row] : object_of(per, "kernel rows").items()) {
            const auto xi = c.pts.index(x);
            seen[ai][xi] = true;
            for (const auto& [y, v] : object_of(row, "kernel row").items()) rows[ai][xi][c.pts.index(y)] = c.reader.rat(v);
        }
    }
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t x = 0; x < m; ++x)
            if (!seen[a][x]) throw invalid("kernel has no row for point '" + c.pts.ids[x] + "' at atom '" + c.atoms.ids[a] + "'");
    const StableMarkovKernel k(m, rows);
    const ProductSpace ps(m, m);
    const auto joint = markov_product(k, mu, ps);
    QueryResult r;
    r.oracle_match = joint == oracle::markov_product(k, mu, ps);
    r.result = measure_json(joint, c.atoms, c.pairs);
    r.text = measure_text(joint, c.atoms, c.pairs);
    return r;
}

struct OpInfo {
    const char* name;
    QueryResult (*run)(const Context&, const Json&);
    const char* keys;
    const char* contract;
};

inline const std::vector<OpInfo>& ops() {
    static const std::vector<OpInfo> o{
        {"eval-measure", q_eval, "measure, set",
         "Evaluates a stable measure at a conditional set V|A: the fiber mass on each atom of A, 0 off A.\n"
         "The set must be measurable for the scenario's fields.\n"
         "Oracle: the classical sum of point masses over each fiber."},
        {"integrate", q_integrate, "measure, f | f_atoms | set",
         "Stable Lebesgue integral of an integrand: the supremum of the integrals of the dyadic\n"
         "elementary approximations, computed exactly; signed integrands integrate as f+ minus f-.\n"
         "Oracle: the atomwise finite sum over field blocks."},
        {"cond-expect", q_cond_expect, "f (uses rv, subalgebra)",
         "Conditional expectation E[f(xi) | G] as the integral of f o x against the G-stable\n"
         "conditional distribution of xi, one value per G-atom.\n"
         "Oracle: the classical weighted average over each G-atom."},
        {"rn-derivative", q_rn, "mu, nu",
         "Radon-Nikodym density of nu with respect to a stable probability measure mu. Fails with a\n"
         "witness set when nu is not absolutely continuous.\n"
         "Oracle: the block quotient of nu-mass over mu-mass, and nu(V|A) = int 1_{V|A} f dmu for every\n"
         "measurable V|A."},
        {"fubini-check", q_fubini, "mu, nu, f | f_atoms | set over pairs \"(x,y)\"",
         "Integral of a product integrand against mu x nu and both iterated integrals.\n"
         "Oracle: the finite sum against the fiberwise product of block masses."},
        {"extend", q_extend, "ring, masses, sets (optional)",
         "Caratheodory extension of a stable pre-measure on a stable ring to the generated stable\n"
         "sigma-algebra, via the outer measure; regions no ring member covers get mass inf.\n"
         "Oracle: the classical per-atom extension, and agreement with the pre-measure on the ring."},
        {"hahn", q_hahn, "mu1, mu2",
         "Positive set X0|A0 for mu2 - mu1: (mu2-mu1)(X) <= (mu2-mu1)(X0|A0) and every measurable subset\n"
         "of X0|A0 has nonnegative difference.\n"
         "Oracle: the union of field blocks where mu1 <= mu2, per atom."},
        {"daniell-stone", q_daniell_stone, "functional (integrate | dirac | mixture), measure | x | measures+weights",
         "Recovers the stable measure mu(V) = L(1_V) of a positive, stable, L0-linear functional on\n"
         "integrands over the discrete stable sigma-algebra, after spot-checking those premises.\n"
         "Oracle: the measure the functional was built from."},
        {"markov-product", q_markov, "mu, kernel",
         "Joint stable measure K (x) mu on pairs (x,y): the block x {y} mass is the integral of K(x, {y})\n"
         "over the block against mu.\n"
         "Oracle: the classical row-weighted product mu(b) K(b, y)."},
    };
    return o;
}

}  // namespace detail

inline QueryResult run_query(const Scenario& s, const Json& q, std::string_view source = {}) {
    detail::Context c(s);
    c.reader = detail::Reader(source);
    const auto op = detail::str_of(detail::require(q, "op", "query"), "query op");
    for (const auto& info : detail::ops())
        if (op == info.name) return info.run(c, q);
    throw invalid("unknown query op '" + op + "'");
}

// ------------------------------------------------------------------ reports

struct Report {
    std::vector<QueryResult> results;
    bool all_match() const {
        return std::all_of(results.begin(), results.end(), [](const QueryResult& r) { return r.oracle_match; });
    }
};

inline Report run_scenario(const Scenario& s, std::string_view source = {}) {
    Report rep;
    for (std::size_t i = 0; i < s.queries.size(); ++i) {
        try {
            rep.results.push_back(run_query(s, s.queries[i], source));
        } catch (const error& e) {
            throw error(e.kind(), "query " + std::to_string(i + 1) + " (" + s.queries[i].at("op").get<std::string>() + "): " + e.what());
        } catch (const std::exception& e) {
            throw invalid("query " + std::to_string(i + 1) + " (" + s.queries[i].at("op").get<std::string>() + "): " + e.what());
        }
    }
    return rep;
}

inline std::string report_text(const Scenario& s, const Report& rep) {
    std::ostringstream os;
    os << "atoms   " << s.algebra.size() << "\n"
       << "points  " << s.ground.size() << "\n"
       << "queries " << s.queries.size() << "\n";
    for (std::size_t i = 0; i < rep.results.size(); ++i) {
        const auto& q = s.queries[i];
        os << "\n[" << i + 1 << "] " << q.at("op").get<std::string>();
        for (const auto& [k, v] : q.items())
            if (v.is_string() && k != "op") os << "  " << k << "=" << v.get<std::string>();
        os << "\n" << rep.results[i].text << "    " << detail::verdict(rep.results[i].oracle_match) << "\n";
    }
    std::size_t ok = 0;
    for (const auto& r : rep.results) ok += r.oracle_match;
    os << "\n" << ok << "/" << rep.results.size() << " queries match the oracle\n";
    return os.str();
}

inline std::string report_json(const Scenario& s, const Report& rep) {
    Json doc = scenario_json(s);
    for (std::size_t i = 0; i < rep.results.size(); ++i) {
        doc["queries"][i]["result"] = rep.results[i].result;
        doc["queries"][i]["oracle"] = rep.results[i].oracle_match ? "match" : "mismatch";
    }
    return doc.dump(2) + "\n";
}

inline std::string verify_text(const verify::VerifyOptions& opt, const verify::VerifyReport& rep) {
    std::ostringstream os;
    std::string fault = "none";
    for (const auto& f : verify::faults())
        if (f.fault == opt.fault) fault = f.name;
    os << "verify seed=" << opt.seed << " cases=" << opt.cases << " fault=" << fault << "\n";
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : rep.results)
        rows.push_back({r.name, std::to_string(r.passed) + "/" + std::to_string(r.cases), r.ok() ? "pass" : "FAIL"});
    const auto lines = detail::table(rows, 2);
    std::istringstream ls(lines);
    std::string line;
    for (const auto& r : rep.results) {
        std::getline(ls, line);
        os << line << "\n";
        for (const auto& [k, v] : r.counters.n) os << "      " << k << ": " << v << "\n";
        if (r.failure) os << "    " << *r.failure << "\n";
    }
    std::size_t ok = 0;
    for (const auto& r : rep.results) ok += r.ok();
    os << ok << "/" << rep.results.size() << " suites pass\n";
    return os.str();
}

inline std::string verify_json(const verify::VerifyOptions& opt, const verify::VerifyReport& rep) {
    Json doc = Json::object();
    doc["seed"] = opt.seed;
    doc["cases"] = opt.cases;
    Json suites = Json::array();
    for (const auto& r : rep.results) {
        Json s{{"suite", r.name}, {"cases", r.cases}, {"passed", r.passed}, {"ok", r.ok()}};
        s["counters"] = Json(r.counters.n);
        if (r.failure) s["failure"] = *r.failure;
        suites.push_back(s);
    }
    doc["suites"] = suites;
    doc["ok"] = rep.ok();
    return doc.dump(2) + "\n";
}

inline std::string explain(const std::string& op) {
    for (const auto& info : detail::ops())
        if (op == info.name) return std::string(info.name) + "\n  keys: " + info.keys + "\n\n" + info.contract + "\n";
    if (op == "verify") {
        std::string s =
            "verify\n  flags: --seed N, --cases M, --suite NAME, --fault NAME\n\n"
            "Runs randomized property suites against the library and its fiberwise oracles. Each\n"
            "failure is shrunk to the smallest (atoms, points) size that still fails.\nSuites:\n";
        for (const auto& x : verify::all_suites()) s += "  " + x.name + ": " + x.description + "\n";
        s += "Faults:\n";
        for (const auto& f : verify::faults()) s += std::string("  ") + f.name + ": " + f.description + "\n";
        return s;
    }
    std::string known;
    for (const auto& info : detail::ops()) known += std::string(known.empty() ? "" : ", ") + info.name;
    throw error(error::Kind::usage, "unknown operation '" + op + "' (known: " + known + ", verify)");
}

}  // namespace cms::cli
