#pragma once

#include <gmpxx.h>

#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "varseq/jet_space.hpp"

namespace varseq {

using Rational = mpq_class;

enum class Fn : std::uint8_t { sqrt, exp, sin, cos, inv };

inline const char* fn_name(Fn f) {
    switch (f) {
        case Fn::sqrt: return "sqrt";
        case Fn::exp: return "exp";
        case Fn::sin: return "sin";
        case Fn::cos: return "cos";
        case Fn::inv: return "inv";
    }
    return "?";
}

struct Atom;

struct Factor {
    const Atom* atom;
    int exp;
};
using Monomial = std::vector<Factor>;

struct Term {
    Monomial mono;
    Rational coeff;
};

inline int atom_cmp(const Atom* a, const Atom* b);
inline int mono_cmp(const Monomial& a, const Monomial& b);

enum class Tribool { no, yes, unknown };

// Canonical scalar: an expanded sum of Laurent monomials over interned atoms
// with rational coefficients.  Immutable; copies share storage.
class Expr {
public:
    Expr() = default;
    Expr(int v) : Expr(Rational(v)) {}
    Expr(long v) : Expr(Rational(v)) {}
    Expr(const Rational& c) {
        if (c != 0) set({Term{{}, c}});
    }

    static Expr coord(const JetCoordinate& c);
    static Expr base(int i) { return coord(JetCoordinate::base(i)); }
    static Expr fibre(int sigma, MultiIndex J = {}) { return coord(JetCoordinate::fibre(sigma, J)); }
    static Expr param(const std::string& name);
    static Expr opaque(const std::string& name, std::vector<JetCoordinate> slots, std::vector<int> counts = {});
    static Expr func(Fn f, const Expr& arg);
    static Expr from_terms(std::vector<Term> terms);
    static Expr atom_power(const Atom* a, int e, Rational c = 1) {
        return from_terms({Term{{Factor{a, e}}, std::move(c)}});
    }

    const std::vector<Term>& terms() const {
        static const std::vector<Term> empty;
        return t_ ? *t_ : empty;
    }
    bool is_zero() const { return !t_; }
    bool is_constant() const { return !t_ || (t_->size() == 1 && (*t_)[0].mono.empty()); }
    Rational constant_value() const {
        if (!t_) return 0;
        if (!is_constant()) throw std::logic_error("expression is not constant");
        return (*t_)[0].coeff;
    }
    bool is_monomial() const { return t_ && t_->size() == 1; }

    Expr operator-() const;
    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    Expr& operator+=(const Expr& b) { return *this = *this + b; }
    Expr& operator-=(const Expr& b) { return *this = *this - b; }
    Expr& operator*=(const Expr& b) { return *this = *this * b; }

    Expr pow(int k) const;

    Expr partial(const JetCoordinate& c) const;
    Expr total_derivative(int i) const;
    Expr total_derivative(const MultiIndex& J) const {
        Expr r = *this;
        for (int k = 0; k < J.size(); ++k) r = r.total_derivative(J[k]);
        return r;
    }

    // Largest jet order among the coordinates the expression depends on.
    int order() const;
    // Coordinates the expression depends on, opaque slots and function
    // arguments included.
    std::vector<JetCoordinate> dependencies() const;
    std::vector<const Atom*> atoms() const;
    bool has_elementary() const;
    bool has_opaque() const;
    int degree_in(const JetCoordinate& c) const;

    // Canonical form is maintained on construction; this exists for callers
    // that want the operation spelled out.
    Expr canonicalize() const { return *this; }

    friend bool operator==(const Expr& a, const Expr& b);

private:
    void set(std::vector<Term> v) {
        if (!v.empty()) t_ = std::make_shared<const std::vector<Term>>(std::move(v));
    }
    std::shared_ptr<const std::vector<Term>> t_;
};

inline int expr_cmp(const Expr& a, const Expr& b);

struct Atom {
    enum class Kind : std::uint8_t { param, coord, opaque, func };
    Kind kind = Kind::param;
    std::string name;
    JetCoordinate coord;
    std::vector<JetCoordinate> slots;
    std::vector<int> counts;
    Fn fn = Fn::sqrt;
    Expr arg;
    // Derived data, filled on interning.
    int order = 0;
    std::vector<JetCoordinate> deps;
    bool elementary = false;
    bool has_opaque = false;
};

inline int cmp_int(long long a, long long b) { return a < b ? -1 : (a > b ? 1 : 0); }

inline int coord_cmp(const JetCoordinate& a, const JetCoordinate& b) {
    auto c = a <=> b;
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

// Parameters, then coordinates, then opaque atoms, then functions.
inline int atom_cmp(const Atom* a, const Atom* b) {
    if (a == b) return 0;
    if (a->kind != b->kind) return cmp_int(static_cast<int>(a->kind), static_cast<int>(b->kind));
    switch (a->kind) {
        case Atom::Kind::param: return a->name.compare(b->name) < 0 ? -1 : (a->name == b->name ? 0 : 1);
        case Atom::Kind::coord: return coord_cmp(a->coord, b->coord);
        case Atom::Kind::opaque: {
            if (int c = a->name.compare(b->name)) return c < 0 ? -1 : 1;
            if (a->slots.size() != b->slots.size()) return cmp_int(a->slots.size(), b->slots.size());
            for (std::size_t k = 0; k < a->slots.size(); ++k)
                if (int c = coord_cmp(a->slots[k], b->slots[k])) return c;
            int ta = 0, tb = 0;
            for (int x : a->counts) ta += x;
            for (int x : b->counts) tb += x;
            if (ta != tb) return cmp_int(ta, tb);
            for (std::size_t k = 0; k < a->counts.size(); ++k)
                if (a->counts[k] != b->counts[k]) return cmp_int(b->counts[k], a->counts[k]);
            return 0;
        }
        case Atom::Kind::func:
            if (a->fn != b->fn) return cmp_int(static_cast<int>(a->fn), static_cast<int>(b->fn));
            return expr_cmp(a->arg, b->arg);
    }
    return 0;
}

// Factor by factor; a smaller atom sorts first, a higher power of the same
// atom sorts first, and a proper prefix sorts first.
inline int mono_cmp(const Monomial& a, const Monomial& b) {
    std::size_t k = 0;
    for (; k < a.size() && k < b.size(); ++k) {
        if (a[k].atom != b[k].atom) {
            if (int c = atom_cmp(a[k].atom, b[k].atom)) return c;
        }
        if (a[k].exp != b[k].exp) return a[k].exp > b[k].exp ? -1 : 1;
    }
    return cmp_int(a.size(), b.size());
}

inline int expr_cmp(const Expr& a, const Expr& b) {
    const auto& ta = a.terms();
    const auto& tb = b.terms();
    for (std::size_t k = 0; k < ta.size() && k < tb.size(); ++k) {
        if (int c = mono_cmp(ta[k].mono, tb[k].mono)) return c;
        if (int c = cmp(ta[k].coeff, tb[k].coeff)) return c < 0 ? -1 : 1;
    }
    return cmp_int(ta.size(), tb.size());
}

inline bool operator==(const Expr& a, const Expr& b) {
    if (a.t_ == b.t_) return true;
    return expr_cmp(a, b) == 0;
}

namespace detail {

class AtomTable {
public:
    static AtomTable& instance() {
        static AtomTable t;
        return t;
    }

    const Atom* intern(Atom a) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = index_.find(&a);
        if (it != index_.end()) return *it;
        fill_derived(a);
        store_.push_back(std::move(a));
        const Atom* p = &store_.back();
        index_.insert(p);
        return p;
    }

private:
    struct Less {
        bool operator()(const Atom* a, const Atom* b) const { return atom_cmp(a, b) < 0; }
    };

    static void fill_derived(Atom& a) {
        std::set<JetCoordinate> deps;
        switch (a.kind) {
            case Atom::Kind::param: break;
            case Atom::Kind::coord: deps.insert(a.coord); break;
            case Atom::Kind::opaque:
                deps.insert(a.slots.begin(), a.slots.end());
                a.has_opaque = true;
                break;
            case Atom::Kind::func: {
                auto d = a.arg.dependencies();
                deps.insert(d.begin(), d.end());
                a.elementary = true;
                a.has_opaque = a.arg.has_opaque();
                break;
            }
        }
        a.deps.assign(deps.begin(), deps.end());
        a.order = 0;
        for (const auto& c : a.deps) a.order = std::max(a.order, c.order());
    }

    std::mutex mu_;
    std::deque<Atom> store_;
    std::set<const Atom*, Less> index_;
};

inline Monomial mono_mul(const Monomial& a, const Monomial& b) {
    Monomial out;
    out.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        int c = a[i].atom == b[j].atom ? 0 : atom_cmp(a[i].atom, b[j].atom);
        if (c < 0) {
            out.push_back(a[i++]);
        } else if (c > 0) {
            out.push_back(b[j++]);
        } else {
            int e = a[i].exp + b[j].exp;
            if (e != 0) out.push_back({a[i].atom, e});
            ++i;
            ++j;
        }
    }
    while (i < a.size()) out.push_back(a[i++]);
    while (j < b.size()) out.push_back(b[j++]);
    return out;
}

}  // namespace detail

inline Expr Expr::from_terms(std::vector<Term> v) {
    std::sort(v.begin(), v.end(), [](const Term& a, const Term& b) { return mono_cmp(a.mono, b.mono) < 0; });
    std::vector<Term> out;
    out.reserve(v.size());
    for (auto& t : v) {
        if (!out.empty() && mono_cmp(out.back().mono, t.mono) == 0) {
            out.back().coeff += t.coeff;
        } else {
            if (!out.empty() && out.back().coeff == 0) out.pop_back();
            out.push_back(std::move(t));
        }
    }
    if (!out.empty() && out.back().coeff == 0) out.pop_back();
    Expr e;
    e.set(std::move(out));
    return e;
}

inline Expr Expr::coord(const JetCoordinate& c) {
    Atom a;
    a.kind = Atom::Kind::coord;
    a.coord = c;
    return atom_power(detail::AtomTable::instance().intern(std::move(a)), 1);
}

inline Expr Expr::param(const std::string& name) {
    Atom a;
    a.kind = Atom::Kind::param;
    a.name = name;
    return atom_power(detail::AtomTable::instance().intern(std::move(a)), 1);
}

inline Expr Expr::opaque(const std::string& name, std::vector<JetCoordinate> slots, std::vector<int> counts) {
    if (counts.empty()) counts.assign(slots.size(), 0);
    if (counts.size() != slots.size()) throw std::invalid_argument("derivative record does not match slots");
    for (int c : counts)
        if (c < 0) throw std::invalid_argument("negative derivative count");
    Atom a;
    a.kind = Atom::Kind::opaque;
    a.name = name;
    a.slots = std::move(slots);
    a.counts = std::move(counts);
    return atom_power(detail::AtomTable::instance().intern(std::move(a)), 1);
}

inline Expr Expr::func(Fn f, const Expr& arg) {
    if (arg.is_constant()) {
        Rational c = arg.constant_value();
        if (c == 0) {
            if (f == Fn::sqrt || f == Fn::sin) return Expr();
            if (f == Fn::exp || f == Fn::cos) return Expr(1);
            throw std::domain_error("division by zero");
        }
        if (f == Fn::inv) return Expr(Rational(1) / c);
    }
    if (f == Fn::inv && arg.is_monomial()) return arg.pow(-1);
    Atom a;
    a.kind = Atom::Kind::func;
    a.fn = f;
    a.arg = arg;
    return atom_power(detail::AtomTable::instance().intern(std::move(a)), 1);
}

inline Expr Expr::operator-() const {
    if (!t_) return *this;
    std::vector<Term> v = *t_;
    for (auto& t : v) t.coeff = -t.coeff;
    Expr e;
    e.set(std::move(v));
    return e;
}

inline Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    const auto& x = a.terms();
    const auto& y = b.terms();
    std::vector<Term> out;
    out.reserve(x.size() + y.size());
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
        int c = mono_cmp(x[i].mono, y[j].mono);
        if (c < 0) {
            out.push_back(x[i++]);
        } else if (c > 0) {
            out.push_back(y[j++]);
        } else {
            Rational s = x[i].coeff + y[j].coeff;
            if (s != 0) out.push_back(Term{x[i].mono, s});
            ++i;
            ++j;
        }
    }
    while (i < x.size()) out.push_back(x[i++]);
    while (j < y.size()) out.push_back(y[j++]);
    Expr e;
    e.set(std::move(out));
    return e;
}

inline Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_zero() || b.is_zero()) return Expr();
    std::vector<Term> v;
    v.reserve(a.terms().size() * b.terms().size());
    for (const auto& s : a.terms())
        for (const auto& t : b.terms()) v.push_back(Term{detail::mono_mul(s.mono, t.mono), s.coeff * t.coeff});
    return Expr::from_terms(std::move(v));
}

inline Expr Expr::pow(int k) const {
    if (k == 0) return Expr(1);
    if (k < 0) {
        if (is_zero()) throw std::domain_error("division by zero");
        if (is_monomial()) {
            const Term& t = terms()[0];
            Monomial m = t.mono;
            for (auto& f : m) f.exp = -f.exp;
            Expr inv = from_terms({Term{std::move(m), Rational(1) / t.coeff}});
            return inv.pow(-k);
        }
        return func(Fn::inv, *this).pow(-k);
    }
    Expr result(1), base = *this;
    while (k) {
        if (k & 1) result = result * base;
        k >>= 1;
        if (k) base = base * base;
    }
    return result;
}

inline Expr operator/(const Expr& a, const Expr& b) { return a * b.pow(-1); }

namespace detail {

// Derivative of f at its argument, as an expression in the atom itself.
inline Expr fn_derivative(const Atom* a) {
    switch (a->fn) {
        case Fn::sqrt: return Expr::atom_power(a, -1, Rational(1, 2));
        case Fn::exp: return Expr::atom_power(a, 1);
        case Fn::sin: return Expr::func(Fn::cos, a->arg);
        case Fn::cos: return -Expr::func(Fn::sin, a->arg);
        case Fn::inv: return Expr::atom_power(a, 2, -1);
    }
    return Expr();
}

template <class AtomDerivative>
Expr derive(const Expr& e, AtomDerivative&& da) {
    std::unordered_map<const Atom*, Expr> cache;
    std::vector<Term> out;
    for (const auto& t : e.terms()) {
        for (std::size_t k = 0; k < t.mono.size(); ++k) {
            const Atom* a = t.mono[k].atom;
            auto it = cache.find(a);
            if (it == cache.end()) it = cache.emplace(a, da(a)).first;
            const Expr& d = it->second;
            if (d.is_zero()) continue;
            Monomial rest = t.mono;
            int e0 = rest[k].exp;
            if (e0 == 1) {
                rest.erase(rest.begin() + static_cast<long>(k));
            } else {
                rest[k].exp = e0 - 1;
            }
            Rational c = t.coeff * e0;
            for (const auto& s : d.terms()) out.push_back(Term{mono_mul(rest, s.mono), c * s.coeff});
        }
    }
    return Expr::from_terms(std::move(out));
}

}  // namespace detail

inline Expr Expr::partial(const JetCoordinate& c) const {
    std::function<Expr(const Atom*)> da = [&](const Atom* a) -> Expr {
        switch (a->kind) {
            case Atom::Kind::param: return Expr();
            case Atom::Kind::coord: return a->coord == c ? Expr(1) : Expr();
            case Atom::Kind::opaque: {
                for (std::size_t k = 0; k < a->slots.size(); ++k) {
                    if (a->slots[k] == c) {
                        auto counts = a->counts;
                        ++counts[k];
                        return opaque(a->name, a->slots, counts);
                    }
                }
                return Expr();
            }
            case Atom::Kind::func: {
                Expr inner = a->arg.partial(c);
                if (inner.is_zero()) return Expr();
                return detail::fn_derivative(a) * inner;
            }
        }
        return Expr();
    };
    return detail::derive(*this, da);
}

inline Expr Expr::total_derivative(int i) const {
    auto coord_d = [i](const JetCoordinate& c) -> Expr {
        if (c.is_base()) return c.index == i ? Expr(1) : Expr();
        return fibre(c.index, c.J.append(i));
    };
    std::function<Expr(const Atom*)> da = [&](const Atom* a) -> Expr {
        switch (a->kind) {
            case Atom::Kind::param: return Expr();
            case Atom::Kind::coord: return coord_d(a->coord);
            case Atom::Kind::opaque: {
                Expr sum;
                for (std::size_t k = 0; k < a->slots.size(); ++k) {
                    Expr dc = coord_d(a->slots[k]);
                    if (dc.is_zero()) continue;
                    auto counts = a->counts;
                    ++counts[k];
                    sum += opaque(a->name, a->slots, counts) * dc;
                }
                return sum;
            }
            case Atom::Kind::func: {
                Expr inner = a->arg.total_derivative(i);
                if (inner.is_zero()) return Expr();
                return detail::fn_derivative(a) * inner;
            }
        }
        return Expr();
    };
    return detail::derive(*this, da);
}

inline std::vector<const Atom*> Expr::atoms() const {
    std::set<const Atom*> s;
    for (const auto& t : terms())
        for (const auto& f : t.mono) s.insert(f.atom);
    return {s.begin(), s.end()};
}

inline int Expr::order() const {
    int r = 0;
    for (const auto& t : terms())
        for (const auto& f : t.mono) r = std::max(r, f.atom->order);
    return r;
}

inline std::vector<JetCoordinate> Expr::dependencies() const {
    std::set<JetCoordinate> s;
    for (const Atom* a : atoms()) s.insert(a->deps.begin(), a->deps.end());
    return {s.begin(), s.end()};
}

inline bool Expr::has_elementary() const {
    for (const Atom* a : atoms())
        if (a->elementary) return true;
    return false;
}

inline bool Expr::has_opaque() const {
    for (const Atom* a : atoms())
        if (a->has_opaque) return true;
    return false;
}

inline int Expr::degree_in(const JetCoordinate& c) const {
    int d = 0;
    for (const auto& t : terms())
        for (const auto& f : t.mono)
            if (f.atom->kind == Atom::Kind::coord && f.atom->coord == c) d = std::max(d, f.exp);
    return d;
}

inline Expr partial(const Expr& e, const JetCoordinate& c) { return e.partial(c); }
inline Expr total_derivative(const Expr& e, int i) { return e.total_derivative(i); }
inline Expr total_derivative_multi(const Expr& e, const MultiIndex& J) { return e.total_derivative(J); }
inline Expr canonicalize(const Expr& e) { return e; }

// yes when the canonical difference vanishes; no when it does not and the
// expression is polynomial-closed; unknown when elementary functions remain.
inline Tribool equal(const Expr& a, const Expr& b) {
    Expr d = a - b;
    if (d.is_zero()) return Tribool::yes;
    return d.has_elementary() ? Tribool::unknown : Tribool::no;
}

// Replaces atoms for which f returns a value; other atoms are kept.
inline Expr map_atoms(const Expr& e, const std::function<std::optional<Expr>(const Atom*)>& f) {
    std::unordered_map<const Atom*, std::optional<Expr>> cache;
    Expr out;
    for (const auto& t : e.terms()) {
        Expr term(t.coeff);
        Monomial kept;
        for (const auto& fac : t.mono) {
            auto it = cache.find(fac.atom);
            if (it == cache.end()) it = cache.emplace(fac.atom, f(fac.atom)).first;
            if (it->second) {
                term = term * it->second->pow(fac.exp);
            } else {
                kept.push_back(fac);
            }
        }
        out += term * Expr::from_terms({Term{kept, 1}});
    }
    return out;
}

inline Expr substitute(const Expr& e, const std::map<JetCoordinate, Expr>& values) {
    std::function<std::optional<Expr>(const Atom*)> f = [&](const Atom* a) -> std::optional<Expr> {
        if (a->kind == Atom::Kind::coord) {
            auto it = values.find(a->coord);
            if (it != values.end()) return it->second;
            return std::nullopt;
        }
        if (a->kind == Atom::Kind::func) {
            Expr arg = substitute(a->arg, values);
            if (arg == a->arg) return std::nullopt;
            return Expr::func(a->fn, arg);
        }
        for (const auto& c : a->deps)
            if (values.count(c)) throw std::invalid_argument("cannot substitute into an opaque atom's arguments");
        return std::nullopt;
    };
    return map_atoms(e, f);
}

// Replaces every derivative atom of the opaque function `name` by the
// corresponding derivative of `body`, which is written over the slots.
inline Expr instantiate_opaque(const Expr& e, const std::string& name, const Expr& body) {
    std::function<std::optional<Expr>(const Atom*)> f = [&](const Atom* a) -> std::optional<Expr> {
        if (a->kind == Atom::Kind::opaque && a->name == name) {
            Expr r = body;
            for (std::size_t k = 0; k < a->slots.size(); ++k)
                for (int c = 0; c < a->counts[k]; ++c) r = r.partial(a->slots[k]);
            return r;
        }
        if (a->kind == Atom::Kind::func && a->has_opaque) return Expr::func(a->fn, instantiate_opaque(a->arg, name, body));
        return std::nullopt;
    };
    return map_atoms(e, f);
}

struct Assignment {
    std::map<JetCoordinate, Rational> coords;
    std::map<std::string, Rational> params;
    std::map<std::string, Expr> opaque;  // polynomial instantiations over slot coordinates
};

namespace detail {

inline Expr resolve_opaque(const Expr& e, const Assignment& a) {
    Expr r = e;
    for (const auto& [name, body] : a.opaque) r = instantiate_opaque(r, name, body);
    if (r.has_opaque()) throw std::invalid_argument("opaque atom without a registered instantiation");
    return r;
}

inline Rational rational_pow(const Rational& v, int e) {
    if (e < 0) {
        if (v == 0) throw std::domain_error("division by zero in evaluation");
        return rational_pow(Rational(1) / v, -e);
    }
    Rational r = 1;
    for (int k = 0; k < e; ++k) r *= v;
    return r;
}

inline Rational atom_value_exact(const Atom* a, const Assignment& as) {
    if (a->kind == Atom::Kind::param) {
        auto it = as.params.find(a->name);
        if (it == as.params.end()) throw std::invalid_argument("missing assignment for parameter " + a->name);
        return it->second;
    }
    if (a->kind == Atom::Kind::coord) {
        auto it = as.coords.find(a->coord);
        if (it == as.coords.end()) throw std::invalid_argument("missing assignment for a coordinate");
        return it->second;
    }
    throw std::invalid_argument("non-evaluable atom");
}

}  // namespace detail

inline Rational eval_exact(const Expr& e0, const Assignment& as) {
    Expr e = e0.has_opaque() ? detail::resolve_opaque(e0, as) : e0;
    if (e.has_elementary()) throw std::invalid_argument("expression is not rational-closed");
    Rational sum = 0;
    for (const auto& t : e.terms()) {
        Rational p = t.coeff;
        for (const auto& f : t.mono) p *= detail::rational_pow(detail::atom_value_exact(f.atom, as), f.exp);
        sum += p;
    }
    return sum;
}

struct FloatValue {
    double value = 0;
    double scale = 0;  // sum of absolute values of the monomial contributions
};

inline FloatValue eval_float(const Expr& e0, const Assignment& as) {
    Expr e = e0.has_opaque() ? detail::resolve_opaque(e0, as) : e0;
    std::function<double(const Atom*)> atom_value = [&](const Atom* a) -> double {
        if (a->kind != Atom::Kind::func) return detail::atom_value_exact(a, as).get_d();
        double x = eval_float(a->arg, as).value;
        switch (a->fn) {
            case Fn::sqrt:
                if (x < 0) throw std::domain_error("sqrt of a negative value");
                return std::sqrt(x);
            case Fn::exp: return std::exp(x);
            case Fn::sin: return std::sin(x);
            case Fn::cos: return std::cos(x);
            case Fn::inv:
                if (x == 0) throw std::domain_error("division by zero in evaluation");
                return 1.0 / x;
        }
        return 0;
    };
    FloatValue out;
    for (const auto& t : e.terms()) {
        double p = t.coeff.get_d();
        for (const auto& f : t.mono) {
            double v = atom_value(f.atom);
            if (v == 0 && f.exp < 0) throw std::domain_error("division by zero in evaluation");
            p *= std::pow(v, f.exp);
        }
        out.value += p;
        out.scale += std::abs(p);
    }
    return out;
}

inline std::variant<Rational, double> eval_at(const Expr& e, const Assignment& as) {
    Expr r = e.has_opaque() ? detail::resolve_opaque(e, as) : e;
    if (r.has_elementary()) return eval_float(r, as).value;
    return eval_exact(r, as);
}

}  // namespace varseq
