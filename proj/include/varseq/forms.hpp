#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "varseq/expr.hpp"
#include "varseq/jet_space.hpp"

namespace varseq {

// dx^i or omega^sigma_J.
struct CovectorAtom {
    bool omega = false;
    int index = 1;
    MultiIndex J;

    static CovectorAtom dx(int i) { return {false, i, {}}; }
    static CovectorAtom contact(int sigma, MultiIndex J = {}) { return {true, sigma, J}; }

    friend bool operator==(const CovectorAtom&, const CovectorAtom&) = default;
};

// Dx before Omega; Dx by index; Omega by sigma, then J lexicographically.
inline int cov_cmp(const CovectorAtom& a, const CovectorAtom& b) {
    if (a.omega != b.omega) return a.omega ? 1 : -1;
    if (a.index != b.index) return a.index < b.index ? -1 : 1;
    if (a.J == b.J) return 0;
    return a.J < b.J ? -1 : 1;
}

using AtomList = std::vector<CovectorAtom>;

inline int atoms_cmp(const AtomList& a, const AtomList& b) {
    for (std::size_t k = 0; k < a.size() && k < b.size(); ++k)
        if (int c = cov_cmp(a[k], b[k])) return c;
    return cmp_int(a.size(), b.size());
}

inline int count_contact(const AtomList& a) {
    int k = 0;
    for (const auto& x : a) k += x.omega;
    return k;
}

// Sorts in place; returns the permutation sign, or 0 on a repeated atom.
inline int normalize_atoms(AtomList& a) {
    int sign = 1;
    for (std::size_t i = 1; i < a.size(); ++i) {
        for (std::size_t j = i; j > 0; --j) {
            int c = cov_cmp(a[j - 1], a[j]);
            if (c == 0) return 0;
            if (c < 0) break;
            std::swap(a[j - 1], a[j]);
            sign = -sign;
        }
    }
    return sign;
}

struct FormTerm {
    AtomList atoms;
    Expr coeff;
};

// A differential form on J^s Y in the basis {dx^i, omega^sigma_J}.
class Form {
public:
    Form(SpacePtr space, int degree, int order = 0) : space_(std::move(space)), degree_(degree), order_(order) {
        if (!space_) throw std::invalid_argument("form without a jet space");
        if (degree < 0) throw std::invalid_argument("negative degree");
    }

    static Form from_terms(SpacePtr space, int degree, int order, std::vector<FormTerm> terms) {
        Form f(std::move(space), degree, order);
        for (auto& t : terms) {
            if (static_cast<int>(t.atoms.size()) != degree) throw std::logic_error("term degree mismatch");
            int s = normalize_atoms(t.atoms);
            if (s == 0 || t.coeff.is_zero()) {
                t.coeff = Expr();
                continue;
            }
            if (s < 0) t.coeff = -t.coeff;
        }
        std::erase_if(terms, [](const FormTerm& t) { return t.coeff.is_zero(); });
        std::sort(terms.begin(), terms.end(),
                  [](const FormTerm& a, const FormTerm& b) { return atoms_cmp(a.atoms, b.atoms) < 0; });
        for (auto& t : terms) {
            if (!f.terms_.empty() && atoms_cmp(f.terms_.back().atoms, t.atoms) == 0) {
                f.terms_.back().coeff += t.coeff;
            } else {
                if (!f.terms_.empty() && f.terms_.back().coeff.is_zero()) f.terms_.pop_back();
                f.terms_.push_back(std::move(t));
            }
        }
        if (!f.terms_.empty() && f.terms_.back().coeff.is_zero()) f.terms_.pop_back();
        f.order_ = std::max(f.order_, f.required_order());
        return f;
    }

    static Form scalar(SpacePtr space, const Expr& f, int order = 0) {
        return from_terms(std::move(space), 0, order, {FormTerm{{}, f}});
    }
    static Form dx(SpacePtr space, int i) {
        check_base(*space, i);
        return from_terms(std::move(space), 1, 0, {FormTerm{{CovectorAtom::dx(i)}, Expr(1)}});
    }
    static Form contact(SpacePtr space, int sigma, MultiIndex J = {}) {
        check_fibre(*space, sigma);
        return from_terms(std::move(space), 1, 0, {FormTerm{{CovectorAtom::contact(sigma, J)}, Expr(1)}});
    }
    // dy^sigma_J = omega^sigma_J + y^sigma_{Jj} dx^j
    static Form dy(SpacePtr space, int sigma, MultiIndex J = {}) {
        check_fibre(*space, sigma);
        std::vector<FormTerm> t{{{CovectorAtom::contact(sigma, J)}, Expr(1)}};
        for (int j = 1; j <= space->n(); ++j) t.push_back({{CovectorAtom::dx(j)}, Expr::fibre(sigma, J.append(j))});
        return from_terms(space, 1, 0, std::move(t));
    }
    // omega_0 = dx^1 ^ ... ^ dx^n
    static Form volume(SpacePtr space) {
        AtomList a;
        for (int i = 1; i <= space->n(); ++i) a.push_back(CovectorAtom::dx(i));
        int n = space->n();
        return from_terms(std::move(space), n, 0, {FormTerm{a, Expr(1)}});
    }
    // omega_i = d/dx^i -| omega_0
    static Form volume_i(SpacePtr space, int i) {
        check_base(*space, i);
        AtomList a;
        for (int j = 1; j <= space->n(); ++j)
            if (j != i) a.push_back(CovectorAtom::dx(j));
        Expr c = (i % 2 == 1) ? Expr(1) : Expr(-1);
        int n = space->n();
        return from_terms(std::move(space), n - 1, 0, {FormTerm{a, c}});
    }

    const SpacePtr& space() const { return space_; }
    const JetSpace& jet() const { return *space_; }
    int degree() const { return degree_; }
    int order() const { return order_; }
    const std::vector<FormTerm>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    int required_order() const {
        int r = 0;
        for (const auto& t : terms_) {
            r = std::max(r, t.coeff.order());
            for (const auto& a : t.atoms)
                if (a.omega) r = std::max(r, a.J.size() + 1);
        }
        return r;
    }

    // Smallest and largest number of contact factors over the terms.
    std::pair<int, int> contact_range() const {
        if (terms_.empty()) return {0, 0};
        int lo = degree_, hi = 0;
        for (const auto& t : terms_) {
            int k = count_contact(t.atoms);
            lo = std::min(lo, k);
            hi = std::max(hi, k);
        }
        return {lo, hi};
    }

    bool has_elementary() const {
        for (const auto& t : terms_)
            if (t.coeff.has_elementary()) return true;
        return false;
    }

    Form with_order(int s) const {
        Form f = *this;
        f.order_ = s;
        return f;
    }

    static void check_base(const JetSpace& sp, int i) {
        if (i < 1 || i > sp.n()) throw std::out_of_range("base index out of range");
    }
    static void check_fibre(const JetSpace& sp, int s) {
        if (s < 1 || s > sp.m()) throw std::out_of_range("fibre index out of range");
    }

private:
    SpacePtr space_;
    int degree_;
    int order_;
    std::vector<FormTerm> terms_;
};

inline void check_compatible(const Form& a, const Form& b) {
    if (a.space() != b.space() && !(*a.space() == *b.space())) throw std::invalid_argument("forms on different jet spaces");
}

inline Form operator+(const Form& a, const Form& b) {
    check_compatible(a, b);
    if (a.degree() != b.degree()) throw std::invalid_argument("cannot add forms of different degree");
    std::vector<FormTerm> t = a.terms();
    t.insert(t.end(), b.terms().begin(), b.terms().end());
    return Form::from_terms(a.space(), a.degree(), std::max(a.order(), b.order()), std::move(t));
}

inline Form operator*(const Expr& c, const Form& a) {
    std::vector<FormTerm> t = a.terms();
    for (auto& x : t) x.coeff = c * x.coeff;
    return Form::from_terms(a.space(), a.degree(), a.order(), std::move(t));
}

inline Form operator-(const Form& a) { return Expr(-1) * a; }
inline Form operator-(const Form& a, const Form& b) { return a + (-b); }

inline Form wedge(const Form& a, const Form& b) {
    check_compatible(a, b);
    std::vector<FormTerm> t;
    t.reserve(a.terms().size() * b.terms().size());
    for (const auto& x : a.terms()) {
        for (const auto& y : b.terms()) {
            AtomList l = x.atoms;
            l.insert(l.end(), y.atoms.begin(), y.atoms.end());
            t.push_back({std::move(l), x.coeff * y.coeff});
        }
    }
    return Form::from_terms(a.space(), a.degree() + b.degree(), std::max(a.order(), b.order()), std::move(t));
}

inline Form operator^(const Form& a, const Form& b) { return wedge(a, b); }

inline Form lift(const Form& rho, int s) {
    if (s < rho.order()) throw std::invalid_argument("cannot lift to a lower order");
    return rho.with_order(s);
}

inline Form zero_form(const SpacePtr& sp, int degree, int order = 0) { return Form(sp, degree, order); }

inline bool operator==(const Form& a, const Form& b) { return a.degree() == b.degree() && (a - b).is_zero(); }

inline Tribool forms_equal(const Form& a, const Form& b) {
    Form d = a - b;
    if (d.is_zero()) return Tribool::yes;
    return d.has_elementary() ? Tribool::unknown : Tribool::no;
}

// Builds a form from terms written over {dx^i, dy^sigma_J}; dy entries are
// rewritten in the contact basis.
struct CoordinateCovector {
    bool dy = false;
    int index = 1;
    MultiIndex J;
};
struct CoordinateTerm {
    Expr coeff;
    std::vector<CoordinateCovector> factors;
};

inline Form ingest_coordinate_basis(const SpacePtr& sp, int degree, const std::vector<CoordinateTerm>& terms, int r) {
    Form out(sp, degree, r);
    for (const auto& t : terms) {
        if (static_cast<int>(t.factors.size()) != degree) throw std::invalid_argument("term degree mismatch");
        if (t.coeff.order() > r) throw std::invalid_argument("coefficient exceeds the declared order");
        Form f = Form::scalar(sp, t.coeff);
        for (const auto& c : t.factors) {
            if (c.dy && c.J.size() > r) throw std::invalid_argument("dy^sigma_J with |J| > r");
            f = wedge(f, c.dy ? Form::dy(sp, c.index, c.J) : Form::dx(sp, c.index));
        }
        out = out + f;
    }
    return out;
}

inline Form contact_component(const Form& rho, int k) {
    std::vector<FormTerm> t;
    for (const auto& x : rho.terms())
        if (count_contact(x.atoms) == k) t.push_back(x);
    return Form::from_terms(rho.space(), rho.degree(), rho.order(), std::move(t));
}

inline Form horizontal(const Form& rho) { return contact_component(rho, 0); }

inline Form exterior_d(const Form& rho) {
    const int n = rho.jet().n();
    std::vector<FormTerm> out;
    for (const auto& t : rho.terms()) {
        for (int i = 1; i <= n; ++i) {
            Expr g = t.coeff.total_derivative(i);
            if (g.is_zero()) continue;
            AtomList l{CovectorAtom::dx(i)};
            l.insert(l.end(), t.atoms.begin(), t.atoms.end());
            out.push_back({std::move(l), g});
        }
        for (const auto& c : t.coeff.dependencies()) {
            if (!c.is_fibre()) continue;
            Expr g = t.coeff.partial(c);
            if (g.is_zero()) continue;
            AtomList l{CovectorAtom::contact(c.index, c.J)};
            l.insert(l.end(), t.atoms.begin(), t.atoms.end());
            out.push_back({std::move(l), g});
        }
        // d omega_J = dx^l ^ omega_{Jl}
        for (std::size_t j = 0; j < t.atoms.size(); ++j) {
            const auto& a = t.atoms[j];
            if (!a.omega) continue;
            Expr c = (j % 2 == 0) ? t.coeff : -t.coeff;
            for (int l = 1; l <= n; ++l) {
                AtomList x(t.atoms.begin(), t.atoms.begin() + static_cast<long>(j));
                x.push_back(CovectorAtom::dx(l));
                x.push_back(CovectorAtom::contact(a.index, a.J.append(l)));
                x.insert(x.end(), t.atoms.begin() + static_cast<long>(j) + 1, t.atoms.end());
                out.push_back({std::move(x), c});
            }
        }
    }
    return Form::from_terms(rho.space(), rho.degree() + 1, rho.order() + 1, std::move(out));
}

inline Form d_H(const Form& rho) {
    auto [lo, hi] = rho.contact_range();
    Form out(rho.space(), rho.degree() + 1, rho.order() + 1);
    for (int k = lo; k <= hi; ++k) out = out + contact_component(exterior_d(contact_component(rho, k)), k);
    return out;
}

inline Form d_V(const Form& rho) {
    auto [lo, hi] = rho.contact_range();
    Form out(rho.space(), rho.degree() + 1, rho.order() + 1);
    for (int k = lo; k <= hi; ++k) out = out + contact_component(exterior_d(contact_component(rho, k)), k + 1);
    return out;
}

// The total derivative d_i acting on forms as a derivation: coefficients are
// differentiated, omega_J becomes omega_{Ji}, dx is annihilated.
inline Form total_derivative(const Form& rho, int i) {
    std::vector<FormTerm> out;
    for (const auto& t : rho.terms()) {
        Expr g = t.coeff.total_derivative(i);
        if (!g.is_zero()) out.push_back({t.atoms, g});
        for (std::size_t j = 0; j < t.atoms.size(); ++j) {
            if (!t.atoms[j].omega) continue;
            AtomList l = t.atoms;
            l[j].J = l[j].J.append(i);
            out.push_back({std::move(l), t.coeff});
        }
    }
    return Form::from_terms(rho.space(), rho.degree(), rho.order() + 1, std::move(out));
}

inline Form total_derivative(const Form& rho, const MultiIndex& J) {
    Form r = rho;
    for (int k = 0; k < J.size(); ++k) r = total_derivative(r, J[k]);
    return r;
}

// A vector field along the projection, written in the frame dual to
// {dx^i, omega^sigma_J}: horizontal part h^i d_i, vertical part
// v^sigma_J d/dy^sigma_J.  When `order` is set, components beyond it are
// undefined rather than zero.
struct FrameField {
    std::vector<Expr> horizontal;
    std::map<std::pair<int, MultiIndex>, Expr> vertical;
    std::optional<int> order;

    static FrameField vertical_basis(int sigma, MultiIndex J = {}) {
        FrameField f;
        f.vertical[{sigma, J}] = Expr(1);
        return f;
    }
    static FrameField total(int n, int i) {
        FrameField f;
        f.horizontal.assign(n, Expr());
        f.horizontal.at(i - 1) = Expr(1);
        return f;
    }

    Expr pair(const CovectorAtom& a) const {
        if (!a.omega) return a.index <= static_cast<int>(horizontal.size()) ? horizontal[a.index - 1] : Expr();
        if (order && a.J.size() > *order) throw std::invalid_argument("field order below the form's contact order");
        auto it = vertical.find({a.index, a.J});
        return it == vertical.end() ? Expr() : it->second;
    }

    bool is_vertical() const {
        for (const auto& h : horizontal)
            if (!h.is_zero()) return false;
        return true;
    }
};

inline Form contract(const FrameField& X, const Form& rho) {
    if (rho.degree() == 0) return Form(rho.space(), 0, rho.order());
    std::vector<FormTerm> out;
    for (const auto& t : rho.terms()) {
        for (std::size_t j = 0; j < t.atoms.size(); ++j) {
            Expr v = X.pair(t.atoms[j]);
            if (v.is_zero()) continue;
            AtomList l = t.atoms;
            l.erase(l.begin() + static_cast<long>(j));
            out.push_back({std::move(l), (j % 2 == 0) ? v * t.coeff : -(v * t.coeff)});
        }
    }
    return Form::from_terms(rho.space(), rho.degree() - 1, rho.order(), std::move(out));
}

inline bool is_strongly_contact(const Form& rho) {
    int n = rho.jet().n();
    if (rho.degree() <= n) throw std::invalid_argument("strong contactness needs degree > n");
    return contact_component(rho, rho.degree() - n).is_zero();
}

}  // namespace varseq
