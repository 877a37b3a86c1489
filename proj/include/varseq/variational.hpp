#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "varseq/forms.hpp"

namespace varseq {

// Raised when an operation's mathematical precondition does not hold.
struct PreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline int contact_degree_of(const Form& rho) {
    int k = rho.degree() - rho.jet().n();
    if (k < 1) throw PreconditionError("operation needs a form of degree n+k with k >= 1");
    return k;
}

namespace detail {

struct EulerSplit {
    Form canonical;  // I(rho)
    Form residual;   // R(rho)
};

// Integration by parts on p_k rho = omega_0 ^ Psi.  For every sigma the
// contractions P_M = d/dy^sigma_M -| Psi are folded over the trie of sorted
// multi-indices, V_M = P_M - sum_{l >= last(M)} d_l V_{Ml}.  V at the root is
// the canonical part; V_M at an inner node is the boundary current attached to
// omega^sigma_{M minus its last index} in the d_{last(M)} direction.
inline EulerSplit euler_split(const Form& rho) {
    const SpacePtr& sp = rho.space();
    const int n = sp->n();
    const int k = contact_degree_of(rho);
    Form pk = contact_component(rho, k);

    // Psi: drop the leading dx^1..dx^n of every term.
    std::vector<FormTerm> psi_terms;
    for (const auto& t : pk.terms()) psi_terms.push_back({AtomList(t.atoms.begin() + n, t.atoms.end()), t.coeff});
    Form psi = Form::from_terms(sp, k, pk.order(), std::move(psi_terms));

    std::map<int, std::set<MultiIndex>> slots;
    for (const auto& t : psi.terms())
        for (const auto& a : t.atoms)
            if (a.omega) slots[a.index].insert(a.J);

    const Rational inv_k(1, k);
    Form psi_canonical(sp, k, rho.order());
    std::vector<Form> phi(n + 1, Form(sp, k, rho.order()));

    for (const auto& [sigma, Js] : slots) {
        std::map<MultiIndex, Form> V;
        std::set<MultiIndex> nodes;
        for (const auto& J : Js) {
            std::vector<int> e = J.entries();
            for (std::size_t p = 0; p <= e.size(); ++p) nodes.insert(MultiIndex(std::vector<int>(e.begin(), e.begin() + static_cast<long>(p))));
        }
        std::vector<MultiIndex> order(nodes.begin(), nodes.end());
        std::stable_sort(order.begin(), order.end(), [](const MultiIndex& a, const MultiIndex& b) { return a.size() > b.size(); });
        for (const auto& M : order) {
            Form v = Js.count(M) ? contract(FrameField::vertical_basis(sigma, M), psi) : Form(sp, k - 1, psi.order());
            int first = M.empty() ? 1 : M.last();
            for (int l = first; l <= n; ++l) {
                auto it = V.find(M.append(l));
                if (it != V.end()) v = v - total_derivative(it->second, l);
            }
            V.emplace(M, v);
        }
        for (const auto& [M, v] : V) {
            if (v.is_zero()) continue;
            if (M.empty()) {
                psi_canonical = psi_canonical + Expr(inv_k) * wedge(Form::contact(sp, sigma), v);
            } else {
                int i = M.last();
                phi[i] = phi[i] + Expr(inv_k) * wedge(Form::contact(sp, sigma, M.remove(i)), v);
            }
        }
    }

    Form canonical = wedge(Form::volume(sp), psi_canonical);
    Form residual(sp, n + k - 1, rho.order());
    for (int i = 1; i <= n; ++i)
        if (!phi[i].is_zero()) residual = residual + wedge(Form::volume_i(sp, i), phi[i]);
    return {canonical.with_order(std::max(canonical.order(), rho.order())),
            residual.with_order(std::max(residual.order(), rho.order()))};
}

}  // namespace detail

// I(rho) = (1/k) omega^sigma ^ sum_J (-1)^|J| d_J (d/dy^sigma_J -| p_k rho)
inline Form interior_euler(const Form& rho) { return detail::euler_split(rho).canonical; }

// A k-contact (n+k-1)-form with p_k rho = I(rho) + p_k d R(rho).
inline Form residual(const Form& rho, bool verify = true) {
    auto s = detail::euler_split(rho);
    if (verify) {
        int k = contact_degree_of(rho);
        Form lhs = contact_component(rho, k) - s.canonical;
        Form rhs = contact_component(exterior_d(s.residual), k);
        if (!(lhs - rhs).is_zero()) throw std::logic_error("residual identity failed");
    }
    return s.residual;
}

inline bool is_horizontal(const Form& rho) { return rho.contact_range().second == 0; }

// omega^sigma-generated k-contact (n+k)-form whose contact factors of order
// zero are the generators: every term carries at least one omega^sigma with
// empty J and exactly k contact factors.
inline bool is_source_form(const Form& rho) {
    int n = rho.jet().n();
    int k = rho.degree() - n;
    if (k < 1) return false;
    for (const auto& t : rho.terms()) {
        if (count_contact(t.atoms) != k) return false;
        bool gen = false;
        for (const auto& a : t.atoms) gen = gen || (a.omega && a.J.empty());
        if (!gen) return false;
    }
    return true;
}

inline bool is_dynamical_form(const Form& rho) {
    if (rho.degree() != rho.jet().n() + 1) return false;
    for (const auto& t : rho.terms()) {
        int c = 0;
        for (const auto& a : t.atoms)
            if (a.omega) {
                if (!a.J.empty()) return false;
                ++c;
            }
        if (c != 1) return false;
    }
    return true;
}

inline Form euler_lagrange(const Form& lambda) {
    if (lambda.degree() != lambda.jet().n()) throw PreconditionError("a Lagrangian is a horizontal n-form");
    if (!is_horizontal(lambda)) throw PreconditionError("a Lagrangian is a horizontal n-form");
    return interior_euler(exterior_d(lambda));
}

inline Form helmholtz(const Form& eps) {
    if (eps.degree() != eps.jet().n() + 1) throw PreconditionError("Helmholtz form needs a source form with k = 1");
    return interior_euler(exterior_d(eps));
}

// theta = p_k rho - p_{k+1} R(d p_k rho), with k = degree - n.
inline Form cartan_form(const Form& rho) {
    int n = rho.jet().n();
    int k = rho.degree() - n;
    if (k < 0) throw PreconditionError("Cartan form needs degree >= n");
    Form pk = contact_component(rho, k);
    Form r = detail::euler_split(exterior_d(pk)).residual;
    return (pk - contact_component(r, k + 1)).with_order(std::max(pk.order(), r.order()));
}

inline Form lepage_equivalent(const Form& sigma) { return cartan_form(sigma); }

// p_{k+1} d rho = I(d rho)
inline bool is_lepage(const Form& rho) {
    int n = rho.jet().n();
    int k = rho.degree() - n;
    if (k < 0) throw PreconditionError("Lepage condition needs degree >= n");
    Form drho = exterior_d(rho);
    return (contact_component(drho, k + 1) - interior_euler(drho)).is_zero();
}

// R_q: identity at q = 0, h for 0 < q <= n, I for q > n.
inline Form class_representative(const Form& rho) {
    int q = rho.degree();
    int n = rho.jet().n();
    if (q == 0) return rho;
    if (q <= n) return horizontal(rho);
    return interior_euler(rho);
}

inline bool classes_equal(const Form& a, const Form& b) { return class_representative(a - b).is_zero(); }

// E_q on representatives: R_{q+1}(d R_q(rho)).
inline Form variational_morphism(const Form& rho) { return class_representative(exterior_d(class_representative(rho))); }

// Contact homotopy operator: the fibre dilation y -> u y, hooked with the
// radial field sum y^sigma_J d/dy^sigma_J.  A monomial of fibre degree e in a
// term with c contact factors gets the weight 1/(c + e).
inline Form contact_homotopy(const Form& rho) {
    if (rho.degree() == 0) return Form(rho.space(), 0, rho.order());
    std::vector<FormTerm> out;
    for (const auto& t : rho.terms()) {
        int c = count_contact(t.atoms);
        if (c == 0) continue;
        for (const auto& term : t.coeff.terms()) {
            int e = 0;
            for (const auto& f : term.mono) {
                const Atom* a = f.atom;
                if (a->kind == Atom::Kind::coord) {
                    if (a->coord.is_fibre()) {
                        if (f.exp < 0) throw PreconditionError("contact homotopy needs polynomial fibre dependence");
                        e += f.exp;
                    }
                    continue;
                }
                for (const auto& dep : a->deps)
                    if (dep.is_fibre()) throw PreconditionError("contact homotopy needs polynomial fibre dependence");
            }
            Expr mono = Expr::from_terms({Term{term.mono, term.coeff / (c + e)}});
            for (std::size_t j = 0; j < t.atoms.size(); ++j) {
                const auto& a = t.atoms[j];
                if (!a.omega) continue;
                AtomList l = t.atoms;
                l.erase(l.begin() + static_cast<long>(j));
                Expr y = Expr::fibre(a.index, a.J);
                out.push_back({std::move(l), (j % 2 == 0) ? mono * y : -(mono * y)});
            }
        }
    }
    return Form::from_terms(rho.space(), rho.degree() - 1, rho.order(), std::move(out));
}

// The part of rho that survives the dilation at u = 0: horizontal terms whose
// coefficients do not involve fibre coordinates.
inline Form zero_section_part(const Form& rho) {
    std::vector<FormTerm> out;
    const Form h = contact_component(rho, 0);
    for (const auto& t : h.terms()) {
        std::vector<Term> keep;
        for (const auto& term : t.coeff.terms()) {
            bool fibre = false;
            for (const auto& f : term.mono)
                for (const auto& dep : f.atom->deps) fibre = fibre || dep.is_fibre();
            if (!fibre) keep.push_back(term);
        }
        Expr c = Expr::from_terms(std::move(keep));
        if (!c.is_zero()) out.push_back({t.atoms, c});
    }
    return Form::from_terms(rho.space(), rho.degree(), rho.order(), std::move(out));
}

// Radial homotopy on the base for an n-form g(x) omega_0 with polynomial g:
// returns sum_i x^i omega_i scaled per monomial so that d_H of it is g omega_0.
inline Form base_homotopy_top(const Form& beta) {
    const SpacePtr& sp = beta.space();
    const int n = sp->n();
    if (beta.degree() != n) throw std::invalid_argument("base homotopy expects an n-form");
    Form out(sp, n - 1, beta.order());
    for (const auto& t : beta.terms()) {
        for (const auto& term : t.coeff.terms()) {
            int e = 0;
            for (const auto& f : term.mono) {
                const Atom* a = f.atom;
                if (a->kind == Atom::Kind::coord) {
                    if (f.exp < 0) throw PreconditionError("base homotopy needs polynomial coefficients");
                    e += f.exp;
                } else if (!a->deps.empty()) {
                    throw PreconditionError("base homotopy needs polynomial coefficients");
                }
            }
            Expr mono = Expr::from_terms({Term{term.mono, term.coeff / (n + e)}});
            for (int i = 1; i <= n; ++i) out = out + (mono * Expr::base(i)) * Form::volume_i(sp, i);
        }
    }
    return out;
}

struct TrivialityResult {
    bool trivial = false;
    std::optional<Form> primitive;
};

// E_q(sigma) = 0, with a primitive when the coefficients are polynomial.
// For q = n the primitive eta satisfies d_H eta = sigma; for q > n it is
// A(sigma) with E_{q-1}(A sigma) = sigma.
inline TrivialityResult is_variationally_trivial(const Form& sigma) {
    const int n = sigma.jet().n();
    const int q = sigma.degree();
    TrivialityResult res;
    if (q < n) throw PreconditionError("triviality is decided for degree >= n");
    if (q == n) {
        Form lam = horizontal(sigma);
        res.trivial = euler_lagrange(lam).is_zero();
        if (!res.trivial) return res;
        try {
            Form eta = contact_homotopy(cartan_form(lam)) + base_homotopy_top(zero_section_part(lam));
            if (!(d_H(eta) - lam).is_zero()) throw std::logic_error("primitive check failed");
            res.primitive = eta;
        } catch (const PreconditionError&) {
        }
        return res;
    }
    Form canon = interior_euler(sigma);
    res.trivial = interior_euler(exterior_d(canon)).is_zero();
    if (!res.trivial) return res;
    try {
        Form eta = contact_homotopy(canon);
        Form back = (q - 1 == n) ? euler_lagrange(eta) : interior_euler(exterior_d(eta));
        if (!(back - canon).is_zero()) throw std::logic_error("primitive check failed");
        res.primitive = eta;
    } catch (const PreconditionError&) {
    }
    return res;
}

// Tonti-type primitive of a locally variational dynamical form.
inline Form tonti_lagrangian(const Form& eps) {
    if (eps.degree() != eps.jet().n() + 1) throw PreconditionError("Tonti Lagrangian needs a dynamical form");
    if (!helmholtz(eps).is_zero()) throw PreconditionError("dynamical form is not variational");
    return contact_homotopy(interior_euler(eps));
}

// Decomposition rho = omega^sigma ^ eta_sigma by the first generator of each
// term, together with the identities it satisfies.
struct SourceDecomposition {
    int k = 0;
    std::map<int, Form> eta;
    Form identity_residue;   // rho - k I(rho) + (k-1) omega^sigma ^ I(eta_sigma)
    Form difference_residue; // rho - I(rho) - ((k-1)/k) omega^sigma ^ (eta_sigma - I(eta_sigma))
    Form projection_residue; // I(omega^sigma ^ eta_sigma) - I(omega^sigma ^ I(eta_sigma)), k >= 2
};

inline SourceDecomposition source_canonicalize(const Form& rho) {
    if (!is_source_form(rho)) throw PreconditionError("not a source form");
    const SpacePtr& sp = rho.space();
    const int n = sp->n();
    const int k = rho.degree() - n;
    std::map<int, Form> etas;
    std::map<int, std::vector<FormTerm>> pieces;
    for (const auto& t : rho.terms()) {
        std::size_t j = 0;
        while (!(t.atoms[j].omega && t.atoms[j].J.empty())) ++j;
        AtomList l = t.atoms;
        int sigma = l[j].index;
        l.erase(l.begin() + static_cast<long>(j));
        pieces[sigma].push_back({std::move(l), (j % 2 == 0) ? t.coeff : -t.coeff});
    }
    for (auto& [s, v] : pieces) etas.emplace(s, Form::from_terms(sp, rho.degree() - 1, rho.order(), std::move(v)));

    Form I = interior_euler(rho);
    Form gen_eta(sp, rho.degree(), rho.order());
    Form gen_Ieta(sp, rho.degree(), rho.order());
    for (const auto& [s, e] : etas) {
        Form ws = Form::contact(sp, s);
        gen_eta = gen_eta + wedge(ws, e);
        if (k >= 2) gen_Ieta = gen_Ieta + wedge(ws, interior_euler(e));
    }
    if (k == 1) return {k, etas, rho - I, rho - I, Form(sp, rho.degree(), rho.order())};
    return {k, etas, rho - Expr(k) * I + Expr(k - 1) * gen_Ieta,
            rho - I - Expr(Rational(k - 1, k)) * (gen_eta - gen_Ieta),
            interior_euler(gen_eta) - interior_euler(gen_Ieta)};
}

struct ReducedHelmholtz {
    Form reduced;   // bar H
    Form canonical; // H = I(d eps)
    Form eta;       // bar H = H + p_2 d eta
};

// Mechanics only.  Builds bar H and eta from the partial derivatives of the
// components E_sigma and checks bar H - H - p_2 d eta = 0.
inline ReducedHelmholtz reduced_helmholtz_mechanics(const Form& eps) {
    const SpacePtr& sp = eps.space();
    if (sp->n() != 1) throw PreconditionError("reduced Helmholtz form is defined for n = 1");
    if (!is_dynamical_form(eps)) throw PreconditionError("reduced Helmholtz form needs a dynamical form");
    const int m = sp->m();
    std::vector<Expr> E(m + 1);
    Form dt = Form::dx(sp, 1);
    for (const auto& t : eps.terms()) {
        // atoms are (dt, omega^sigma): eps = -E omega^sigma ^ dt
        E[t.atoms[1].index] = E[t.atoms[1].index] - t.coeff;
    }
    for (int s = 1; s <= m; ++s)
        if (E[s].order() > 2)
            throw PreconditionError("reduced Helmholtz form needs a second-order dynamical form");
    auto q = [](int s, int k) { return JetCoordinate::fibre(s, MultiIndex(std::vector<int>(k, 1))); };
    auto w = [&](int s, int k) { return Form::contact(sp, s, MultiIndex(std::vector<int>(k, 1))); };
    const Rational h(1, 2), quarter(1, 4);
    Form reduced(sp, 3, 3);
    Form eta(sp, 2, 3);
    for (int s = 1; s <= m; ++s) {
        for (int v = 1; v <= m; ++v) {
            Expr c0 = E[s].partial(q(v, 0)) - E[v].partial(q(s, 0)) -
                      Expr(h) * (E[s].partial(q(v, 1)) - E[v].partial(q(s, 1))).total_derivative(1);
            Expr c1 = E[s].partial(q(v, 1)) + E[v].partial(q(s, 1)) -
                      (E[s].partial(q(v, 2)) + E[v].partial(q(s, 2))).total_derivative(1);
            Expr c2 = E[s].partial(q(v, 2)) - E[v].partial(q(s, 2));
            Form tail = wedge(w(s, 0), dt);
            reduced = reduced + Expr(h) * wedge(c0 * w(v, 0) + c1 * w(v, 1) + c2 * w(v, 2), tail);
            eta = eta + Expr(-quarter) * c2.total_derivative(1) * wedge(w(v, 0), w(s, 0));
        }
    }
    Form H = helmholtz(eps);
    Form check = reduced - H - contact_component(exterior_d(eta), 2);
    if (!check.is_zero()) throw std::logic_error("reduced Helmholtz relation failed");
    return {reduced, H, eta};
}

}  // namespace varseq
