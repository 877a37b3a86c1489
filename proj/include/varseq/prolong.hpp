#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "varseq/variational.hpp"

namespace varseq {

// xi^i(x) d/dx^i + Xi^sigma d/dy^sigma.  A generalized field lets Xi depend
// on jet coordinates; xi stays base-only either way.
struct ProjectableVectorField {
    SpacePtr space;
    std::vector<Expr> xi;
    std::vector<Expr> Xi;
    bool generalized = false;

    ProjectableVectorField(SpacePtr sp, std::vector<Expr> base, std::vector<Expr> fibre, bool gen = false)
        : space(std::move(sp)), xi(std::move(base)), Xi(std::move(fibre)), generalized(gen) {
        if (static_cast<int>(xi.size()) != space->n() || static_cast<int>(Xi.size()) != space->m())
            throw std::invalid_argument("vector field component count does not match the jet space");
        for (const auto& e : xi)
            for (const auto& c : e.dependencies())
                if (!c.is_base()) throw PreconditionError("base components must depend on base coordinates only");
        if (!generalized)
            for (const auto& e : Xi)
                if (e.order() > 0) throw PreconditionError("fibre components of a projectable field live on Y");
    }

    static ProjectableVectorField vertical(SpacePtr sp, std::vector<Expr> fibre, bool gen = false) {
        std::vector<Expr> base(sp->n());
        return ProjectableVectorField(std::move(sp), std::move(base), std::move(fibre), gen);
    }

    bool is_vertical() const {
        for (const auto& e : xi)
            if (!e.is_zero()) return false;
        return true;
    }
};

struct ProlongedVectorField {
    SpacePtr space;
    int order = 0;
    std::vector<Expr> xi;
    std::map<std::pair<int, MultiIndex>, Expr> Xi;

    const Expr& component(int sigma, const MultiIndex& J) const { return Xi.at({sigma, J}); }

    // Vertical components in the contact frame: Xi^sigma_J - y^sigma_{Ji} xi^i.
    Expr vertical_component(int sigma, const MultiIndex& J) const {
        Expr v = component(sigma, J);
        for (int i = 1; i <= space->n(); ++i)
            if (!xi[i - 1].is_zero()) v -= Expr::fibre(sigma, J.append(i)) * xi[i - 1];
        return v;
    }

    FrameField horizontal_part() const {
        FrameField f;
        f.horizontal = xi;
        f.order = order;
        return f;
    }
    FrameField vertical_part() const {
        FrameField f;
        f.horizontal.assign(space->n(), Expr());
        for (const auto& [key, value] : Xi) {
            Expr v = vertical_component(key.first, key.second);
            if (!v.is_zero()) f.vertical[key] = v;
        }
        f.order = order;
        return f;
    }
    FrameField frame() const {
        FrameField f = vertical_part();
        f.horizontal = xi;
        return f;
    }
};

// Xi^sigma_{Ji} = d_i Xi^sigma_J - y^sigma_{Jl} d xi^l / dx^i, built along the
// last index of each multi-index.
inline ProlongedVectorField prolong(const ProjectableVectorField& X, int r) {
    if (r < 0) throw std::invalid_argument("negative prolongation order");
    const auto& sp = X.space;
    const int n = sp->n();
    ProlongedVectorField P;
    P.space = sp;
    P.order = r;
    P.xi = X.xi;
    std::vector<std::vector<Expr>> dxi(n + 1, std::vector<Expr>(n + 1));
    for (int l = 1; l <= n; ++l)
        for (int i = 1; i <= n; ++i) dxi[l][i] = X.xi[l - 1].partial(JetCoordinate::base(i));
    for (int s = 1; s <= sp->m(); ++s) {
        P.Xi[{s, MultiIndex()}] = X.Xi[s - 1];
        for (int k = 1; k <= r; ++k) {
            for (const auto& M : multiindices_of_length(n, k)) {
                int i = M.last();
                MultiIndex J = M.remove(i);
                Expr v = P.Xi.at({s, J}).total_derivative(i);
                for (int l = 1; l <= n; ++l)
                    if (!dxi[l][i].is_zero()) v -= Expr::fibre(s, J.append(l)) * dxi[l][i];
                P.Xi[{s, M}] = v;
            }
        }
    }
    return P;
}

struct HVSplit {
    FrameField horizontal;
    FrameField vertical;
};

inline HVSplit split_HV(const ProlongedVectorField& Z) { return {Z.horizontal_part(), Z.vertical_part()}; }

// Cartan formula Z -| d rho + d(Z -| rho) for a field along the projection.
inline Form lie_derivative(const FrameField& Z, const Form& rho) {
    return contract(Z, exterior_d(rho)) + exterior_d(contract(Z, rho));
}

inline Form lie_derivative(const ProlongedVectorField& Z, const Form& rho) {
    if (Z.order < rho.order()) throw PreconditionError("prolongation order below the carrier order of the form");
    return lie_derivative(Z.frame(), rho);
}

struct NoetherCurrent {
    Form full;        // J Xi -| rho
    Form horizontal;  // its horizontal part
};

inline NoetherCurrent noether_current(const Form& rho, const ProjectableVectorField& X) {
    if (!is_lepage(rho)) throw PreconditionError("Noether current needs a Lepage form");
    ProlongedVectorField P = prolong(X, std::max(rho.order(), 1));
    Form full = contract(P.frame(), rho);
    return {full, horizontal(full)};
}

struct FirstVariation {
    Form euler_term;  // J Xi_V -| E_lambda
    Form boundary;    // d_H current
    Form current;     // J Xi_V -| (-R(d lambda)) + J Xi_H -| lambda
    Form lie;         // L_{J Xi} lambda
    Tribool sums = Tribool::unknown;
};

inline FirstVariation first_variation_split(const Form& lambda, const ProjectableVectorField& X) {
    if (lambda.degree() != lambda.jet().n() || !is_horizontal(lambda))
        throw PreconditionError("first variation needs a Lagrangian");
    ProlongedVectorField P = prolong(X, std::max(lambda.order(), 1));
    Form E = euler_lagrange(lambda);
    Form momenta = -residual(exterior_d(lambda), false);
    Form el = contract(P.vertical_part(), E);
    Form current = horizontal(contract(P.vertical_part(), momenta) + contract(P.horizontal_part(), lambda));
    Form boundary = d_H(current);
    Form lie = lie_derivative(P, lambda);
    return {el, boundary, current, lie, forms_equal(el + boundary, lie)};
}

// Noether symmetry of a Lagrangian, or generalized symmetry of a source form
// at class level.
inline Tribool symmetry_check(const ProjectableVectorField& X, const Form& sigma) {
    int n = sigma.jet().n();
    ProlongedVectorField P = prolong(X, std::max(sigma.order(), 1));
    Form L = lie_derivative(P, sigma);
    if (sigma.degree() > n) L = interior_euler(L);
    if (L.is_zero()) return Tribool::yes;
    return L.has_elementary() ? Tribool::unknown : Tribool::no;
}

// I( L_{J Xi} I(rho) - J Xi_V -| I(d I(rho)) - I(d(J Xi_V -| I(rho))) )
inline Form higher_lie_identity_check(const ProjectableVectorField& X, const Form& rho) {
    contact_degree_of(rho);
    Form Ir = interior_euler(rho);
    Form E = interior_euler(exterior_d(Ir));
    int r = std::max({Ir.order(), E.order(), 1});
    ProlongedVectorField P = prolong(X, r);
    FrameField V = P.vertical_part();
    Form lhs = lie_derivative(P, Ir);
    Form a = contract(V, E);
    Form b = interior_euler(exterior_d(contract(V, Ir)));
    return interior_euler(lhs - a - b);
}

// I(L_{Xi_H} rho): the horizontal part acts trivially on classes.
inline Form horizontal_lie_residue(const ProjectableVectorField& X, const Form& rho) {
    contact_degree_of(rho);
    ProlongedVectorField P = prolong(X, std::max(rho.order(), 1));
    return interior_euler(lie_derivative(P.horizontal_part(), rho));
}

// J Xi -| p_i d p_i rho + p_{i-1} d (J Xi -| p_i rho), Xi vertical.
inline Form krbek_identity_check(const ProjectableVectorField& X, const Form& rho, int i) {
    if (!X.is_vertical()) throw PreconditionError("the identity is stated for vertical fields");
    if (i < 1 || i > rho.degree()) throw std::invalid_argument("contact index out of range");
    Form pi = contact_component(rho, i);
    ProlongedVectorField P = prolong(X, rho.order() + 1);
    FrameField Z = P.frame();
    Form lhs = contract(Z, contact_component(exterior_d(pi), i));
    Form rhs = contact_component(exterior_d(contract(Z, pi)), i - 1);
    return lhs + rhs;
}

struct NbhCurrent {
    Form current;                 // horizontal (n-1)-form
    std::map<int, Expr> multiples; // coefficients c^sigma of E_sigma
    Form contraction;             // J Xi_V -| eps = c^sigma E_sigma omega_0
    Tribool closes = Tribool::unknown; // d_H current + contraction = 0
};

// Canonical current of a local Lagrangian corrected by a primitive of
// L_{J Xi} lambda, so that d_H current = -J Xi_V -| eps.
inline NbhCurrent nbh_current(const ProjectableVectorField& X, const Form& eps, std::optional<Form> lambda = std::nullopt) {
    if (!helmholtz(eps).is_zero()) throw PreconditionError("dynamical form is not locally variational");
    Form lam = lambda ? *lambda : tonti_lagrangian(eps);
    if (!(euler_lagrange(lam) - interior_euler(eps)).is_zero())
        throw PreconditionError("the Lagrangian does not produce the dynamical form");
    if (symmetry_check(X, eps) != Tribool::yes) throw PreconditionError("field is not a symmetry of the dynamical form");
    FirstVariation fv = first_variation_split(lam, X);
    Form beta(eps.space(), eps.jet().n() - 1, 0);
    if (!fv.lie.is_zero()) {
        auto t = is_variationally_trivial(fv.lie);
        if (!t.trivial || !t.primitive) throw PreconditionError("no polynomial primitive for the Lie derivative of the Lagrangian");
        beta = *t.primitive;
    }
    Form current = fv.current - beta;
    ProlongedVectorField P = prolong(X, std::max(eps.order(), 1));
    FrameField V = P.vertical_part();
    Form contraction = contract(V, interior_euler(eps));
    std::map<int, Expr> multiples;
    for (int s = 1; s <= eps.jet().m(); ++s) {
        Expr c = V.pair(CovectorAtom::contact(s));
        if (!c.is_zero()) multiples[s] = c;
    }
    Form check = d_H(current) + contraction;
    Tribool closes = check.is_zero() ? Tribool::yes : (check.has_elementary() ? Tribool::unknown : Tribool::no);
    return {current, multiples, contraction, closes};
}

}  // namespace varseq
