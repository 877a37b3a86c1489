#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "varseq/varseq.hpp"

namespace fixtures {

using namespace varseq;

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline std::string sample_path(const std::string& name) { return std::string(VARSEQ_SAMPLES_DIR) + "/" + name; }
inline std::string golden_path(const std::string& name) { return std::string(VARSEQ_GOLDEN_DIR) + "/" + name; }
inline ModelFile load_sample(const std::string& name) { return parse_model(read_text(sample_path(name))); }

// ---- random polynomial fixtures ---------------------------------------

class Gen {
public:
    explicit Gen(std::uint64_t seed) : g_(seed) {}
    int pick(int lo, int hi) { return lo + static_cast<int>(g_() % static_cast<std::uint64_t>(hi - lo + 1)); }
    Rational small() {
        long num = pick(1, 9) * (pick(0, 1) ? 1 : -1);
        long den = pick(1, 4);
        Rational r(num, den);
        r.canonicalize();
        return r;
    }

private:
    std::mt19937_64 g_;
};

inline SpacePtr space(int n, int m) {
    std::vector<std::string> base = n == 1 ? std::vector<std::string>{"t"} : std::vector<std::string>{"t", "x"};
    std::vector<std::string> fibre = m == 1 ? std::vector<std::string>{"u"} : std::vector<std::string>{"u", "v"};
    return JetSpace::make(base, fibre);
}

// Sum of `terms` monomials of degree <= `degree` in the coordinates of J^order Y.
inline Expr random_poly(Gen& g, const JetSpace& sp, int order, int terms = 3, int degree = 2) {
    auto coords = sp.enumerate_coordinates(order);
    Expr p;
    for (int k = 0; k < terms; ++k) {
        Expr mono = g.small();
        int d = g.pick(0, degree);
        for (int j = 0; j < d; ++j) mono = mono * Expr::coord(coords[g.pick(0, static_cast<int>(coords.size()) - 1)]);
        p += mono;
    }
    return p;
}

// Polynomial that actually reaches the given order in some fibre coordinate.
inline Expr random_poly_of_order(Gen& g, const JetSpace& sp, int order) {
    Expr p = random_poly(g, sp, order);
    auto top = multiindices_of_length(sp.n(), order);
    const MultiIndex& J = top[g.pick(0, static_cast<int>(top.size()) - 1)];
    Expr lead = g.small() * Expr::fibre(g.pick(1, sp.m()), J);
    lead = lead * Expr::coord(sp.enumerate_coordinates(order)[g.pick(0, static_cast<int>(sp.enumerate_coordinates(order).size()) - 1)]);
    return p + lead;
}

inline std::vector<CovectorAtom> contact_pool(const JetSpace& sp, int max_len) {
    std::vector<CovectorAtom> pool;
    for (const auto& J : multiindices_up_to(sp.n(), max_len))
        for (int s = 1; s <= sp.m(); ++s) pool.push_back(CovectorAtom::contact(s, J));
    return pool;
}

inline Form atom_form(const SpacePtr& sp, const CovectorAtom& a) {
    return a.omega ? Form::contact(sp, a.index, a.J) : Form::dx(sp, a.index);
}

// Term with `h` horizontal and `c` contact factors; the contact factors
// carry multi-indices of length < order.
inline Form random_term(Gen& g, const SpacePtr& sp, int h, int c, int order) {
    const int n = sp->n();
    Form f = Form::scalar(sp, random_poly(g, *sp, order - 1 >= 0 ? order : 0));
    std::vector<int> dx(n);
    for (int i = 0; i < n; ++i) dx[i] = i + 1;
    std::shuffle(dx.begin(), dx.end(), std::mt19937(static_cast<unsigned>(g.pick(0, 1 << 20))));
    for (int k = 0; k < h; ++k) f = wedge(f, Form::dx(sp, dx[k]));
    auto pool = contact_pool(*sp, std::max(order - 1, 0));
    for (int k = 0; k < c; ++k) f = wedge(f, atom_form(sp, pool[g.pick(0, static_cast<int>(pool.size()) - 1)]));
    return f;
}

// Random form of the given degree on J^order Y with mixed contact degrees.
inline Form random_form(Gen& g, const SpacePtr& sp, int degree, int order, int terms = 3) {
    const int n = sp->n();
    Form f(sp, degree, order);
    for (int k = 0; k < terms; ++k) {
        int h = g.pick(std::max(0, degree - 3), std::min(n, degree));
        f = f + random_term(g, sp, h, degree - h, order);
    }
    return lift(f, std::max(order, f.order()));
}

// k-contact (n+k)-form.
inline Form random_k_contact(Gen& g, const SpacePtr& sp, int k, int order, int terms = 3) {
    Form f(sp, sp->n() + k, order);
    for (int j = 0; j < terms; ++j) f = f + random_term(g, sp, sp->n(), k, order);
    return lift(f, std::max(order, f.order()));
}

// (n+k)-form with k+1 contact factors.
inline Form random_strongly_contact(Gen& g, const SpacePtr& sp, int k, int order, int terms = 2) {
    Form f(sp, sp->n() + k, order);
    for (int j = 0; j < terms; ++j) f = f + random_term(g, sp, sp->n() - 1, k + 1, order);
    return lift(f, std::max(order, f.order()));
}

inline Form random_lagrangian(Gen& g, const SpacePtr& sp, int order) {
    return lift(Form::scalar(sp, random_poly_of_order(g, *sp, order)) ^ Form::volume(sp), order);
}

// Projectable field with polynomial components; vertical when asked.
inline ProjectableVectorField random_field(Gen& g, const SpacePtr& sp, bool vertical) {
    std::vector<Expr> xi(sp->n()), Xi(sp->m());
    if (!vertical)
        for (int i = 1; i <= sp->n(); ++i) xi[i - 1] = g.small() + g.small() * Expr::base(g.pick(1, sp->n())) * Expr::base(i);
    for (int s = 1; s <= sp->m(); ++s) Xi[s - 1] = random_poly(g, *sp, 0, 2, 2);
    return ProjectableVectorField(sp, xi, Xi);
}

// ---- mechanics helpers --------------------------------------------------

inline SpacePtr mech_space(int m) {
    if (m == 1) return JetSpace::make({"t"}, {"q"});
    std::vector<std::string> f;
    for (int s = 1; s <= m; ++s) f.push_back("q" + std::to_string(s));
    return JetSpace::make({"t"}, f);
}

inline JetCoordinate qc(int s, int k) { return JetCoordinate::fibre(s, MultiIndex(std::vector<int>(k, 1))); }
inline Form w(const SpacePtr& sp, int s, int k) { return Form::contact(sp, s, MultiIndex(std::vector<int>(k, 1))); }

// (t, q, qd, qdd) slots for every fibre index.
inline std::vector<JetCoordinate> second_order_slots(int m) {
    std::vector<JetCoordinate> slots{JetCoordinate::base(1)};
    for (int k = 0; k <= 2; ++k)
        for (int s = 1; s <= m; ++s) slots.push_back(qc(s, k));
    return slots;
}

inline Expr dt(const Expr& e, int times = 1) {
    Expr r = e;
    for (int k = 0; k < times; ++k) r = r.total_derivative(1);
    return r;
}

struct OpaqueDynamical {
    SpacePtr sp;
    std::vector<Expr> E;  // 1-based
    Form eps;
};

inline OpaqueDynamical opaque_dynamical(int m) {
    OpaqueDynamical d{mech_space(m), std::vector<Expr>(m + 1), Form(mech_space(m), 2, 2)};
    d.eps = Form(d.sp, 2, 2);
    for (int s = 1; s <= m; ++s) {
        d.E[s] = Expr::opaque(m == 1 ? "E" : "E" + std::to_string(s), second_order_slots(m));
        d.eps = d.eps + d.E[s] * (w(d.sp, s, 0) ^ Form::dx(d.sp, 1));
    }
    return d;
}

// Degree-2 Cartan form display:
// eps + 1/2 (dE_s/dqd^v - d_t dE_s/dqdd^v) w^s ^ w^v - dE_s/dqdd^v wd^s ^ w^v
inline Form theta_eps_display(const SpacePtr& sp, const std::vector<Expr>& E, const Form& eps) {
    const int m = sp->m();
    Form th = eps;
    for (int s = 1; s <= m; ++s)
        for (int v = 1; v <= m; ++v)
            th = th + Expr(Rational(1, 2)) * (E[s].partial(qc(v, 1)) - dt(E[s].partial(qc(v, 2)))) * (w(sp, s, 0) ^ w(sp, v, 0)) -
                 E[s].partial(qc(v, 2)) * (w(sp, s, 1) ^ w(sp, v, 0));
    return th;
}

// Canonical Helmholtz form display.
inline Form helmholtz_display(const SpacePtr& sp, const std::vector<Expr>& E) {
    const int m = sp->m();
    const Rational h(1, 2);
    Form H(sp, 3, 4);
    for (int s = 1; s <= m; ++s)
        for (int v = 1; v <= m; ++v) {
            auto P = [&](int a, int b, int k) { return E[a].partial(qc(b, k)); };
            Expr c0 = P(s, v, 0) - P(v, s, 0) - Expr(h) * dt(P(s, v, 1) - P(v, s, 1)) + Expr(h) * dt(P(s, v, 2) - P(v, s, 2), 2);
            Expr c1 = P(s, v, 1) + P(v, s, 1) - 2 * dt(P(v, s, 2));
            Expr c2 = P(s, v, 2) - P(v, s, 2);
            H = H + Expr(h) * ((c0 * w(sp, v, 0) + c1 * w(sp, v, 1) + c2 * w(sp, v, 2)) ^ w(sp, s, 0) ^ Form::dx(sp, 1));
        }
    return H;
}

// Reduced Helmholtz form display and its witness eta.
inline Form reduced_helmholtz_display(const SpacePtr& sp, const std::vector<Expr>& E) {
    const int m = sp->m();
    const Rational h(1, 2);
    Form H(sp, 3, 3);
    for (int s = 1; s <= m; ++s)
        for (int v = 1; v <= m; ++v) {
            auto P = [&](int a, int b, int k) { return E[a].partial(qc(b, k)); };
            Expr c0 = P(s, v, 0) - P(v, s, 0) - Expr(h) * dt(P(s, v, 1) - P(v, s, 1));
            Expr c1 = P(s, v, 1) + P(v, s, 1) - dt(P(s, v, 2) + P(v, s, 2));
            Expr c2 = P(s, v, 2) - P(v, s, 2);
            H = H + Expr(h) * ((c0 * w(sp, v, 0) + c1 * w(sp, v, 1) + c2 * w(sp, v, 2)) ^ w(sp, s, 0) ^ Form::dx(sp, 1));
        }
    return H;
}

inline Form reduced_helmholtz_eta(const SpacePtr& sp, const std::vector<Expr>& E) {
    const int m = sp->m();
    Form eta(sp, 2, 3);
    for (int s = 1; s <= m; ++s)
        for (int v = 1; v <= m; ++v)
            eta = eta - Expr(Rational(1, 4)) * dt(E[s].partial(qc(v, 2)) - E[v].partial(qc(s, 2))) * (w(sp, v, 0) ^ w(sp, s, 0));
    return eta;
}

// 3-contact data: eta = H^a_{sv} w^s ^ w^v_a ^ dt with opaque H, and the
// fully antisymmetric coefficient tensor A of the 3-contact part of d eta,
// alpha = A^{ijk}_{svr} w^s_i ^ w^v_j ^ w^r_k ^ dt.
struct ThreeContact {
    SpacePtr sp;
    Form eta;
    Form alpha;
    std::map<std::array<std::pair<int, int>, 3>, Expr> A;

    Expr get(int i, int j, int k, int s, int v, int r) const {
        auto it = A.find({std::pair{s, i}, std::pair{v, j}, std::pair{r, k}});
        return it == A.end() ? Expr() : it->second;
    }
};

inline ThreeContact three_contact(int m) {
    SpacePtr space = mech_space(m);
    ThreeContact d{space, Form(space, 3, 2), Form(space, 4), {}};
    const auto& sp = d.sp;
    for (int a = 0; a <= 2; ++a)
        for (int s = 1; s <= m; ++s)
            for (int v = 1; v <= m; ++v) {
                Expr H = Expr::opaque("H" + std::to_string(a) + "_" + std::to_string(s) + std::to_string(v), second_order_slots(m));
                d.eta = d.eta + H * (w(sp, s, 0) ^ w(sp, v, a) ^ Form::dx(sp, 1));
            }
    d.alpha = contact_component(exterior_d(d.eta), 3);
    using Slot = std::pair<int, int>;
    const int perm[6][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}, {1, 0, 2}, {0, 2, 1}, {2, 1, 0}};
    for (const auto& t : d.alpha.terms()) {
        // stored as dt ^ a ^ b ^ c = -(a ^ b ^ c ^ dt)
        std::array<Slot, 3> x{Slot{t.atoms[1].index, t.atoms[1].J.size()}, Slot{t.atoms[2].index, t.atoms[2].J.size()},
                              Slot{t.atoms[3].index, t.atoms[3].J.size()}};
        Expr c = Expr(Rational(-1, 6)) * t.coeff;
        for (int p = 0; p < 6; ++p) {
            std::array<Slot, 3> y{x[perm[p][0]], x[perm[p][1]], x[perm[p][2]]};
            d.A[y] = d.A[y] + (p < 3 ? c : -c);
        }
    }
    return d;
}

// Residual display for 3-contact forms in mechanics.
inline Form residual3_display(const ThreeContact& d) {
    const auto& sp = d.sp;
    const int m = sp->m();
    Form R(sp, 3, 5);
    for (int s = 1; s <= m; ++s)
        for (int v = 1; v <= m; ++v)
            for (int r = 1; r <= m; ++r)
                for (int j = 0; j <= 2; ++j)
                    for (int k = 0; k <= 2; ++k) {
                        Expr a1 = d.get(1, j, k, s, v, r), a2 = d.get(2, j, k, s, v, r);
                        R = R - (a1 - dt(a2)) * (w(sp, s, 0) ^ w(sp, v, j) ^ w(sp, r, k)) +
                            2 * a2 * (w(sp, s, 0) ^ w(sp, v, j) ^ w(sp, r, k + 1)) - a2 * (w(sp, s, 1) ^ w(sp, v, j) ^ w(sp, r, k));
                    }
    return R;
}

// Degree-3 Cartan form display.
inline Form theta_eta_display(const ThreeContact& d) {
    const auto& sp = d.sp;
    const int m = sp->m();
    const Rational h(1, 2);
    Form th = d.eta;
    for (int s = 1; s <= m; ++s)
        for (int v = 1; v <= m; ++v)
            for (int r = 1; r <= m; ++r) {
                auto A = [&](int i, int j, int k) { return d.get(i, j, k, s, v, r); };
                auto W = [&](int a, int b, int c) { return w(sp, s, a) ^ w(sp, v, b) ^ w(sp, r, c); };
                th = th + (A(1, 0, 0) - dt(A(2, 0, 0))) * W(0, 0, 0) +
                     2 * (A(1, 0, 1) - A(2, 0, 0) + Expr(h) * A(0, 0, 2) - dt(A(2, 0, 1))) * W(0, 0, 1) +
                     2 * (A(1, 0, 2) - A(2, 0, 1) - dt(A(2, 0, 2))) * W(0, 0, 2) - 2 * A(2, 0, 2) * W(0, 0, 3) +
                     2 * (A(0, 2, 1) - A(2, 1, 0)) * W(0, 1, 1) + 2 * (A(0, 2, 2) - A(2, 0, 2)) * W(0, 1, 2);
            }
    return th;
}

// ---- independent oracles ------------------------------------------------

// Residual of a 1-contact 2-form in mechanics (n = 1, m = 1) by solving for
// undetermined polynomial coefficients C_j of R = sum_j C_j w_j.  Uses only
// the structure equation p_1 d(C w_j) = -(d_t C) w_j ^ dt - C w_{j+1} ^ dt and
// Gaussian elimination over the rationals; the source part is the displayed
// sum_j (-1)^j d_t^j A_j.
struct ResidualOracle {
    Form source;
    Form residual;
    bool solved = false;
};

inline std::vector<Expr> monomial_basis(const std::vector<JetCoordinate>& vars, int degree) {
    std::vector<Expr> out{Expr(1)};
    std::vector<Expr> layer{Expr(1)};
    std::vector<std::size_t> start{0};
    for (int d = 1; d <= degree; ++d) {
        std::vector<Expr> next;
        std::vector<std::size_t> nstart;
        for (std::size_t k = 0; k < layer.size(); ++k)
            for (std::size_t v = start[k]; v < vars.size(); ++v) {
                next.push_back(layer[k] * Expr::coord(vars[v]));
                nstart.push_back(v);
            }
        out.insert(out.end(), next.begin(), next.end());
        layer = std::move(next);
        start = std::move(nstart);
    }
    return out;
}

inline ResidualOracle residual_oracle(const SpacePtr& sp, const std::vector<Expr>& A, int degree) {
    const int N = static_cast<int>(A.size()) - 1;  // rho = sum_{j<=N} A_j w_j ^ dt
    ResidualOracle out{Form(sp, 2), Form(sp, 1), false};
    Form dtf = Form::dx(sp, 1);
    Expr src;
    for (int j = 0; j <= N; ++j) src += (j % 2 ? Expr(-1) : Expr(1)) * dt(A[j], j);
    out.source = src * (w(sp, 1, 0) ^ dtf);

    int order = 0;
    for (const auto& a : A) order = std::max(order, a.order());
    order += N;
    std::vector<JetCoordinate> vars = sp->enumerate_coordinates(order);
    std::vector<Expr> basis = monomial_basis(vars, degree);
    const int nc = N;  // unknown coefficient functions C_0 .. C_{N-1}
    const std::size_t nb = basis.size();
    // target: coefficient of w_j ^ dt in p_1 rho - I(rho), for j = 0..N
    std::vector<Expr> target(N + 1);
    for (int j = 0; j <= N; ++j) target[j] = A[j];
    target[0] = target[0] - src;
    // image of each unknown: p_1 d(b w_c) = -(d_t b) w_c ^ dt - b w_{c+1} ^ dt
    struct Column {
        std::vector<Expr> comp;
    };
    std::vector<Column> cols;
    for (int c = 0; c < nc; ++c)
        for (const auto& b : basis) {
            Column col{std::vector<Expr>(N + 1)};
            col.comp[c] = -dt(b);
            col.comp[c + 1] = -b;
            cols.push_back(std::move(col));
        }
    // rows: (component j, monomial) pairs
    std::map<std::pair<int, std::string>, int> row_of;
    std::vector<Expr> monos;
    auto key = [&](const Expr& mono) {
        std::ostringstream s;
        s << render_text(mono, *sp);
        return s.str();
    };
    auto row_index = [&](int j, const Expr& mono) {
        auto k = std::make_pair(j, key(mono));
        auto it = row_of.find(k);
        if (it != row_of.end()) return it->second;
        int idx = static_cast<int>(row_of.size());
        row_of.emplace(k, idx);
        return idx;
    };
    auto split = [&](const Expr& e) {
        std::vector<std::pair<Expr, Rational>> r;
        for (const auto& t : e.terms()) r.push_back({Expr::from_terms({Term{t.mono, Rational(1)}}), t.coeff});
        return r;
    };
    std::vector<std::map<int, Rational>> colv(cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c)
        for (int j = 0; j <= N; ++j)
            for (const auto& [mono, q] : split(cols[c].comp[j])) colv[c][row_index(j, mono)] += q;
    std::map<int, Rational> rhs;
    for (int j = 0; j <= N; ++j)
        for (const auto& [mono, q] : split(target[j])) rhs[row_index(j, mono)] += q;
    const int rows = static_cast<int>(row_of.size());
    const int ncols = static_cast<int>(cols.size());
    std::vector<std::vector<Rational>> M(rows, std::vector<Rational>(ncols + 1));
    for (int c = 0; c < ncols; ++c)
        for (const auto& [r, q] : colv[c]) M[r][c] = q;
    for (const auto& [r, q] : rhs) M[r][ncols] = q;
    std::vector<int> pivot_col;
    int r = 0;
    for (int c = 0; c < ncols && r < rows; ++c) {
        int p = r;
        while (p < rows && M[p][c] == 0) ++p;
        if (p == rows) continue;
        std::swap(M[p], M[r]);
        Rational inv = 1 / M[r][c];
        for (int k = c; k <= ncols; ++k) M[r][k] *= inv;
        for (int i = 0; i < rows; ++i)
            if (i != r && M[i][c] != 0) {
                Rational f = M[i][c];
                for (int k = c; k <= ncols; ++k) M[i][k] -= f * M[r][k];
            }
        pivot_col.push_back(c);
        ++r;
    }
    for (int i = r; i < rows; ++i)
        if (M[i][ncols] != 0) return out;
    std::vector<Rational> x(ncols);
    for (int i = 0; i < r; ++i) x[pivot_col[i]] = M[i][ncols];
    Form R(sp, 1);
    for (int c = 0; c < nc; ++c) {
        Expr C;
        for (std::size_t b = 0; b < nb; ++b) C += Expr(x[c * nb + b]) * basis[b];
        R = R + C * w(sp, 1, c);
    }
    out.residual = R;
    out.solved = true;
    return out;
}

// Random polynomial section s^sigma(x) of degree 3.
inline std::vector<Expr> random_section(Gen& g, const JetSpace& sp) {
    std::vector<Expr> s(sp.m());
    for (int k = 0; k < sp.m(); ++k) {
        Expr p = g.small();
        for (int i = 1; i <= sp.n(); ++i) {
            Expr x = Expr::base(i);
            p += g.small() * x + g.small() * x * x + g.small() * x * x * x;
        }
        if (sp.n() == 2) p += g.small() * Expr::base(1) * Expr::base(2);
        s[k] = p;
    }
    return s;
}

// Value of e along the r-jet of the section at the base point x.
inline double along_section(const JetSpace& sp, const Expr& e, const std::vector<Expr>& s, const std::vector<double>& x, int order) {
    std::map<JetCoordinate, Expr> values;
    for (const auto& c : sp.enumerate_coordinates(order)) {
        if (c.is_base()) continue;
        Expr v = s[c.index - 1];
        for (int k = 0; k < c.J.size(); ++k) v = v.partial(JetCoordinate::base(c.J[k]));
        values[c] = v;
    }
    Expr composed = substitute(e, values);
    Assignment a;
    for (int i = 1; i <= sp.n(); ++i) {
        mpq_class q(x[i - 1]);
        a.coords[JetCoordinate::base(i)] = q;
    }
    return eval_float(composed, a).value;
}

}  // namespace fixtures
