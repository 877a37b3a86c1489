#pragma once

#include <cctype>
#include <string>
#include <vector>

#include <json.hpp>

#include "varseq/forms.hpp"

namespace varseq {

namespace detail {

inline std::string join(const std::vector<std::string>& v, const std::string& sep) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) out += sep;
        out += v[k];
    }
    return out;
}

inline std::string int_str(const mpz_class& z) { return z.get_str(); }

}  // namespace detail

// ---- text -------------------------------------------------------------

inline std::string render_text(const Expr& e, const JetSpace& sp);

inline std::string atom_text(const Atom* a, const JetSpace& sp) {
    switch (a->kind) {
        case Atom::Kind::param: return a->name;
        case Atom::Kind::coord: return sp.coordinate_name(a->coord);
        case Atom::Kind::opaque: {
            std::vector<std::string> d;
            for (std::size_t k = 0; k < a->slots.size(); ++k)
                for (int c = 0; c < a->counts[k]; ++c) d.push_back(sp.coordinate_name(a->slots[k]));
            return d.empty() ? a->name : a->name + "[" + detail::join(d, ",") + "]";
        }
        case Atom::Kind::func: return std::string(fn_name(a->fn)) + "(" + render_text(a->arg, sp) + ")";
    }
    return {};
}

namespace detail {

inline std::string power_text(const std::string& base, int e) { return e == 1 ? base : base + "^" + std::to_string(e); }

// |term| as a product; parameters and the numeric numerator lead, then the
// denominator, then the remaining factors.
inline std::string term_text(const Term& t, const JetSpace& sp) {
    Rational c = abs(t.coeff);
    std::vector<std::string> lead, den, rest;
    if (c.get_num() != 1) lead.push_back(int_str(c.get_num()));
    if (c.get_den() != 1) den.push_back(int_str(c.get_den()));
    for (const auto& f : t.mono) {
        const Atom* a = f.atom;
        if (a->kind == Atom::Kind::func && a->fn == Fn::inv) {
            std::string b = "(" + render_text(a->arg, sp) + ")";
            (f.exp > 0 ? den : rest).push_back(power_text(b, std::abs(f.exp)));
            continue;
        }
        std::string s = power_text(atom_text(a, sp), std::abs(f.exp));
        if (f.exp < 0) den.push_back(s);
        else if (a->kind == Atom::Kind::param) lead.push_back(s);
        else rest.push_back(s);
    }
    std::string out;
    if (den.empty()) {
        lead.insert(lead.end(), rest.begin(), rest.end());
        return lead.empty() ? "1" : join(lead, "*");
    }
    out = lead.empty() ? "1" : join(lead, "*");
    out += "/";
    out += den.size() == 1 ? den[0] : "(" + join(den, "*") + ")";
    for (const auto& r : rest) out += "*" + r;
    return out;
}

}  // namespace detail

inline std::string render_text(const Expr& e, const JetSpace& sp) {
    if (e.is_zero()) return "0";
    std::string out;
    bool first = true;
    for (const auto& t : e.terms()) {
        bool neg = t.coeff < 0;
        if (first) out += neg ? "-" : "";
        else out += neg ? " - " : " + ";
        out += detail::term_text(t, sp);
        first = false;
    }
    return out;
}

inline std::string covector_text(const CovectorAtom& a, const JetSpace& sp) {
    if (!a.omega) return "d" + sp.base_names().at(a.index - 1);
    std::string s = "w(" + sp.fibre_names().at(a.index - 1);
    if (!a.J.empty()) {
        std::vector<std::string> names;
        for (int k = 0; k < a.J.size(); ++k) names.push_back(sp.base_names().at(a.J[k] - 1));
        s += ",[" + detail::join(names, ",") + "]";
    }
    return s + ")";
}

namespace detail {

// Contact factors first, then base differentials; returns the sign of the
// reordering.
inline int display_atoms(const AtomList& atoms, AtomList& out) {
    int p = 0, q = 0;
    out.clear();
    for (const auto& a : atoms)
        if (a.omega) out.push_back(a), ++q;
    for (const auto& a : atoms)
        if (!a.omega) out.push_back(a), ++p;
    return (p * q) % 2 ? -1 : 1;
}

}  // namespace detail

inline std::string render_text(const Form& f) {
    const JetSpace& sp = f.jet();
    if (f.is_zero()) return "0";
    if (f.degree() == 0) return render_text(f.terms().front().coeff, sp);
    std::string out;
    bool first = true;
    for (const auto& t : f.terms()) {
        AtomList atoms;
        Expr c = detail::display_atoms(t.atoms, atoms) < 0 ? -t.coeff : t.coeff;
        std::vector<std::string> names;
        for (const auto& a : atoms) names.push_back(covector_text(a, sp));
        std::string wedge = detail::join(names, "^");
        if (c.is_monomial()) {
            const Term& term = c.terms().front();
            bool neg = term.coeff < 0;
            if (first) out += neg ? "-" : "";
            else out += neg ? " - " : " + ";
            std::string body = detail::term_text(term, sp);
            out += body == "1" ? wedge : body + " " + wedge;
        } else {
            if (!first) out += " + ";
            out += "(" + render_text(c, sp) + ") " + wedge;
        }
        first = false;
    }
    return out;
}

// ---- LaTeX ------------------------------------------------------------

namespace detail {

inline bool is_greek(const std::string& s) {
    static const char* names[] = {"alpha", "beta",  "gamma", "delta", "epsilon", "zeta",  "eta",   "theta",
                                  "iota",  "kappa", "lambda", "mu",   "nu",      "xi",    "pi",    "rho",
                                  "sigma", "tau",   "upsilon", "phi", "chi",     "psi",   "omega", "hbar",
                                  "Gamma", "Delta", "Theta", "Lambda", "Xi",     "Pi",    "Sigma", "Phi",
                                  "Psi",   "Omega"};
    for (const char* n : names)
        if (s == n) return true;
    return false;
}

inline std::string latex_ident(const std::string& name) {
    std::size_t cut = name.size();
    while (cut > 0 && std::isdigit(static_cast<unsigned char>(name[cut - 1]))) --cut;
    std::string head = name.substr(0, cut), digits = name.substr(cut);
    if (head.empty()) return name;
    std::string h = is_greek(head) ? "\\" + head : (head.size() > 1 ? "\\mathrm{" + head + "}" : head);
    return digits.empty() ? h : h + "_{" + digits + "}";
}

}  // namespace detail

inline std::string coordinate_latex(const JetCoordinate& c, const JetSpace& sp) {
    if (c.is_base()) return detail::latex_ident(sp.base_names().at(c.index - 1));
    std::string y = detail::latex_ident(sp.fibre_names().at(c.index - 1));
    int k = c.J.size();
    if (k == 0) return y;
    if (sp.n() == 1) {
        if (k == 1) return "\\dot{" + y + "}";
        if (k == 2) return "\\ddot{" + y + "}";
        if (k == 3) return "\\dddot{" + y + "}";
        return y + "^{(" + std::to_string(k) + ")}";
    }
    std::string sub;
    for (int j = 0; j < k; ++j) sub += detail::latex_ident(sp.base_names().at(c.J[j] - 1));
    return "{" + y + "}_{" + sub + "}";
}

inline std::string render_latex(const Expr& e, const JetSpace& sp);

inline std::string atom_latex(const Atom* a, const JetSpace& sp) {
    switch (a->kind) {
        case Atom::Kind::param: return detail::latex_ident(a->name);
        case Atom::Kind::coord: return coordinate_latex(a->coord, sp);
        case Atom::Kind::opaque: {
            std::string d;
            for (std::size_t k = 0; k < a->slots.size(); ++k)
                for (int c = 0; c < a->counts[k]; ++c) d += "\\partial_{" + coordinate_latex(a->slots[k], sp) + "}";
            return d.empty() ? detail::latex_ident(a->name) : d + " " + detail::latex_ident(a->name);
        }
        case Atom::Kind::func:
            if (a->fn == Fn::sqrt) return "\\sqrt{" + render_latex(a->arg, sp) + "}";
            if (a->fn == Fn::inv) return "\\frac{1}{" + render_latex(a->arg, sp) + "}";
            return "\\" + std::string(fn_name(a->fn)) + "\\left(" + render_latex(a->arg, sp) + "\\right)";
    }
    return {};
}

namespace detail {

inline std::string power_latex(const std::string& base, int e, bool wrap) {
    if (e == 1) return base;
    return (wrap ? "\\left(" + base + "\\right)" : "{" + base + "}") + "^{" + std::to_string(e) + "}";
}

inline std::string term_latex(const Term& t, const JetSpace& sp) {
    Rational c = abs(t.coeff);
    std::vector<std::string> num, den;
    if (c.get_num() != 1) num.push_back(int_str(c.get_num()));
    if (c.get_den() != 1) den.push_back(int_str(c.get_den()));
    for (const auto& f : t.mono) {
        const Atom* a = f.atom;
        if (a->kind == Atom::Kind::func && a->fn == Fn::inv) {
            std::string b = render_latex(a->arg, sp);
            (f.exp > 0 ? den : num).push_back(power_latex(b, std::abs(f.exp), true));
            continue;
        }
        bool wrap = a->kind == Atom::Kind::opaque;
        (f.exp < 0 ? den : num).push_back(power_latex(atom_latex(a, sp), std::abs(f.exp), wrap));
    }
    std::string n = num.empty() ? "1" : join(num, " ");
    if (den.empty()) return n;
    return "\\frac{" + n + "}{" + join(den, " ") + "}";
}

}  // namespace detail

inline std::string render_latex(const Expr& e, const JetSpace& sp) {
    if (e.is_zero()) return "0";
    std::string out;
    bool first = true;
    for (const auto& t : e.terms()) {
        bool neg = t.coeff < 0;
        if (first) out += neg ? "-" : "";
        else out += neg ? " - " : " + ";
        out += detail::term_latex(t, sp);
        first = false;
    }
    return out;
}

inline std::string covector_latex(const CovectorAtom& a, const JetSpace& sp) {
    if (!a.omega) return "\\mathrm{d}" + detail::latex_ident(sp.base_names().at(a.index - 1));
    std::string s = "\\omega^{" + detail::latex_ident(sp.fibre_names().at(a.index - 1)) + "}";
    if (!a.J.empty()) {
        std::string sub;
        for (int k = 0; k < a.J.size(); ++k) sub += detail::latex_ident(sp.base_names().at(a.J[k] - 1));
        s += "_{" + sub + "}";
    }
    return s;
}

inline std::string render_latex(const Form& f) {
    const JetSpace& sp = f.jet();
    if (f.is_zero()) return "0";
    if (f.degree() == 0) return render_latex(f.terms().front().coeff, sp);
    std::string out;
    bool first = true;
    for (const auto& t : f.terms()) {
        AtomList atoms;
        Expr c = detail::display_atoms(t.atoms, atoms) < 0 ? -t.coeff : t.coeff;
        std::vector<std::string> names;
        for (const auto& a : atoms) names.push_back(covector_latex(a, sp));
        std::string wedge = detail::join(names, " \\wedge ");
        if (c.is_monomial()) {
            const Term& term = c.terms().front();
            bool neg = term.coeff < 0;
            if (first) out += neg ? "-" : "";
            else out += neg ? " - " : " + ";
            std::string body = detail::term_latex(term, sp);
            out += body == "1" ? wedge : body + " \\, " + wedge;
        } else {
            if (!first) out += " + ";
            out += "\\left(" + render_latex(c, sp) + "\\right) " + wedge;
        }
        first = false;
    }
    return out;
}

// ---- JSON -------------------------------------------------------------

inline nlohmann::json expr_json(const Expr& e, const JetSpace& sp);

inline nlohmann::json coordinate_json(const JetCoordinate& c, const JetSpace& sp) {
    nlohmann::json j;
    j["name"] = sp.coordinate_name(c);
    if (c.is_base()) {
        j["kind"] = "base";
        j["index"] = c.index;
    } else {
        j["kind"] = "fibre";
        j["index"] = c.index;
        j["multiindex"] = c.J.entries();
    }
    return j;
}

inline nlohmann::json atom_json(const Atom* a, const JetSpace& sp) {
    nlohmann::json j;
    switch (a->kind) {
        case Atom::Kind::param:
            j["kind"] = "param";
            j["name"] = a->name;
            break;
        case Atom::Kind::coord:
            j = coordinate_json(a->coord, sp);
            j["kind"] = "coordinate";
            j["variable"] = a->coord.is_base() ? "base" : "fibre";
            break;
        case Atom::Kind::opaque: {
            j["kind"] = "opaque";
            j["name"] = a->name;
            nlohmann::json slots = nlohmann::json::array();
            for (const auto& s : a->slots) slots.push_back(sp.coordinate_name(s));
            j["slots"] = slots;
            j["derivatives"] = a->counts;
            break;
        }
        case Atom::Kind::func:
            j["kind"] = "function";
            j["name"] = fn_name(a->fn);
            j["argument"] = expr_json(a->arg, sp);
            break;
    }
    return j;
}

inline nlohmann::json expr_json(const Expr& e, const JetSpace& sp) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : e.terms()) {
        nlohmann::json factors = nlohmann::json::array();
        for (const auto& f : t.mono) factors.push_back({{"atom", atom_json(f.atom, sp)}, {"exponent", f.exp}});
        terms.push_back({{"coefficient", t.coeff.get_str()}, {"factors", factors}});
    }
    return {{"text", render_text(e, sp)}, {"terms", terms}};
}

inline nlohmann::json space_json(const JetSpace& sp) {
    return {{"base", sp.base_names()}, {"fibre", sp.fibre_names()}};
}

inline nlohmann::json covector_json(const CovectorAtom& a, const JetSpace& sp) {
    if (!a.omega) return {{"kind", "dx"}, {"i", a.index}, {"name", covector_text(a, sp)}};
    return {{"kind", "omega"}, {"sigma", a.index}, {"J", a.J.entries()}, {"name", covector_text(a, sp)}};
}

inline nlohmann::json form_json(const Form& f) {
    const JetSpace& sp = f.jet();
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : f.terms()) {
        nlohmann::json cov = nlohmann::json::array();
        for (const auto& a : t.atoms) cov.push_back(covector_json(a, sp));
        terms.push_back({{"coeff", expr_json(t.coeff, sp)}, {"atoms", cov}});
    }
    return {{"degree", f.degree()},
            {"order", f.order()},
            {"space", space_json(sp)},
            {"text", render_text(f)},
            {"latex", render_latex(f)},
            {"terms", terms}};
}

}  // namespace varseq
