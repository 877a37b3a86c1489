#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

#include "varseq/forms.hpp"

namespace varseq {

struct ProbeConfig {
    std::uint64_t seed = 1;
    int trials = 20;
    int bound = 100;
    double tolerance = 1e-9;

    void validate() const {
        if (trials < 1) throw std::invalid_argument("probe needs at least one trial");
        if (bound < 1) throw std::invalid_argument("probe bound must be positive");
    }
};

namespace detail {

// Raw mt19937_64 output only: its sequence is fixed by the standard, unlike
// the distribution adaptors.
class ProbeRng {
public:
    ProbeRng(std::uint64_t seed, std::uint64_t stream) : g_(seed * 0x9E3779B97F4A7C15ULL ^ (stream + 0x632BE59BD9B4E019ULL)) {}

    long long uniform(long long lo, long long hi) {
        auto span = static_cast<std::uint64_t>(hi - lo + 1);
        return lo + static_cast<long long>(g_() % span);
    }
    Rational nonzero(int bound) {
        long long num = uniform(1, bound);
        if (g_() & 1) num = -num;
        long long den = uniform(1, bound);
        Rational r(static_cast<long>(num), static_cast<long>(den));
        r.canonicalize();
        return r;
    }

private:
    std::mt19937_64 g_;
};

inline void collect_atoms(const Expr& e, std::set<JetCoordinate>& coords, std::set<std::string>& params,
                          std::map<std::string, std::vector<JetCoordinate>>& opaque) {
    for (const Atom* a : e.atoms()) {
        switch (a->kind) {
            case Atom::Kind::param: params.insert(a->name); break;
            case Atom::Kind::coord: coords.insert(a->coord); break;
            case Atom::Kind::opaque:
                opaque.emplace(a->name, a->slots);
                for (const auto& s : a->slots) coords.insert(s);
                break;
            case Atom::Kind::func: collect_atoms(a->arg, coords, params, opaque); break;
        }
    }
}

// Random cubic polynomial in the slot coordinates, used to instantiate an
// opaque function during probing.
inline Expr random_polynomial(ProbeRng& rng, const std::vector<JetCoordinate>& slots, int bound) {
    Expr p = rng.nonzero(bound);
    for (const auto& s : slots) {
        Expr x = Expr::coord(s);
        p += rng.nonzero(bound) * x + rng.nonzero(bound) * x * x + rng.nonzero(bound) * x * x * x;
    }
    for (std::size_t a = 0; a < slots.size(); ++a)
        for (std::size_t b = a + 1; b < slots.size(); ++b)
            p += rng.nonzero(bound) * Expr::coord(slots[a]) * Expr::coord(slots[b]);
    return p;
}

}  // namespace detail

// Nonzero random rationals for every coordinate of J^order Y and every
// listed parameter; deterministic in (seed, stream).
inline Assignment random_assignment(const JetSpace& sp, int order, const ProbeConfig& cfg,
                                    const std::vector<std::string>& params = {}, std::uint64_t stream = 0) {
    cfg.validate();
    detail::ProbeRng rng(cfg.seed, stream);
    Assignment a;
    for (const auto& c : sp.enumerate_coordinates(order)) a.coords[c] = rng.nonzero(cfg.bound);
    for (const auto& p : params) a.params[p] = rng.nonzero(cfg.bound);
    return a;
}

struct ProbeVerdict {
    enum class Kind { equal, unequal, unknown } kind = Kind::unknown;
    std::optional<Assignment> witness;
    std::uint64_t seed = 0;
    int trial = -1;
    std::string left;   // values of the first differing coefficient, when unequal
    std::string right;
    int valid_trials = 0;
};

inline const char* verdict_name(ProbeVerdict::Kind k) {
    switch (k) {
        case ProbeVerdict::Kind::equal: return "equal";
        case ProbeVerdict::Kind::unequal: return "unequal";
        case ProbeVerdict::Kind::unknown: return "unknown";
    }
    return "unknown";
}

namespace detail {

struct ProbePair {
    Expr a, b;
};

inline ProbeVerdict probe_pairs(const JetSpace& sp, const std::vector<ProbePair>& pairs, const ProbeConfig& cfg) {
    cfg.validate();
    ProbeVerdict v;
    v.seed = cfg.seed;
    std::set<JetCoordinate> coords;
    std::set<std::string> params;
    std::map<std::string, std::vector<JetCoordinate>> opaque;
    int order = 0;
    bool differs = false;
    for (const auto& p : pairs) {
        if (!(p.a - p.b).is_zero()) differs = true;
        collect_atoms(p.a, coords, params, opaque);
        collect_atoms(p.b, coords, params, opaque);
    }
    if (!differs) {
        v.kind = ProbeVerdict::Kind::equal;
        return v;
    }
    for (const auto& c : coords) order = std::max(order, c.order());
    std::vector<std::string> plist(params.begin(), params.end());
    const int max_attempts = 10 * cfg.trials;
    for (int attempt = 0; attempt < max_attempts && v.valid_trials < cfg.trials; ++attempt) {
        Assignment as = random_assignment(sp, order, cfg, plist, static_cast<std::uint64_t>(attempt));
        ProbeRng rng(cfg.seed, 0x10000ULL + static_cast<std::uint64_t>(attempt));
        for (const auto& [name, slots] : opaque) as.opaque[name] = random_polynomial(rng, slots, 9);
        try {
            for (const auto& p : pairs) {
                Expr d = p.a - p.b;
                if (d.is_zero()) continue;
                bool floating = d.has_elementary() || resolve_opaque(d, as).has_elementary();
                if (!floating) {
                    Rational x = eval_exact(p.a, as), y = eval_exact(p.b, as);
                    if (x != y) {
                        v.kind = ProbeVerdict::Kind::unequal;
                        v.left = x.get_str();
                        v.right = y.get_str();
                    }
                } else {
                    FloatValue x = eval_float(p.a, as), y = eval_float(p.b, as);
                    double scale = std::max({x.scale, y.scale, 1.0});
                    if (!std::isfinite(x.value) || !std::isfinite(y.value)) throw std::domain_error("non-finite value");
                    if (std::abs(x.value - y.value) > cfg.tolerance * scale) {
                        v.kind = ProbeVerdict::Kind::unequal;
                        v.left = std::to_string(x.value);
                        v.right = std::to_string(y.value);
                    }
                }
                if (v.kind == ProbeVerdict::Kind::unequal) {
                    v.witness = as;
                    v.trial = attempt;
                    return v;
                }
            }
            ++v.valid_trials;
        } catch (const std::domain_error&) {
            continue;
        }
    }
    v.kind = v.valid_trials >= cfg.trials ? ProbeVerdict::Kind::equal : ProbeVerdict::Kind::unknown;
    return v;
}

}  // namespace detail

inline ProbeVerdict exprs_equal_probabilistic(const JetSpace& sp, const Expr& a, const Expr& b, const ProbeConfig& cfg = {}) {
    return detail::probe_pairs(sp, {{a, b}}, cfg);
}

// Compares the forms coefficient by coefficient in the canonical basis.
inline ProbeVerdict forms_equal_probabilistic(const Form& a, const Form& b, const ProbeConfig& cfg = {}) {
    check_compatible(a, b);
    if (a.degree() != b.degree()) throw std::invalid_argument("forms of different degree");
    std::vector<detail::ProbePair> pairs;
    const auto& ta = a.terms();
    const auto& tb = b.terms();
    std::size_t i = 0, j = 0;
    while (i < ta.size() || j < tb.size()) {
        int c = i == ta.size() ? 1 : (j == tb.size() ? -1 : atoms_cmp(ta[i].atoms, tb[j].atoms));
        if (c == 0) pairs.push_back({ta[i++].coeff, tb[j++].coeff});
        else if (c < 0) pairs.push_back({ta[i++].coeff, Expr()});
        else pairs.push_back({Expr(), tb[j++].coeff});
    }
    return detail::probe_pairs(a.jet(), pairs, cfg);
}

// Exact when possible, probe otherwise.
inline bool forms_agree(const Form& a, const Form& b, const ProbeConfig& cfg = {}) {
    Tribool t = forms_equal(a, b);
    if (t != Tribool::unknown) return t == Tribool::yes;
    return forms_equal_probabilistic(a, b, cfg).kind == ProbeVerdict::Kind::equal;
}

}  // namespace varseq
