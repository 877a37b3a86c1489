#pragma once

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "varseq/dsl.hpp"
#include "varseq/probe.hpp"

namespace varseq::cli {

// Exit codes.
inline constexpr int exit_ok = 0;
inline constexpr int exit_parse = 1;
inline constexpr int exit_precondition = 2;
inline constexpr int exit_internal = 3;

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> names = {
        "el",    "helmholtz", "helmholtz-reduced", "cartan", "lepage-check", "lepage",         "tonti",    "trivial",
        "noether", "first-variation", "lie",        "class-eq", "probe",     "interior-euler", "residual"};
    return names;
}

struct Options {
    std::string command;
    std::string model_path;
    std::vector<std::string> forms;
    std::string field;
    std::string format = "text";
    std::uint64_t seed = 1;
    int trials = 20;
    std::optional<int> order;
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Output {
    std::string type;  // form | forms | boolean | verdict
    std::vector<std::pair<std::string, Form>> forms;
    std::optional<bool> value;
    std::string value_name = "value";
    std::optional<ProbeVerdict> verdict;
    int trials = 0;
};

namespace detail {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open model file '" + path + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline std::vector<const NamedForm*> select_forms(const ModelFile& m, const Options& o, std::size_t count) {
    std::vector<const NamedForm*> out;
    if (o.forms.empty()) {
        if (m.forms.size() != count)
            throw UsageError("command '" + o.command + "' takes " + std::to_string(count) + " form(s); name them with --form");
        for (const auto& f : m.forms) out.push_back(&f);
        return out;
    }
    if (o.forms.size() != count)
        throw UsageError("command '" + o.command + "' takes " + std::to_string(count) + " form(s)");
    for (const auto& name : o.forms) {
        const NamedForm* f = m.find_form(name);
        if (!f) throw UsageError("no form named '" + name + "'");
        out.push_back(f);
    }
    return out;
}

inline const NamedField& select_field(const ModelFile& m, const Options& o) {
    if (o.field.empty()) {
        if (m.fields.size() != 1) throw UsageError("command '" + o.command + "' needs a vector field; name it with --field");
        return m.fields.front();
    }
    const NamedField* f = m.find_field(o.field);
    if (!f) throw UsageError("no field named '" + o.field + "'");
    return *f;
}

inline Form input_form(const NamedForm& f, const Options& o) {
    if (!o.order || o.command == "lie") return f.form;
    if (*o.order < f.form.order())
        throw PreconditionError("--order " + std::to_string(*o.order) + " is below the order of form '" + f.name + "'");
    return lift(f.form, *o.order);
}

inline bool is_lagrangian(const Form& f) { return f.degree() == f.jet().n() && is_horizontal(f); }

inline Output single(Form f) {
    Output r;
    r.type = "form";
    r.forms.emplace_back("result", std::move(f));
    return r;
}

inline Output dispatch(const ModelFile& m, const Options& o) {
    const std::string& c = o.command;
    auto one = [&] { return input_form(*select_forms(m, o, 1).front(), o); };
    if (c == "el") return single(euler_lagrange(one()));
    if (c == "helmholtz") return single(helmholtz(one()));
    if (c == "interior-euler") return single(interior_euler(one()));
    if (c == "residual") return single(residual(one()));
    if (c == "cartan") return single(cartan_form(one()));
    if (c == "tonti") return single(tonti_lagrangian(one()));
    if (c == "lepage") {
        Form s = one();
        if (!is_lagrangian(s) && !is_source_form(s))
            throw PreconditionError("Lepage equivalent needs a Lagrangian or a source form");
        return single(lepage_equivalent(s));
    }
    if (c == "helmholtz-reduced") {
        auto h = reduced_helmholtz_mechanics(one());
        Output r;
        r.type = "forms";
        r.forms = {{"reduced", h.reduced}, {"canonical", h.canonical}, {"eta", h.eta}};
        return r;
    }
    if (c == "lepage-check") {
        Output r;
        r.type = "boolean";
        r.value = is_lepage(one());
        return r;
    }
    if (c == "trivial") {
        auto t = is_variationally_trivial(one());
        Output r;
        r.type = "boolean";
        r.value = t.trivial;
        if (t.primitive) r.forms.emplace_back("primitive", *t.primitive);
        return r;
    }
    if (c == "noether") {
        Form rho = one();
        const auto& X = select_field(m, o).field;
        if (is_lagrangian(rho)) rho = cartan_form(rho);
        auto cur = noether_current(rho, X);
        Output r;
        r.type = "forms";
        r.forms = {{"current", cur.horizontal}, {"contraction", cur.full}};
        return r;
    }
    if (c == "first-variation") {
        auto fv = first_variation_split(one(), select_field(m, o).field);
        Output r;
        r.type = "forms";
        r.forms = {{"euler", fv.euler_term}, {"boundary", fv.boundary}, {"current", fv.current}, {"lie", fv.lie}};
        if (fv.sums == Tribool::unknown) throw PreconditionError("first variation sum could not be decided exactly");
        r.value = fv.sums == Tribool::yes;
        r.value_name = "sums";
        return r;
    }
    if (c == "lie") {
        Form rho = one();
        const auto& X = select_field(m, o).field;
        int r = o.order ? *o.order : std::max(rho.order(), 1);
        return single(lie_derivative(prolong(X, r), rho));
    }
    if (c == "class-eq" || c == "probe") {
        auto fs = select_forms(m, o, 2);
        Form a = input_form(*fs[0], o), b = input_form(*fs[1], o);
        if (a.degree() != b.degree()) throw PreconditionError("forms of different degree");
        Output r;
        if (c == "class-eq") {
            r.type = "boolean";
            r.value = classes_equal(a, b);
            return r;
        }
        ProbeConfig cfg;
        cfg.seed = o.seed;
        cfg.trials = o.trials;
        r.type = "verdict";
        r.trials = o.trials;
        r.verdict = forms_equal_probabilistic(a, b, cfg);
        return r;
    }
    throw UsageError("unknown command '" + c + "'");
}

inline std::string rational_text(const Rational& q) { return q.get_str(); }

inline nlohmann::json witness_json(const Assignment& a, const JetSpace& sp) {
    nlohmann::json w = nlohmann::json::object();
    for (const auto& [c, v] : a.coords) w[sp.coordinate_name(c)] = rational_text(v);
    for (const auto& [p, v] : a.params) w[p] = rational_text(v);
    for (const auto& [name, poly] : a.opaque) w[name] = render_text(poly, sp);
    return w;
}

inline std::string witness_text(const Assignment& a, const JetSpace& sp) {
    std::vector<std::string> parts;
    for (const auto& [c, v] : a.coords) parts.push_back(sp.coordinate_name(c) + "=" + rational_text(v));
    for (const auto& [p, v] : a.params) parts.push_back(p + "=" + rational_text(v));
    for (const auto& [name, poly] : a.opaque) parts.push_back(name + "=" + render_text(poly, sp));
    return varseq::detail::join(parts, ", ");
}

inline void emit_plain(const Output& r, const JetSpace& sp, bool latex, std::ostream& out) {
    auto show = [&](const Form& f) { return latex ? render_latex(f) : render_text(f); };
    if (r.type == "form") {
        out << show(r.forms.front().second) << "\n";
        return;
    }
    if (r.type == "verdict") {
        const auto& v = *r.verdict;
        out << verdict_name(v.kind) << "\n";
        if (v.kind == ProbeVerdict::Kind::unequal) {
            out << "witness (seed " << v.seed << ", trial " << v.trial << "): " << witness_text(*v.witness, sp) << "\n";
            out << "left: " << v.left << "\nright: " << v.right << "\n";
        } else if (v.kind == ProbeVerdict::Kind::unknown) {
            out << "valid trials: " << v.valid_trials << " of " << r.trials << "\n";
        }
        return;
    }
    if (r.type == "boolean") out << (*r.value ? "true" : "false") << "\n";
    for (const auto& [name, f] : r.forms) out << name << ": " << show(f) << "\n";
    if (r.type == "forms" && r.value) out << r.value_name << ": " << (*r.value ? "true" : "false") << "\n";
}

inline nlohmann::json result_json(const Output& r, const JetSpace& sp) {
    nlohmann::json j;
    j["type"] = r.type;
    if (r.type == "form") {
        j["form"] = form_json(r.forms.front().second);
        return j;
    }
    if (r.type == "verdict") {
        const auto& v = *r.verdict;
        j["verdict"] = verdict_name(v.kind);
        j["seed"] = v.seed;
        j["trials"] = r.trials;
        j["valid_trials"] = v.valid_trials;
        if (v.kind == ProbeVerdict::Kind::unequal) {
            j["trial"] = v.trial;
            j["witness"] = witness_json(*v.witness, sp);
            j["left"] = v.left;
            j["right"] = v.right;
        }
        return j;
    }
    if (r.value) j[r.value_name] = *r.value;
    nlohmann::json forms = nlohmann::json::array();
    for (const auto& [name, f] : r.forms) forms.push_back({{"name", name}, {"form", form_json(f)}});
    if (r.type == "forms" || !r.forms.empty()) j["forms"] = forms;
    return j;
}

inline nlohmann::json envelope(const Options& o) {
    nlohmann::json j;
    j["command"] = o.command;
    j["model"] = std::filesystem::path(o.model_path).filename().string();
    return j;
}

}  // namespace detail

// Runs one command on an already loaded model text.
inline int run(const Options& o, const std::string& text, std::ostream& out, std::ostream& err) {
    const bool json = o.format == "json";
    nlohmann::json env = detail::envelope(o);
    auto fail = [&](int code, const std::string& kind, const std::string& msg, std::optional<Location> at) {
        if (json) {
            env["status"] = "error";
            nlohmann::json e = {{"kind", kind}, {"message", msg}};
            if (at) {
                e["line"] = at->line;
                e["column"] = at->column;
            }
            env["error"] = e;
            out << env.dump(2) << "\n";
        }
        err << "error: " << (at ? o.model_path + ":" + std::to_string(at->line) + ":" + std::to_string(at->column) + ": " : "")
            << msg << "\n";
        return code;
    };
    ModelFile m;
    try {
        m = parse_model(text);
    } catch (const ParseError& e) {
        return fail(exit_parse, "parse", e.message(), e.where());
    }
    nlohmann::json warnings = nlohmann::json::array();
    for (const auto& w : m.warnings) {
        err << "warning: " << o.model_path << ":" << w.at.line << ":" << w.at.column << ": " << w.message << "\n";
        warnings.push_back({{"line", w.at.line}, {"column", w.at.column}, {"message", w.message}});
    }
    env["warnings"] = warnings;
    Output r;
    try {
        r = detail::dispatch(m, o);
    } catch (const UsageError& e) {
        return fail(exit_parse, "usage", e.what(), std::nullopt);
    } catch (const PreconditionError& e) {
        return fail(exit_precondition, "precondition", e.what(), std::nullopt);
    } catch (const std::invalid_argument& e) {
        return fail(exit_precondition, "precondition", e.what(), std::nullopt);
    } catch (const std::domain_error& e) {
        return fail(exit_precondition, "precondition", e.what(), std::nullopt);
    } catch (const std::exception& e) {
        return fail(exit_internal, "internal", e.what(), std::nullopt);
    }
    if (json) {
        env["status"] = "ok";
        env["result"] = detail::result_json(r, *m.space);
        out << env.dump(2) << "\n";
    } else {
        detail::emit_plain(r, *m.space, o.format == "latex", out);
    }
    return exit_ok;
}

// Full command line entry point.
inline int main(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"varseq: variational calculus on jet bundles"};
    Options o;
    app.add_option("command", o.command, "operation to run")->required()->check(CLI::IsMember(commands()));
    app.add_option("model", o.model_path, "model file (.jv)")->required();
    app.add_option("--form", o.forms, "form name; repeat for two-form commands");
    app.add_option("--field", o.field, "vector field name");
    app.add_option("--format", o.format, "output format")->check(CLI::IsMember({"text", "latex", "json"}));
    app.add_option("--seed", o.seed, "probe seed");
    app.add_option("--probe-trials", o.trials, "probe trials")->check(CLI::PositiveNumber);
    app.add_option("--order", o.order, "lift order of the input forms, or prolongation order for lie")
        ->check(CLI::NonNegativeNumber);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_parse;
    }
    std::string text;
    try {
        text = detail::read_file(o.model_path);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return exit_parse;
    }
    return run(o, text, out, err);
}

}  // namespace varseq::cli
