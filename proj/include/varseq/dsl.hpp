#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "varseq/prolong.hpp"
#include "varseq/render.hpp"

namespace varseq {

struct Location {
    int line = 1;
    int column = 1;
};

class ParseError : public std::runtime_error {
public:
    ParseError(Location at, const std::string& msg)
        : std::runtime_error(std::to_string(at.line) + ":" + std::to_string(at.column) + ": " + msg), at_(at), msg_(msg) {}
    Location where() const { return at_; }
    const std::string& message() const { return msg_; }

private:
    Location at_;
    std::string msg_;
};

struct Diagnostic {
    Location at;
    std::string message;
};

struct OpaqueDecl {
    std::string name;
    std::vector<JetCoordinate> slots;
};

struct NamedForm {
    std::string name;
    int degree = 0;
    int order = 0;
    Form form;
};

struct NamedField {
    std::string name;
    bool generalized = false;
    ProjectableVectorField field;
};

struct ModelFile {
    SpacePtr space;
    std::vector<std::string> params;
    std::vector<OpaqueDecl> opaque;
    std::vector<NamedForm> forms;
    std::vector<NamedField> fields;
    std::vector<Diagnostic> warnings;

    const NamedForm* find_form(const std::string& name) const {
        for (const auto& f : forms)
            if (f.name == name) return &f;
        return nullptr;
    }
    const NamedField* find_field(const std::string& name) const {
        for (const auto& f : fields)
            if (f.name == name) return &f;
        return nullptr;
    }
    const OpaqueDecl* find_opaque(const std::string& name) const {
        for (const auto& o : opaque)
            if (o.name == name) return &o;
        return nullptr;
    }
};

inline bool operator==(const ModelFile& a, const ModelFile& b) {
    if (!(*a.space == *b.space) || a.params != b.params) return false;
    if (a.opaque.size() != b.opaque.size() || a.forms.size() != b.forms.size() || a.fields.size() != b.fields.size())
        return false;
    for (std::size_t k = 0; k < a.opaque.size(); ++k)
        if (a.opaque[k].name != b.opaque[k].name || a.opaque[k].slots != b.opaque[k].slots) return false;
    for (std::size_t k = 0; k < a.forms.size(); ++k) {
        const auto &x = a.forms[k], &y = b.forms[k];
        if (x.name != y.name || x.degree != y.degree || x.order != y.order || x.form.order() != y.form.order()) return false;
        if (!(x.form == y.form)) return false;
    }
    for (std::size_t k = 0; k < a.fields.size(); ++k) {
        const auto &x = a.fields[k], &y = b.fields[k];
        if (x.name != y.name || x.generalized != y.generalized) return false;
        for (std::size_t i = 0; i < x.field.xi.size(); ++i)
            if (!(x.field.xi[i] == y.field.xi[i])) return false;
        for (std::size_t s = 0; s < x.field.Xi.size(); ++s)
            if (!(x.field.Xi[s] == y.field.Xi[s])) return false;
    }
    return true;
}

namespace detail {

struct Token {
    enum class Kind { ident, number, punct, end } kind = Kind::end;
    std::string text;
    Location at;
};

inline std::vector<Token> tokenize(const std::string& src) {
    std::vector<Token> out;
    Location at;
    std::size_t i = 0;
    auto advance = [&](std::size_t k) {
        for (std::size_t j = 0; j < k; ++j, ++i) {
            if (src[i] == '\n') {
                ++at.line;
                at.column = 1;
            } else {
                ++at.column;
            }
        }
    };
    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
        } else if (c == '#' || (c == '/' && i + 1 < src.size() && src[i + 1] == '/')) {
            while (i < src.size() && src[i] != '\n') advance(1);
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
            out.push_back({Token::Kind::ident, src.substr(i, j - i), at});
            advance(j - i);
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            if (j + 1 < src.size() && src[j] == '.' && std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
                ++j;
                while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            }
            out.push_back({Token::Kind::number, src.substr(i, j - i), at});
            advance(j - i);
        } else if (c == '*' && i + 1 < src.size() && src[i + 1] == '*') {
            out.push_back({Token::Kind::punct, "**", at});
            advance(2);
        } else if (std::string("{}()[];:,=+-*/^").find(c) != std::string::npos) {
            out.push_back({Token::Kind::punct, std::string(1, c), at});
            advance(1);
        } else {
            throw ParseError(at, std::string("unexpected character '") + c + "'");
        }
    }
    out.push_back({Token::Kind::end, "", at});
    return out;
}

inline Rational parse_number(const std::string& s) {
    auto dot = s.find('.');
    if (dot == std::string::npos) return Rational(mpz_class(s));
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    mpz_class den = 1;
    for (std::size_t k = dot + 1; k < s.size(); ++k) den *= 10;
    Rational r(mpz_class(digits), den);
    r.canonicalize();
    return r;
}

// Scalar, form, or vector field (a combination of D(coordinate)).
struct Value {
    enum class Kind { scalar, form, vector } kind = Kind::scalar;
    Expr s;
    std::optional<Form> f;
    std::map<JetCoordinate, Expr> v;

    static Value scalar(Expr e) { return {Kind::scalar, std::move(e), std::nullopt, {}}; }
    static Value form(Form f) { return {Kind::form, Expr(), std::move(f), {}}; }
};

class Parser {
public:
    explicit Parser(const std::string& src) : toks_(tokenize(src)) {}

    ModelFile parse() {
        while (peek().kind != Token::Kind::end) statement();
        if (!model_.space) throw ParseError(peek().at, "model declares no space");
        return std::move(model_);
    }

private:
    const Token& peek(int k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
    const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
    bool is(const std::string& p, int k = 0) const {
        const Token& t = peek(k);
        return t.kind != Token::Kind::end && t.text == p && t.kind != Token::Kind::number;
    }
    bool accept(const std::string& p) {
        if (is(p)) {
            ++pos_;
            return true;
        }
        return false;
    }
    const Token& expect(const std::string& p) {
        if (!is(p)) throw ParseError(peek().at, "expected '" + p + "', found " + describe(peek()));
        return next();
    }
    static std::string describe(const Token& t) {
        return t.kind == Token::Kind::end ? "end of input" : "'" + t.text + "'";
    }
    const Token& ident() {
        if (peek().kind != Token::Kind::ident) throw ParseError(peek().at, "expected identifier, found " + describe(peek()));
        return next();
    }
    int integer() {
        if (peek().kind != Token::Kind::number || peek().text.find('.') != std::string::npos)
            throw ParseError(peek().at, "expected integer, found " + describe(peek()));
        return std::stoi(next().text);
    }

    void require_space(const Token& t) {
        if (!model_.space) throw ParseError(t.at, "the space must be declared first");
    }

    bool name_taken(const std::string& n) const {
        const JetSpace& sp = *model_.space;
        if (sp.find_coordinate(n)) return true;
        for (const auto& p : model_.params)
            if (p == n) return true;
        return model_.find_opaque(n) || model_.find_form(n) || model_.find_field(n);
    }
    void declare(const Token& t) {
        static const char* reserved[] = {"sqrt", "exp", "sin", "cos", "d", "w", "D", "space", "param", "opaque", "form", "field"};
        for (const char* r : reserved)
            if (t.text == r) throw ParseError(t.at, "'" + t.text + "' is reserved");
        if (name_taken(t.text)) throw ParseError(t.at, "'" + t.text + "' is already declared");
    }

    std::vector<Token> ident_list() {
        std::vector<Token> out;
        while (peek().kind == Token::Kind::ident) {
            out.push_back(next());
            if (!accept(",")) break;
        }
        return out;
    }

    void statement() {
        const Token& kw = ident();
        if (kw.text == "space") return space_statement(kw);
        require_space(kw);
        if (kw.text == "param") {
            for (const auto& t : ident_list()) {
                declare(t);
                model_.params.push_back(t.text);
            }
            expect(";");
        } else if (kw.text == "opaque") {
            const Token& name = ident();
            declare(name);
            OpaqueDecl o{name.text, {}};
            expect("(");
            for (const auto& t : ident_list()) o.slots.push_back(coordinate(t, std::nullopt));
            expect(")");
            expect(";");
            model_.opaque.push_back(std::move(o));
        } else if (kw.text == "form") {
            form_statement();
        } else if (kw.text == "field") {
            field_statement();
        } else {
            throw ParseError(kw.at, "unknown statement '" + kw.text + "'");
        }
    }

    void space_statement(const Token& kw) {
        if (model_.space) throw ParseError(kw.at, "space declared twice");
        expect("{");
        std::vector<std::string> base, fibre;
        bool seen_base = false, seen_fibre = false;
        while (!accept("}")) {
            const Token& t = ident();
            if (t.text != "base" && t.text != "fibre") throw ParseError(t.at, "expected 'base' or 'fibre'");
            auto& dst = t.text == "base" ? base : fibre;
            (t.text == "base" ? seen_base : seen_fibre) = true;
            for (const auto& x : ident_list()) dst.push_back(x.text);
            expect(";");
        }
        accept(";");
        if (!seen_base || base.empty()) throw ParseError(kw.at, "base dimension must be >= 1");
        if (!seen_fibre || fibre.empty()) throw ParseError(kw.at, "fibre dimension must be >= 1");
        try {
            model_.space = JetSpace::make(base, fibre);
        } catch (const std::exception& e) {
            throw ParseError(kw.at, e.what());
        }
    }

    void form_statement() {
        const Token& name = ident();
        declare(name);
        expect(":");
        if (ident().text != "degree") throw ParseError(peek(-1).at, "expected 'degree'");
        int q = integer();
        if (ident().text != "order") throw ParseError(peek(-1).at, "expected 'order'");
        int r = integer();
        const Token& eq = expect("=");
        order_limit_ = r;
        Value v = sum();
        order_limit_.reset();
        expect(";");
        Form f = as_form(v, eq.at, q);
        if (f.degree() != q)
            throw ParseError(eq.at, "form has degree " + std::to_string(f.degree()) + ", declared " + std::to_string(q));
        f = f.with_order(std::max(r, f.order()));
        model_.forms.push_back({name.text, q, r, f});
    }

    void field_statement() {
        bool generalized = false;
        Token name = ident();
        if (name.text == "generalized") {
            generalized = true;
            name = ident();
        }
        declare(name);
        const Token& eq = expect("=");
        Value v = sum();
        expect(";");
        if (v.kind == Value::Kind::scalar && v.s.is_zero()) v.kind = Value::Kind::vector;
        if (v.kind != Value::Kind::vector) throw ParseError(eq.at, "a field is a combination of D(coordinate)");
        const JetSpace& sp = *model_.space;
        std::vector<Expr> xi(sp.n()), Xi(sp.m());
        for (const auto& [c, e] : v.v) {
            if (c.is_base()) xi[c.index - 1] = e;
            else if (c.J.empty()) Xi[c.index - 1] = e;
            else throw ParseError(eq.at, "field components are along base and fibre coordinates only");
        }
        try {
            model_.fields.push_back({name.text, generalized, ProjectableVectorField(model_.space, xi, Xi, generalized)});
        } catch (const std::exception& e) {
            throw ParseError(eq.at, e.what());
        }
    }

    // ---- expressions ----

    Form as_form(const Value& v, Location at, int degree_hint = 0) const {
        if (v.kind == Value::Kind::form) return *v.f;
        if (v.kind == Value::Kind::vector) throw ParseError(at, "expected a form, found a vector field");
        if (v.s.is_zero() && degree_hint > 0) return Form(model_.space, degree_hint, 0);
        return Form::scalar(model_.space, v.s);
    }

    Value add(Value a, Value b, Location at, int sign) {
        if (sign < 0) b = negate(b, at);
        if (a.kind == Value::Kind::scalar && b.kind == Value::Kind::scalar) return Value::scalar(a.s + b.s);
        if (a.kind == Value::Kind::vector || b.kind == Value::Kind::vector) {
            if (a.kind == Value::Kind::scalar && a.s.is_zero()) return b;
            if (b.kind == Value::Kind::scalar && b.s.is_zero()) return a;
            if (a.kind != b.kind) throw ParseError(at, "cannot add a vector field and a form or scalar");
            for (const auto& [c, e] : b.v) a.v[c] += e;
            return a;
        }
        Form x = as_form(a, at), y = as_form(b, at);
        if (x.is_zero() && x.degree() == 0) return Value::form(y);
        if (y.is_zero() && y.degree() == 0) return Value::form(x);
        if (x.degree() != y.degree()) throw ParseError(at, "cannot add forms of different degree");
        return Value::form(x + y);
    }

    Value negate(Value a, Location at) { return mul(Value::scalar(Expr(-1)), std::move(a), at); }

    Value mul(Value a, Value b, Location at) {
        using K = Value::Kind;
        if (a.kind == K::scalar && b.kind == K::scalar) return Value::scalar(a.s * b.s);
        if (a.kind == K::vector || b.kind == K::vector) {
            if (a.kind == K::vector) std::swap(a, b);
            if (a.kind != K::scalar) throw ParseError(at, "a vector field can only be scaled");
            for (auto& [c, e] : b.v) e = a.s * e;
            return b;
        }
        if (a.kind == K::scalar) return Value::form(a.s * *b.f);
        if (b.kind == K::scalar) return Value::form(b.s * *a.f);
        return Value::form(wedge(*a.f, *b.f));
    }

    Value divide(Value a, Value b, Location at) {
        if (b.kind != Value::Kind::scalar) throw ParseError(at, "division by a form");
        if (b.s.is_zero()) throw ParseError(at, "division by zero");
        return mul(std::move(a), Value::scalar(Expr(1) / b.s), at);
    }

    Value power(Value a, Value b, Location at, bool caret) {
        if (caret && (a.kind == Value::Kind::form || b.kind == Value::Kind::form)) {
            if (a.kind != Value::Kind::form || b.kind != Value::Kind::form) throw ParseError(at, "wedge of a form and a scalar");
            return Value::form(wedge(*a.f, *b.f));
        }
        if (a.kind != Value::Kind::scalar || b.kind != Value::Kind::scalar) throw ParseError(at, "invalid operands of a power");
        if (!b.s.is_constant()) throw ParseError(at, "exponent must be a rational constant");
        Rational e = b.s.constant_value();
        if (e.get_den() == 1) return Value::scalar(a.s.pow(static_cast<int>(e.get_num().get_si())));
        if (e.get_den() == 2) return Value::scalar(Expr::func(Fn::sqrt, a.s).pow(static_cast<int>(e.get_num().get_si())));
        throw ParseError(at, "exponent must be an integer or a half-integer");
    }

    static bool starts_primary(const Token& t) {
        return t.kind == Token::Kind::ident || t.kind == Token::Kind::number || (t.kind == Token::Kind::punct && t.text == "(");
    }

    Value sum() {
        Value v = term();
        while (is("+") || is("-")) {
            const Token& op = next();
            Value w = term();
            v = add(std::move(v), std::move(w), op.at, op.text == "+" ? 1 : -1);
        }
        return v;
    }

    Value term() {
        Value v = unary();
        for (;;) {
            if (is("*") || is("/")) {
                const Token& op = next();
                Value w = unary();
                v = op.text == "*" ? mul(std::move(v), std::move(w), op.at) : divide(std::move(v), std::move(w), op.at);
            } else if (starts_primary(peek())) {
                Location at = peek().at;
                Value w = unary();
                v = mul(std::move(v), std::move(w), at);
            } else {
                return v;
            }
        }
    }

    Value unary() {
        if (is("-")) {
            const Token& op = next();
            return negate(unary(), op.at);
        }
        if (accept("+")) return unary();
        return power_expr();
    }

    Value power_expr() {
        Value base = primary();
        if (is("^") || is("**")) {
            const Token& op = next();
            Value e = unary();
            return power(std::move(base), std::move(e), op.at, op.text == "^");
        }
        return base;
    }

    JetCoordinate coordinate(const Token& t, std::optional<int> limit) {
        auto c = model_.space->find_coordinate(t.text, 64);
        if (!c) throw ParseError(t.at, "undeclared identifier '" + t.text + "'");
        check_order(t, c->order(), limit);
        return *c;
    }

    void check_order(const Token& t, int order, std::optional<int> limit) {
        if (limit && order > *limit)
            throw ParseError(t.at, "order violation: '" + t.text + "' has order " + std::to_string(order) +
                                       " above the declared order " + std::to_string(*limit));
    }

    MultiIndex multiindex() {
        const Token& open = expect("[");
        std::vector<int> idx;
        while (!is("]")) {
            const Token& t = ident();
            auto i = model_.space->base_index(t.text);
            if (!i) throw ParseError(t.at, "'" + t.text + "' is not a base coordinate");
            idx.push_back(*i);
            if (!accept(",")) break;
        }
        expect("]");
        if (!std::is_sorted(idx.begin(), idx.end()))
            model_.warnings.push_back({open.at, "multi-index was not sorted; canonicalized"});
        return MultiIndex(idx);
    }

    Value primary() {
        const Token& t = peek();
        if (t.kind == Token::Kind::number) {
            next();
            return Value::scalar(Expr(parse_number(t.text)));
        }
        if (accept("(")) {
            Value v = sum();
            expect(")");
            return v;
        }
        if (t.kind != Token::Kind::ident) throw ParseError(t.at, "unexpected " + describe(t));
        const Token& id = next();
        const JetSpace& sp = *model_.space;
        if (is("(")) {
            static const std::pair<const char*, Fn> fns[] = {{"sqrt", Fn::sqrt}, {"exp", Fn::exp}, {"sin", Fn::sin}, {"cos", Fn::cos}};
            for (const auto& [nm, fn] : fns) {
                if (id.text == nm) {
                    expect("(");
                    Value a = sum();
                    expect(")");
                    if (a.kind != Value::Kind::scalar) throw ParseError(id.at, std::string(nm) + " of a form");
                    return Value::scalar(Expr::func(fn, a.s));
                }
            }
            if (id.text == "d") {
                expect("(");
                const Token& c = ident();
                JetCoordinate jc = coordinate(c, order_limit_);
                expect(")");
                return Value::form(jc.is_base() ? Form::dx(model_.space, jc.index) : Form::dy(model_.space, jc.index, jc.J));
            }
            if (id.text == "w") {
                expect("(");
                const Token& c = ident();
                auto jc = model_.space->find_coordinate(c.text, 64);
                if (!jc || jc->is_base()) throw ParseError(c.at, "'" + c.text + "' is not a fibre coordinate");
                MultiIndex J = jc->J;
                if (accept(",")) {
                    if (!J.empty()) throw ParseError(c.at, "multi-index given twice");
                    J = multiindex();
                }
                expect(")");
                check_order(c, J.size(), order_limit_);
                return Value::form(Form::contact(model_.space, jc->index, J));
            }
            if (id.text == "D") {
                expect("(");
                const Token& c = ident();
                JetCoordinate jc = coordinate(c, std::nullopt);
                expect(")");
                Value v;
                v.kind = Value::Kind::vector;
                v.v[jc] = Expr(1);
                return v;
            }
        }
        for (const auto& p : model_.params)
            if (p == id.text) return Value::scalar(Expr::param(p));
        if (const OpaqueDecl* o = model_.find_opaque(id.text)) return opaque_atom(*o, id);
        if (const NamedForm* f = model_.find_form(id.text)) return Value::form(f->form);
        if (auto c = sp.find_coordinate(id.text, 64)) {
            check_order(id, c->order(), order_limit_);
            return Value::scalar(Expr::coord(*c));
        }
        if (id.text.size() > 1 && id.text[0] == 'd') {
            if (auto c = sp.find_coordinate(id.text.substr(1), 64)) {
                check_order(id, c->order(), order_limit_);
                return Value::form(c->is_base() ? Form::dx(model_.space, c->index) : Form::dy(model_.space, c->index, c->J));
            }
        }
        throw ParseError(id.at, "undeclared identifier '" + id.text + "'");
    }

    // L, L(t,q,qd) with the declared slots, or L[qd,qd] for a derivative.
    Value opaque_atom(const OpaqueDecl& o, const Token& id) {
        std::vector<int> counts(o.slots.size(), 0);
        if (accept("(")) {
            std::vector<JetCoordinate> given;
            for (const auto& t : ident_list()) given.push_back(coordinate(t, std::nullopt));
            expect(")");
            if (given != o.slots) throw ParseError(id.at, "arguments of '" + o.name + "' differ from its declaration");
        }
        if (accept("[")) {
            while (!is("]")) {
                const Token& t = ident();
                JetCoordinate c = coordinate(t, std::nullopt);
                auto it = std::find(o.slots.begin(), o.slots.end(), c);
                if (it == o.slots.end()) throw ParseError(t.at, "'" + t.text + "' is not an argument of '" + o.name + "'");
                ++counts[static_cast<std::size_t>(it - o.slots.begin())];
                if (!accept(",")) break;
            }
            expect("]");
        }
        for (const auto& s : o.slots) {
            if (order_limit_ && s.order() > *order_limit_)
                throw ParseError(id.at, "order violation: '" + o.name + "' depends on coordinates above the declared order " +
                                            std::to_string(*order_limit_));
        }
        return Value::scalar(Expr::opaque(o.name, o.slots, counts));
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    ModelFile model_;
    std::optional<int> order_limit_;
};

}  // namespace detail

inline ModelFile parse_model(const std::string& text) { return detail::Parser(text).parse(); }

inline std::string render_field_text(const ProjectableVectorField& X) {
    const JetSpace& sp = *X.space;
    std::vector<std::string> parts;
    auto part = [&](const Expr& e, const JetCoordinate& c) {
        if (e.is_zero()) return;
        parts.push_back("(" + render_text(e, sp) + ")*D(" + sp.coordinate_name(c) + ")");
    };
    for (int i = 1; i <= sp.n(); ++i) part(X.xi[i - 1], JetCoordinate::base(i));
    for (int s = 1; s <= sp.m(); ++s) part(X.Xi[s - 1], JetCoordinate::fibre(s));
    return parts.empty() ? "0" : detail::join(parts, " + ");
}

inline std::string render_model(const ModelFile& m) {
    const JetSpace& sp = *m.space;
    std::ostringstream out;
    out << "space { base " << detail::join(sp.base_names(), ", ") << "; fibre " << detail::join(sp.fibre_names(), ", ")
        << "; }\n";
    if (!m.params.empty()) out << "param " << detail::join(m.params, ", ") << ";\n";
    for (const auto& o : m.opaque) {
        std::vector<std::string> s;
        for (const auto& c : o.slots) s.push_back(sp.coordinate_name(c));
        out << "opaque " << o.name << "(" << detail::join(s, ", ") << ");\n";
    }
    for (const auto& f : m.forms)
        out << "form " << f.name << " : degree " << f.degree << " order " << f.order << " = " << render_text(f.form) << ";\n";
    for (const auto& f : m.fields)
        out << "field " << (f.generalized ? "generalized " : "") << f.name << " = " << render_field_text(f.field) << ";\n";
    return out.str();
}

}  // namespace varseq
