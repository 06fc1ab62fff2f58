#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lightcone/numerics.hpp"

namespace lightcone {

// Small expression language for scalar fields.
//
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := base ('^' factor)?            -- '^' right-associative
//   base   := number | var | func '(' expr ')' | '(' expr ')' | '-' base
//   func   := exp | log | sin | cos | sinh | cosh | sqrt
//   var    := x1..x9 (ambient sphere coordinates) | u, w (chart coordinates)
//
// Parsed trees are immutable and support symbolic differentiation, which is
// what gives expression-backed fields analytic gradients and Hessians.

struct ParseError : std::runtime_error {
    ParseError(std::size_t offset_, const std::string& what_, std::string expected_)
        : std::runtime_error("syntax error at offset " + std::to_string(offset_) + ": " + what_),
          offset(offset_),
          expected(std::move(expected_)) {}
    std::size_t offset;
    std::string expected;
};

struct FieldDomainError : std::domain_error {
    using std::domain_error::domain_error;
};

namespace expr {

enum class Kind { Num, Var, Add, Sub, Mul, Div, Pow, Neg, Func };
enum class Fn { Exp, Log, Sin, Cos, Sinh, Cosh, Sqrt };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    Kind kind;
    double value = 0.0;  // Num
    int var = -1;        // Var: index into the value vector
    Fn fn = Fn::Exp;     // Func
    NodePtr a, b;
};

inline NodePtr num(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Num;
    n->value = v;
    return n;
}

inline NodePtr var(int index) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Var;
    n->var = index;
    return n;
}

inline bool is_num(const NodePtr& n, double v) {
    return n->kind == Kind::Num && n->value == v;
}

inline NodePtr make(Kind k, NodePtr a, NodePtr b = nullptr);

inline NodePtr fun(Fn f, NodePtr a) {
    if (a->kind == Kind::Num) {
        const double x = a->value;
        switch (f) {
            case Fn::Exp: return num(std::exp(x));
            case Fn::Log: if (x > 0) return num(std::log(x)); break;
            case Fn::Sin: return num(std::sin(x));
            case Fn::Cos: return num(std::cos(x));
            case Fn::Sinh: return num(std::sinh(x));
            case Fn::Cosh: return num(std::cosh(x));
            case Fn::Sqrt: if (x >= 0) return num(std::sqrt(x)); break;
        }
    }
    auto n = std::make_shared<Node>();
    n->kind = Kind::Func;
    n->fn = f;
    n->a = std::move(a);
    return n;
}

// Constant folding plus the handful of algebraic identities that keep
// symbolic derivatives from exploding in size.
inline NodePtr make(Kind k, NodePtr a, NodePtr b) {
    if (k == Kind::Neg) {
        if (a->kind == Kind::Num) return num(-a->value);
        if (a->kind == Kind::Neg) return a->a;
        auto n = std::make_shared<Node>();
        n->kind = k;
        n->a = std::move(a);
        return n;
    }
    if (a->kind == Kind::Num && b && b->kind == Kind::Num) {
        switch (k) {
            case Kind::Add: return num(a->value + b->value);
            case Kind::Sub: return num(a->value - b->value);
            case Kind::Mul: return num(a->value * b->value);
            case Kind::Div: if (b->value != 0) return num(a->value / b->value); break;
            case Kind::Pow: {
                const double p = std::pow(a->value, b->value);
                if (std::isfinite(p)) return num(p);
                break;
            }
            default: break;
        }
    }
    switch (k) {
        case Kind::Add:
            if (is_num(a, 0)) return b;
            if (is_num(b, 0)) return a;
            break;
        case Kind::Sub:
            if (is_num(b, 0)) return a;
            if (is_num(a, 0)) return make(Kind::Neg, b);
            break;
        case Kind::Mul:
            if (is_num(a, 0) || is_num(b, 0)) return num(0);
            if (is_num(a, 1)) return b;
            if (is_num(b, 1)) return a;
            break;
        case Kind::Div:
            if (is_num(a, 0)) return num(0);
            if (is_num(b, 1)) return a;
            break;
        case Kind::Pow:
            if (is_num(b, 1)) return a;
            if (is_num(b, 0)) return num(1);
            break;
        default: break;
    }
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

inline double eval(const NodePtr& n, const Vec& v) {
    switch (n->kind) {
        case Kind::Num: return n->value;
        case Kind::Var:
            if (n->var >= v.size()) throw FieldDomainError("variable index out of range");
            return v[n->var];
        case Kind::Add: return eval(n->a, v) + eval(n->b, v);
        case Kind::Sub: return eval(n->a, v) - eval(n->b, v);
        case Kind::Mul: return eval(n->a, v) * eval(n->b, v);
        case Kind::Div: {
            const double den = eval(n->b, v);
            if (den == 0.0) throw FieldDomainError("division by zero");
            return eval(n->a, v) / den;
        }
        case Kind::Pow: {
            const double base = eval(n->a, v), p = eval(n->b, v);
            const double r = std::pow(base, p);
            if (!std::isfinite(r)) throw FieldDomainError("pow out of domain");
            return r;
        }
        case Kind::Neg: return -eval(n->a, v);
        case Kind::Func: {
            const double x = eval(n->a, v);
            switch (n->fn) {
                case Fn::Exp: return std::exp(x);
                case Fn::Log:
                    if (x <= 0.0) throw FieldDomainError("log of nonpositive value");
                    return std::log(x);
                case Fn::Sin: return std::sin(x);
                case Fn::Cos: return std::cos(x);
                case Fn::Sinh: return std::sinh(x);
                case Fn::Cosh: return std::cosh(x);
                case Fn::Sqrt:
                    if (x < 0.0) throw FieldDomainError("sqrt of negative value");
                    return std::sqrt(x);
            }
        }
    }
    throw std::logic_error("expression eval: corrupt node");
}

inline NodePtr diff(const NodePtr& n, int v) {
    switch (n->kind) {
        case Kind::Num: return num(0);
        case Kind::Var: return num(n->var == v ? 1.0 : 0.0);
        case Kind::Add: return make(Kind::Add, diff(n->a, v), diff(n->b, v));
        case Kind::Sub: return make(Kind::Sub, diff(n->a, v), diff(n->b, v));
        case Kind::Mul:
            return make(Kind::Add, make(Kind::Mul, diff(n->a, v), n->b),
                        make(Kind::Mul, n->a, diff(n->b, v)));
        case Kind::Div:
            return make(Kind::Div,
                        make(Kind::Sub, make(Kind::Mul, diff(n->a, v), n->b),
                             make(Kind::Mul, n->a, diff(n->b, v))),
                        make(Kind::Mul, n->b, n->b));
        case Kind::Pow: {
            if (n->b->kind == Kind::Num) {
                // d f^c = c f^{c-1} f'; avoids log(f) for plain powers.
                const double c = n->b->value;
                return make(Kind::Mul, make(Kind::Mul, num(c), make(Kind::Pow, n->a, num(c - 1))),
                            diff(n->a, v));
            }
            // f^g = exp(g log f)
            NodePtr t1 = make(Kind::Mul, diff(n->b, v), fun(Fn::Log, n->a));
            NodePtr t2 = make(Kind::Mul, n->b, make(Kind::Div, diff(n->a, v), n->a));
            return make(Kind::Mul, make(Kind::Pow, n->a, n->b), make(Kind::Add, t1, t2));
        }
        case Kind::Neg: return make(Kind::Neg, diff(n->a, v));
        case Kind::Func: {
            NodePtr da = diff(n->a, v);
            NodePtr outer;
            switch (n->fn) {
                case Fn::Exp: outer = fun(Fn::Exp, n->a); break;
                case Fn::Log: outer = make(Kind::Div, num(1), n->a); break;
                case Fn::Sin: outer = fun(Fn::Cos, n->a); break;
                case Fn::Cos: outer = make(Kind::Neg, fun(Fn::Sin, n->a)); break;
                case Fn::Sinh: outer = fun(Fn::Cosh, n->a); break;
                case Fn::Cosh: outer = fun(Fn::Sinh, n->a); break;
                case Fn::Sqrt:
                    outer = make(Kind::Div, num(0.5), fun(Fn::Sqrt, n->a));
                    break;
            }
            return make(Kind::Mul, outer, da);
        }
    }
    throw std::logic_error("expression diff: corrupt node");
}

inline std::string to_string(const NodePtr& n) {
    switch (n->kind) {
        case Kind::Num: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", n->value);
            return buf;
        }
        case Kind::Var: return "v" + std::to_string(n->var);
        case Kind::Add: return "(" + to_string(n->a) + "+" + to_string(n->b) + ")";
        case Kind::Sub: return "(" + to_string(n->a) + "-" + to_string(n->b) + ")";
        case Kind::Mul: return "(" + to_string(n->a) + "*" + to_string(n->b) + ")";
        case Kind::Div: return "(" + to_string(n->a) + "/" + to_string(n->b) + ")";
        case Kind::Pow: return "(" + to_string(n->a) + "^" + to_string(n->b) + ")";
        case Kind::Neg: return "(-" + to_string(n->a) + ")";
        case Kind::Func: {
            static const char* names[] = {"exp", "log", "sin", "cos", "sinh", "cosh", "sqrt"};
            return std::string(names[static_cast<int>(n->fn)]) + "(" + to_string(n->a) + ")";
        }
    }
    return "?";
}

}  // namespace expr

enum class VarSpace { Ambient, Chart };

// A parsed field expression together with its variable space and arity.
struct FieldExpression {
    expr::NodePtr root;
    VarSpace space = VarSpace::Ambient;
    int nvars = 0;  // number of value-vector slots the expression reads
    std::string source;

    double operator()(const Vec& values) const { return expr::eval(root, values); }
};

namespace detail {

class Parser {
public:
    Parser(const std::string& text, int max_ambient_vars)
        : s_(text), max_vars_(max_ambient_vars) {}

    FieldExpression parse() {
        expr::NodePtr root = parse_expr();
        skip_ws();
        if (pos_ != s_.size())
            throw ParseError(pos_, "unexpected trailing input", "operator or end of input");
        FieldExpression fe;
        fe.root = root;
        fe.space = saw_chart_ ? VarSpace::Chart : VarSpace::Ambient;
        fe.nvars = saw_chart_ ? 2 : max_seen_ + 1;
        fe.source = s_;
        return fe;
    }

private:
    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }

    expr::NodePtr parse_expr() {
        expr::NodePtr lhs = parse_term();
        for (;;) {
            if (consume('+'))
                lhs = expr::make(expr::Kind::Add, lhs, parse_term());
            else if (consume('-'))
                lhs = expr::make(expr::Kind::Sub, lhs, parse_term());
            else
                return lhs;
        }
    }

    expr::NodePtr parse_term() {
        expr::NodePtr lhs = parse_factor();
        for (;;) {
            if (consume('*'))
                lhs = expr::make(expr::Kind::Mul, lhs, parse_factor());
            else if (consume('/'))
                lhs = expr::make(expr::Kind::Div, lhs, parse_factor());
            else
                return lhs;
        }
    }

    expr::NodePtr parse_factor() {
        expr::NodePtr base = parse_base();
        if (consume('^')) return expr::make(expr::Kind::Pow, base, parse_factor());
        return base;
    }

    expr::NodePtr parse_base() {
        skip_ws();
        if (pos_ >= s_.size())
            throw ParseError(pos_, "unexpected end of input",
                             "number, variable, function, '(' or '-'");
        const char c = s_[pos_];
        if (c == '-') {
            ++pos_;
            return expr::make(expr::Kind::Neg, parse_base());
        }
        if (c == '(') {
            ++pos_;
            expr::NodePtr e = parse_expr();
            if (!consume(')')) throw ParseError(pos_, "missing ')'", "')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_name();
        throw ParseError(pos_, std::string("unexpected character '") + c + "'",
                         "number, variable, function, '(' or '-'");
    }

    expr::NodePtr parse_number() {
        const std::size_t start = pos_;
        std::size_t end = pos_;
        while (end < s_.size() &&
               (std::isdigit(static_cast<unsigned char>(s_[end])) || s_[end] == '.' ||
                s_[end] == 'e' || s_[end] == 'E' ||
                ((s_[end] == '+' || s_[end] == '-') && (s_[end - 1] == 'e' || s_[end - 1] == 'E'))))
            ++end;
        const std::string tok = s_.substr(start, end - start);
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw ParseError(start, "invalid number '" + tok + "'", "number");
        }
        if (used != tok.size()) throw ParseError(start + used, "invalid number '" + tok + "'", "number");
        pos_ = end;
        return expr::num(v);
    }

    expr::NodePtr parse_name() {
        const std::size_t start = pos_;
        std::size_t end = pos_;
        while (end < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[end])))) ++end;
        const std::string name = s_.substr(start, end - start);
        pos_ = end;
        if (name.size() == 2 && name[0] == 'x' && name[1] >= '1' && name[1] <= '9') {
            const int idx = name[1] - '1';
            if (saw_chart_)
                throw ParseError(start, "cannot mix sphere and chart variables", "u or w");
            if (idx >= max_vars_)
                throw ParseError(start, "variable " + name + " exceeds dimension (allowed x1..x" +
                                            std::to_string(max_vars_) + ")",
                                 "x1..x" + std::to_string(max_vars_));
            saw_ambient_ = true;
            max_seen_ = std::max(max_seen_, idx);
            return expr::var(idx);
        }
        if (name == "u" || name == "w") {
            if (saw_ambient_)
                throw ParseError(start, "cannot mix sphere and chart variables", "x1..x9");
            saw_chart_ = true;
            return expr::var(name == "u" ? 0 : 1);
        }
        static const std::pair<const char*, expr::Fn> fns[] = {
            {"exp", expr::Fn::Exp},   {"log", expr::Fn::Log},  {"sin", expr::Fn::Sin},
            {"cos", expr::Fn::Cos},   {"sinh", expr::Fn::Sinh}, {"cosh", expr::Fn::Cosh},
            {"sqrt", expr::Fn::Sqrt}};
        for (auto& [fname, f] : fns) {
            if (name == fname) {
                if (!consume('('))
                    throw ParseError(pos_, "expected '(' after function " + name, "'('");
                expr::NodePtr arg = parse_expr();
                if (!consume(')')) throw ParseError(pos_, "missing ')'", "')'");
                return expr::fun(f, arg);
            }
        }
        throw ParseError(start, "unknown identifier '" + name + "'",
                         "variable x1..x9, u, w or function");
    }

    const std::string& s_;
    std::size_t pos_ = 0;
    int max_vars_;
    bool saw_ambient_ = false;
    bool saw_chart_ = false;
    int max_seen_ = -1;
};

}  // namespace detail

// Parse a field over S^n (variables x1..x{n+1}) or over a 2D chart (u, w).
inline FieldExpression parse_field(const std::string& text, int n) {
    detail::Parser p(text, n + 1);
    return p.parse();
}

}  // namespace lightcone
