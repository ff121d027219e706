#include "blowlab/expr.hpp"

#include <cctype>
#include <cmath>
#include <numbers>

namespace blowlab {

struct Expr::Node {
    enum Op { Num, Var, Add, Sub, Mul, Div, Pow, Neg, Cos, Exp, Abs } op;
    double value = 0.0;
    std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

struct Parser {
    const std::string& s;
    std::size_t i = 0;

    explicit Parser(const std::string& text) : s(text) {}

    void skip() {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    }

    bool eat(char c) {
        skip();
        if (i < s.size() && s[i] == c) {
            ++i;
            return true;
        }
        return false;
    }

    char peek() {
        skip();
        return i < s.size() ? s[i] : '\0';
    }

    NodePtr make(Expr::Node::Op op, NodePtr a = nullptr, NodePtr b = nullptr, double v = 0.0) {
        auto n = std::make_shared<Expr::Node>();
        n->op = op;
        n->value = v;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        while (true) {
            if (eat('+'))
                lhs = make(Expr::Node::Add, lhs, parse_term());
            else if (eat('-'))
                lhs = make(Expr::Node::Sub, lhs, parse_term());
            else
                return lhs;
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_unary();
        while (true) {
            if (eat('*'))
                lhs = make(Expr::Node::Mul, lhs, parse_unary());
            else if (eat('/'))
                lhs = make(Expr::Node::Div, lhs, parse_unary());
            else
                return lhs;
        }
    }

    NodePtr parse_unary() {
        if (eat('-')) return make(Expr::Node::Neg, parse_unary());
        if (eat('+')) return parse_unary();
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        if (eat('^')) return make(Expr::Node::Pow, base, parse_unary());  // right associative
        return base;
    }

    NodePtr parse_primary() {
        skip();
        if (i >= s.size()) throw ExprError("unexpected end of expression", i);
        const char c = s[i];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (c == '(') {
            ++i;
            NodePtr inner = parse_expr();
            if (!eat(')')) throw ExprError("expected ')'", i);
            return inner;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
        throw ExprError(std::string("unexpected character '") + c + "'", i);
    }

    NodePtr parse_number() {
        const std::size_t start = i;
        std::size_t end = 0;
        double v = 0.0;
        try {
            v = std::stod(s.substr(start), &end);
        } catch (const std::exception&) {
            throw ExprError("malformed number", start);
        }
        i = start + end;
        return make(Expr::Node::Num, nullptr, nullptr, v);
    }

    NodePtr parse_ident() {
        const std::size_t start = i;
        while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
        const std::string name = s.substr(start, i - start);
        if (name == "x") return make(Expr::Node::Var);
        if (name == "pi") return make(Expr::Node::Num, nullptr, nullptr, std::numbers::pi);
        Expr::Node::Op op;
        if (name == "cos")
            op = Expr::Node::Cos;
        else if (name == "exp")
            op = Expr::Node::Exp;
        else if (name == "abs")
            op = Expr::Node::Abs;
        else
            throw ExprError("unknown identifier '" + name + "'", start);
        if (!eat('(')) throw ExprError("expected '(' after '" + name + "'", i);
        NodePtr arg = parse_expr();
        if (!eat(')')) throw ExprError("expected ')'", i);
        return make(op, arg);
    }
};

double eval_node(const Expr::Node& n, double x) {
    using N = Expr::Node;
    switch (n.op) {
        case N::Num: return n.value;
        case N::Var: return x;
        case N::Add: return eval_node(*n.a, x) + eval_node(*n.b, x);
        case N::Sub: return eval_node(*n.a, x) - eval_node(*n.b, x);
        case N::Mul: return eval_node(*n.a, x) * eval_node(*n.b, x);
        case N::Div: return eval_node(*n.a, x) / eval_node(*n.b, x);
        case N::Pow: return std::pow(eval_node(*n.a, x), eval_node(*n.b, x));
        case N::Neg: return -eval_node(*n.a, x);
        case N::Cos: return std::cos(eval_node(*n.a, x));
        case N::Exp: return std::exp(eval_node(*n.a, x));
        case N::Abs: return std::fabs(eval_node(*n.a, x));
    }
    return 0.0;
}

}  // namespace

Expr Expr::parse(const std::string& text) {
    Parser p(text);
    Expr e;
    e.root_ = p.parse_expr();
    p.skip();
    if (p.i != text.size()) throw ExprError("trailing input", p.i);
    e.text_ = text;
    return e;
}

double Expr::eval(double x) const {
    if (!root_) throw std::logic_error("Expr: eval on empty expression");
    return eval_node(*root_, x);
}

}  // namespace blowlab
