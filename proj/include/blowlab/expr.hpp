#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace blowlab {

// Parse error with the 0-based character position of the offending token.
struct ExprError : std::runtime_error {
    ExprError(const std::string& msg, std::size_t pos)
        : std::runtime_error(msg + " (at position " + std::to_string(pos) + ")"), position(pos) {}
    std::size_t position;
};

// Tiny arithmetic grammar for initial data and coefficients:
// constants, pi, x, + - * / ^, cos, exp, abs, parentheses, unary minus.
class Expr {
public:
    struct Node;

    static Expr parse(const std::string& text);

    double eval(double x) const;
    const std::string& text() const { return text_; }

private:
    std::shared_ptr<const Node> root_;
    std::string text_;
};

}  // namespace blowlab
