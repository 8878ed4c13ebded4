#pragma once

#include "lagmc/error.hpp"

#include <memory>
#include <span>
#include <string>

namespace lagmc {

class ExpressionError : public InvalidArgument {
public:
    ExpressionError(const std::string& what, std::size_t column)
        : InvalidArgument(what + " at column " + std::to_string(column + 1)), column_(column) {}
    std::size_t column() const { return column_; }

private:
    std::size_t column_;
};

// Arithmetic over x1..x3 (aliases x, y, z) and pi, e with + - * / ^, unary
// minus and sin cos tan atan tanh exp log sqrt abs, min max pow (two arguments).
class Expression {
public:
    static Expression parse(const std::string& text, int dim);
    double operator()(std::span<const double> x) const;
    const std::string& text() const { return text_; }

    struct Node;

private:
    std::string text_;
    std::shared_ptr<const Node> root_;
};

}  // namespace lagmc
