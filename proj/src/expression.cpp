#include "lagmc/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

namespace lagmc {

struct Expression::Node {
    enum class Kind { Number, Variable, Negate, Add, Sub, Mul, Div, Pow, Call1, Call2 } kind;
    double value = 0.0;
    int var = 0;
    double (*f1)(double) = nullptr;
    double (*f2)(double, double) = nullptr;
    std::shared_ptr<const Node> a, b;

    double eval(std::span<const double> x) const {
        switch (kind) {
            case Kind::Number: return value;
            case Kind::Variable: return x[static_cast<std::size_t>(var)];
            case Kind::Negate: return -a->eval(x);
            case Kind::Add: return a->eval(x) + b->eval(x);
            case Kind::Sub: return a->eval(x) - b->eval(x);
            case Kind::Mul: return a->eval(x) * b->eval(x);
            case Kind::Div: return a->eval(x) / b->eval(x);
            case Kind::Pow: return std::pow(a->eval(x), b->eval(x));
            case Kind::Call1: return f1(a->eval(x));
            case Kind::Call2: return f2(a->eval(x), b->eval(x));
        }
        return 0.0;
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

std::shared_ptr<Expression::Node> make(Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

struct Unary {
    const char* name;
    double (*f)(double);
};
struct Binary {
    const char* name;
    double (*f)(double, double);
};

const Unary kUnary[] = {
    {"sin", [](double v) { return std::sin(v); }},   {"cos", [](double v) { return std::cos(v); }},
    {"tan", [](double v) { return std::tan(v); }},   {"atan", [](double v) { return std::atan(v); }},
    {"tanh", [](double v) { return std::tanh(v); }}, {"exp", [](double v) { return std::exp(v); }},
    {"log", [](double v) { return std::log(v); }},   {"sqrt", [](double v) { return std::sqrt(v); }},
    {"abs", [](double v) { return std::abs(v); }},
};
const Binary kBinary[] = {
    {"min", [](double a, double b) { return std::min(a, b); }},
    {"max", [](double a, double b) { return std::max(a, b); }},
    {"pow", [](double a, double b) { return std::pow(a, b); }},
};

class Parser {
public:
    Parser(const std::string& s, int dim) : s_(s), dim_(dim) {}

    NodePtr parse() {
        NodePtr n = sum();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return n;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ExpressionError(msg, pos_); }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    NodePtr sum() {
        NodePtr n = product();
        for (;;) {
            if (accept('+')) n = make(Kind::Add, n, product());
            else if (accept('-')) n = make(Kind::Sub, n, product());
            else return n;
        }
    }

    NodePtr product() {
        NodePtr n = unary();
        for (;;) {
            if (accept('*')) n = make(Kind::Mul, n, unary());
            else if (accept('/')) n = make(Kind::Div, n, unary());
            else return n;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make(Kind::Negate, unary());
        if (accept('+')) return unary();
        return power();
    }

    // Right associative; binds tighter than unary minus on its left: -x^2 = -(x^2).
    NodePtr power() {
        NodePtr base = atom();
        if (accept('^')) return make(Kind::Pow, base, unary());
        return base;
    }

    NodePtr atom() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of expression");
        const char c = s_[pos_];
        if (accept('(')) {
            NodePtr n = sum();
            expect(')');
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return name();
        fail("unexpected '" + std::string(1, c) + "'");
    }

    NodePtr number() {
        double v = 0.0;
        const char* begin = s_.data() + pos_;
        auto r = std::from_chars(begin, s_.data() + s_.size(), v);
        if (r.ec != std::errc()) fail("malformed number");
        pos_ += static_cast<std::size_t>(r.ptr - begin);
        auto n = std::make_shared<Expression::Node>();
        n->kind = Kind::Number;
        n->value = v;
        return n;
    }

    NodePtr name() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        const std::string id = s_.substr(start, pos_ - start);
        auto leaf = std::make_shared<Expression::Node>();
        if (id == "pi" || id == "e") {
            leaf->kind = Kind::Number;
            leaf->value = id == "pi" ? std::numbers::pi : std::numbers::e;
            return leaf;
        }
        int var = -1;
        if (id == "x" || id == "x1") var = 0;
        if (id == "y" || id == "x2") var = 1;
        if (id == "z" || id == "x3") var = 2;
        if (var >= 0) {
            if (var >= dim_) {
                pos_ = start;
                fail("variable '" + id + "' exceeds dimension " + std::to_string(dim_));
            }
            leaf->kind = Kind::Variable;
            leaf->var = var;
            return leaf;
        }
        for (const auto& u : kUnary)
            if (id == u.name) {
                expect('(');
                NodePtr arg = sum();
                expect(')');
                auto n = make(Kind::Call1, arg);
                n->f1 = u.f;
                return n;
            }
        for (const auto& b : kBinary)
            if (id == b.name) {
                expect('(');
                NodePtr a = sum();
                expect(',');
                NodePtr c = sum();
                expect(')');
                auto n = make(Kind::Call2, a, c);
                n->f2 = b.f;
                return n;
            }
        pos_ = start;
        fail("unknown identifier '" + id + "'");
    }

    const std::string& s_;
    int dim_;
    std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text, int dim) {
    if (dim < 1 || dim > 3) throw InvalidArgument("expressions support dimensions 1 to 3");
    Expression e;
    e.text_ = text;
    e.root_ = Parser(text, dim).parse();
    return e;
}

double Expression::operator()(std::span<const double> x) const { return root_->eval(x); }

}  // namespace lagmc
