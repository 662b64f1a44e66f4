#pragma once

#include "dgline/common.hpp"

#include <cctype>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

namespace dgline {

/// Small arithmetic expression evaluator for configuration files.
///
/// Grammar: numbers, named variables, + - * / ^ (right-associative), unary
/// minus, parentheses, the constant `pi`, and the functions sin cos tan exp
/// log sqrt abs. Variables are bound by name at parse time and looked up by
/// index at evaluation time.
class Expression {
public:
    Expression() = default;

    Expression(std::string text, std::vector<std::string> variables)
        : text_(std::move(text)), vars_(std::move(variables)) {
        pos_ = 0;
        root_ = parse_sum();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    }

    const std::string& text() const { return text_; }
    const std::vector<std::string>& variables() const { return vars_; }

    double operator()(std::initializer_list<double> values) const {
        return eval(*root_, std::vector<double>(values));
    }
    double evaluate(const std::vector<double>& values) const { return eval(*root_, values); }

    /// True when the expression references the variable `name`.
    bool uses(const std::string& name) const {
        for (std::size_t i = 0; i < vars_.size(); ++i)
            if (vars_[i] == name) return uses_index(*root_, static_cast<int>(i));
        return false;
    }

private:
    enum class Op { num, var, add, sub, mul, div, pow, neg, fn };
    struct Node {
        Op op;
        double value = 0.0;
        int index = -1;
        std::string fn;
        std::unique_ptr<Node> a, b;
    };
    using NodePtr = std::shared_ptr<Node>;

    [[noreturn]] void fail(const std::string& msg) const {
        throw InvalidArgument("expression '" + text_ + "' at column " + std::to_string(pos_ + 1) + ": " + msg);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    static std::unique_ptr<Node> make(Op op, std::unique_ptr<Node> a = nullptr, std::unique_ptr<Node> b = nullptr) {
        auto n = std::make_unique<Node>();
        n->op = op;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }

    std::unique_ptr<Node> parse_sum() {
        auto lhs = parse_product();
        for (;;) {
            if (accept('+'))
                lhs = make(Op::add, std::move(lhs), parse_product());
            else if (accept('-'))
                lhs = make(Op::sub, std::move(lhs), parse_product());
            else
                return lhs;
        }
    }

    std::unique_ptr<Node> parse_product() {
        auto lhs = parse_unary();
        for (;;) {
            if (accept('*'))
                lhs = make(Op::mul, std::move(lhs), parse_unary());
            else if (accept('/'))
                lhs = make(Op::div, std::move(lhs), parse_unary());
            else
                return lhs;
        }
    }

    std::unique_ptr<Node> parse_unary() {
        if (accept('-')) return make(Op::neg, parse_unary());
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    std::unique_ptr<Node> parse_power() {
        auto base = parse_atom();
        if (accept('^')) return make(Op::pow, std::move(base), parse_unary());
        return base;
    }

    std::unique_ptr<Node> parse_atom() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        const char c = text_[pos_];
        if (accept('(')) {
            auto e = parse_sum();
            if (!accept(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(text_.substr(pos_), &used);
            } catch (const std::exception&) {
                fail("bad number");
            }
            pos_ += used;
            auto n = make(Op::num);
            n->value = v;
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
            const std::string name = text_.substr(start, pos_ - start);
            if (accept('(')) {
                static const std::vector<std::string> fns{"sin", "cos", "tan", "exp", "log", "sqrt", "abs"};
                if (std::find(fns.begin(), fns.end(), name) == fns.end()) fail("unknown function '" + name + "'");
                auto n = make(Op::fn, parse_sum());
                n->fn = name;
                if (!accept(')')) fail("expected ')'");
                return n;
            }
            if (name == "pi") {
                auto n = make(Op::num);
                n->value = std::numbers::pi;
                return n;
            }
            for (std::size_t i = 0; i < vars_.size(); ++i)
                if (vars_[i] == name) {
                    auto n = make(Op::var);
                    n->index = static_cast<int>(i);
                    return n;
                }
            fail("unknown variable '" + name + "'");
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    static double eval(const Node& n, const std::vector<double>& v) {
        switch (n.op) {
        case Op::num: return n.value;
        case Op::var: return v.at(static_cast<std::size_t>(n.index));
        case Op::add: return eval(*n.a, v) + eval(*n.b, v);
        case Op::sub: return eval(*n.a, v) - eval(*n.b, v);
        case Op::mul: return eval(*n.a, v) * eval(*n.b, v);
        case Op::div: return eval(*n.a, v) / eval(*n.b, v);
        case Op::pow: return std::pow(eval(*n.a, v), eval(*n.b, v));
        case Op::neg: return -eval(*n.a, v);
        case Op::fn: {
            const double x = eval(*n.a, v);
            if (n.fn == "sin") return std::sin(x);
            if (n.fn == "cos") return std::cos(x);
            if (n.fn == "tan") return std::tan(x);
            if (n.fn == "exp") return std::exp(x);
            if (n.fn == "log") return std::log(x);
            if (n.fn == "sqrt") return std::sqrt(x);
            return std::abs(x);
        }
        }
        return 0.0;
    }

    static bool uses_index(const Node& n, int i) {
        if (n.op == Op::var) return n.index == i;
        return (n.a && uses_index(*n.a, i)) || (n.b && uses_index(*n.b, i));
    }

    std::string text_;
    std::vector<std::string> vars_;
    std::size_t pos_ = 0;
    std::shared_ptr<Node> root_;
};

} // namespace dgline
