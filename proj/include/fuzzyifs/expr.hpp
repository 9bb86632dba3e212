#pragma once

/* Arithmetic expressions for map coordinates and grey-level functions.
 *
 * number     ::= digits [ "." digits ] [ ("e"|"E") ["+"|"-"] digits ]  |  "." digits [...]
 * primary    ::= number | identifier | identifier "(" expression { "," expression } ")"
 *              | "(" expression ")"
 * power      ::= primary [ ("^" | "**") unary ]          right associative
 * unary      ::= ("-" | "+") unary | power
 * term       ::= unary { ("*" | "/") unary }
 * expression ::= term { ("+" | "-") term }
 *
 * So -x^2 is -(x^2) and 2^-1 is 0.5. Functions: sin cos abs sqrt floor exp (one
 * argument), min max (two or more).
 */

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "error.hpp"

namespace fuzzyifs {

enum class Function : std::uint8_t { sin, cos, abs, sqrt, floor, exp, min, max };

class Expression {
public:
    Expression() = default;

    /// Number of declared variables; evaluate() expects exactly this many values.
    std::size_t arity() const noexcept { return variables_.size(); }
    const std::vector<std::string>& variables() const noexcept { return variables_; }

    /// Values are positional, in the order the variables were declared to parse().
    double evaluate(std::span<const double> values) const {
        if (values.size() != variables_.size())
            throw Error("expression expects " + std::to_string(variables_.size()) + " values, got " +
                        std::to_string(values.size()));
        return eval_node(root_, values);
    }

    double evaluate(const std::map<std::string, double>& bindings) const {
        std::vector<double> values;
        values.reserve(variables_.size());
        for (const auto& name : variables_) {
            auto it = bindings.find(name);
            if (it == bindings.end())
                throw Error("unbound variable '" + name + "'");
            values.push_back(it->second);
        }
        return eval_node(root_, values);
    }

    /// Fully parenthesised text that parses back to an equivalent tree.
    std::string to_string() const { return print_node(root_); }

    bool empty() const noexcept { return nodes_.empty(); }

private:
    friend class ExpressionParser;

    enum class Kind : std::uint8_t { constant, variable, negate, add, sub, mul, div, pow, call };

    struct Node {
        Kind kind{};
        double value = 0.0;
        std::uint32_t slot = 0;
        Function fn{};
        std::vector<std::uint32_t> children;
    };

    double eval_node(std::uint32_t id, std::span<const double> values) const {
        const Node& node = nodes_[id];
        switch (node.kind) {
        case Kind::constant: return node.value;
        case Kind::variable: return values[node.slot];
        case Kind::negate: return -eval_node(node.children[0], values);
        case Kind::add: return eval_node(node.children[0], values) + eval_node(node.children[1], values);
        case Kind::sub: return eval_node(node.children[0], values) - eval_node(node.children[1], values);
        case Kind::mul: return eval_node(node.children[0], values) * eval_node(node.children[1], values);
        case Kind::div: {
            const double num = eval_node(node.children[0], values);
            const double den = eval_node(node.children[1], values);
            if (den == 0.0)
                throw DomainError("division by zero");
            return num / den;
        }
        case Kind::pow: {
            const double base = eval_node(node.children[0], values);
            const double ex = eval_node(node.children[1], values);
            const double r = std::pow(base, ex);
            if (std::isnan(r) && !std::isnan(base) && !std::isnan(ex))
                throw DomainError("power of a negative base with non-integer exponent");
            if (std::isinf(r) && base == 0.0)
                throw DomainError("division by zero");
            return r;
        }
        case Kind::call: return eval_call(node, values);
        }
        return 0.0;
    }

    double eval_call(const Node& node, std::span<const double> values) const {
        const double a = eval_node(node.children[0], values);
        switch (node.fn) {
        case Function::sin: return std::sin(a);
        case Function::cos: return std::cos(a);
        case Function::abs: return std::fabs(a);
        case Function::floor: return std::floor(a);
        case Function::exp: return std::exp(a);
        case Function::sqrt:
            if (a < 0.0)
                throw DomainError("sqrt of a negative number");
            return std::sqrt(a);
        case Function::min:
        case Function::max: {
            double acc = a;
            for (std::size_t i = 1; i < node.children.size(); ++i) {
                const double b = eval_node(node.children[i], values);
                acc = node.fn == Function::min ? std::min(acc, b) : std::max(acc, b);
            }
            return acc;
        }
        }
        return 0.0;
    }

    static const char* function_name(Function fn) {
        switch (fn) {
        case Function::sin: return "sin";
        case Function::cos: return "cos";
        case Function::abs: return "abs";
        case Function::sqrt: return "sqrt";
        case Function::floor: return "floor";
        case Function::exp: return "exp";
        case Function::min: return "min";
        case Function::max: return "max";
        }
        return "?";
    }

    std::string print_node(std::uint32_t id) const {
        const Node& node = nodes_[id];
        auto bin = [&](const char* op) {
            return "(" + print_node(node.children[0]) + " " + op + " " + print_node(node.children[1]) + ")";
        };
        switch (node.kind) {
        case Kind::constant: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", node.value);
            return buf;
        }
        case Kind::variable: return variables_[node.slot];
        case Kind::negate: return "(-" + print_node(node.children[0]) + ")";
        case Kind::add: return bin("+");
        case Kind::sub: return bin("-");
        case Kind::mul: return bin("*");
        case Kind::div: return bin("/");
        case Kind::pow: return bin("^");
        case Kind::call: {
            std::string s = std::string(function_name(node.fn)) + "(";
            for (std::size_t i = 0; i < node.children.size(); ++i) {
                if (i)
                    s += ", ";
                s += print_node(node.children[i]);
            }
            return s + ")";
        }
        }
        return {};
    }

    std::vector<std::string> variables_;
    std::vector<Node> nodes_;
    std::uint32_t root_ = 0;
};

class ExpressionParser {
public:
    ExpressionParser(std::string_view source, std::vector<std::string> variables)
        : src_(source), vars_(std::move(variables)) {}

    Expression parse() {
        skip_space();
        if (pos_ >= src_.size())
            throw ParseError("empty expression", pos_);
        out_.variables_ = vars_;
        out_.root_ = expression();
        skip_space();
        if (pos_ < src_.size())
            throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
        return std::move(out_);
    }

private:
    using Kind = Expression::Kind;
    using Node = Expression::Node;

    std::uint32_t add(Node node) {
        out_.nodes_.push_back(std::move(node));
        return static_cast<std::uint32_t>(out_.nodes_.size() - 1);
    }

    std::uint32_t binary(Kind kind, std::uint32_t lhs, std::uint32_t rhs) {
        Node n;
        n.kind = kind;
        n.children = {lhs, rhs};
        return add(std::move(n));
    }

    void skip_space() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
    }

    bool accept(std::string_view tok) {
        skip_space();
        if (src_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    std::uint32_t expression() {
        std::uint32_t lhs = term();
        for (;;) {
            if (accept("+"))
                lhs = binary(Kind::add, lhs, term());
            else if (accept("-"))
                lhs = binary(Kind::sub, lhs, term());
            else
                return lhs;
        }
    }

    std::uint32_t term() {
        std::uint32_t lhs = unary();
        for (;;) {
            skip_space();
            if (src_.substr(pos_, 2) == "**")
                return lhs; // handled by power(); reaching here means a dangling operator
            if (accept("*"))
                lhs = binary(Kind::mul, lhs, unary());
            else if (accept("/"))
                lhs = binary(Kind::div, lhs, unary());
            else
                return lhs;
        }
    }

    std::uint32_t unary() {
        if (accept("-")) {
            Node n;
            n.kind = Kind::negate;
            n.children = {unary()};
            return add(std::move(n));
        }
        if (accept("+"))
            return unary();
        return power();
    }

    std::uint32_t power() {
        std::uint32_t base = primary();
        if (accept("^") || accept("**"))
            return binary(Kind::pow, base, unary());
        return base;
    }

    std::uint32_t primary() {
        skip_space();
        if (pos_ >= src_.size())
            throw ParseError("unexpected end of expression", pos_);
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
            return identifier();
        if (accept("(")) {
            std::uint32_t inner = expression();
            if (!accept(")"))
                throw ParseError("expected ')'", pos_);
            return inner;
        }
        throw ParseError(std::string("unexpected '") + c + "'", pos_);
    }

    std::uint32_t number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t k = 0;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                ++pos_;
                ++k;
            }
            return k;
        };
        std::size_t mantissa = digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            mantissa += digits();
        }
        if (mantissa == 0)
            throw ParseError("malformed number", start);
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-'))
                ++pos_;
            if (digits() == 0)
                pos_ = save; // "2e" is 2 followed by identifier e; let the caller complain
        }
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
        if (ec != std::errc() || ptr != src_.data() + pos_)
            throw ParseError("malformed number", start);
        Node n;
        n.kind = Kind::constant;
        n.value = value;
        return add(std::move(n));
    }

    std::uint32_t identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string name(src_.substr(start, pos_ - start));

        skip_space();
        if (pos_ < src_.size() && src_[pos_] == '(')
            return call(name, start);

        auto it = std::find(vars_.begin(), vars_.end(), name);
        if (it == vars_.end())
            throw ParseError("undeclared variable '" + name + "'", start);
        Node n;
        n.kind = Kind::variable;
        n.slot = static_cast<std::uint32_t>(it - vars_.begin());
        return add(std::move(n));
    }

    std::uint32_t call(const std::string& name, std::size_t start) {
        static const std::pair<const char*, Function> table[] = {
            {"sin", Function::sin},     {"cos", Function::cos}, {"abs", Function::abs},
            {"sqrt", Function::sqrt},   {"floor", Function::floor}, {"exp", Function::exp},
            {"min", Function::min},     {"max", Function::max},
        };
        const auto* entry = std::find_if(std::begin(table), std::end(table),
                                         [&](const auto& e) { return name == e.first; });
        if (entry == std::end(table))
            throw ParseError("unknown function '" + name + "'", start);

        accept("(");
        Node n;
        n.kind = Kind::call;
        n.fn = entry->second;
        n.children.push_back(expression());
        while (accept(","))
            n.children.push_back(expression());
        if (!accept(")"))
            throw ParseError("expected ')'", pos_);

        const bool variadic = n.fn == Function::min || n.fn == Function::max;
        if (variadic ? n.children.size() < 2 : n.children.size() != 1)
            throw ParseError("wrong number of arguments to '" + name + "'", start);
        return add(std::move(n));
    }

    std::string_view src_;
    std::vector<std::string> vars_;
    std::size_t pos_ = 0;
    Expression out_;
};

inline Expression parse_expression(std::string_view source, std::vector<std::string> variables = {}) {
    return ExpressionParser(source, std::move(variables)).parse();
}

/// Step table over [0,1]: piece i applies on [lower_i, lower_{i+1}), the last piece up to 1 inclusive.
class PiecewiseMap {
public:
    using Value = std::variant<double, Expression>;

    struct Piece {
        double lower = 0.0;
        Value value;
    };

    PiecewiseMap() = default;

    explicit PiecewiseMap(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {
        if (pieces_.empty())
            throw Error("piecewise map needs at least one piece");
        if (pieces_.front().lower != 0.0)
            throw Error("piecewise map must start at 0");
        for (std::size_t i = 1; i < pieces_.size(); ++i)
            if (!(pieces_[i].lower > pieces_[i - 1].lower) || pieces_[i].lower > 1.0)
                throw Error("piecewise breakpoints must increase within [0,1]");
    }

    const std::vector<Piece>& pieces() const noexcept { return pieces_; }

    double evaluate(double t) const {
        auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                                   [](double v, const Piece& p) { return v < p.lower; });
        const Piece& piece = *std::prev(it);
        if (const double* c = std::get_if<double>(&piece.value))
            return *c;
        const double arg[1] = {t};
        return std::get<Expression>(piece.value).evaluate(arg);
    }

private:
    std::vector<Piece> pieces_;
};

struct GreyValue {
    double value = 0.0;
    bool clamped = false;
};

/// Grey-level function ρ: [0,1] → [0,1], either one expression in `t` or a step table.
class GreyMap {
public:
    GreyMap() : GreyMap(parse_expression("t", {"t"})) {}
    explicit GreyMap(Expression expr) : impl_(std::move(expr)) {}
    explicit GreyMap(PiecewiseMap table) : impl_(std::move(table)) {}

    static GreyMap identity() { return GreyMap(); }

    const std::variant<Expression, PiecewiseMap>& form() const noexcept { return impl_; }

    GreyValue evaluate(double t) const {
        if (!(t >= 0.0 && t <= 1.0))
            throw DomainError("grey map argument outside [0,1]");
        double v = std::visit(
            [t](const auto& f) {
                if constexpr (std::is_same_v<std::decay_t<decltype(f)>, Expression>) {
                    const double arg[1] = {t};
                    return f.evaluate(arg);
                } else {
                    return f.evaluate(t);
                }
            },
            impl_);
        GreyValue out{v, false};
        if (!(v >= 0.0)) {
            out.value = 0.0;
            out.clamped = true;
        } else if (v > 1.0) {
            out.value = 1.0;
            out.clamped = true;
        }
        return out;
    }

private:
    std::variant<Expression, PiecewiseMap> impl_;
};

inline GreyValue eval_grey(const GreyMap& map, double t) { return map.evaluate(t); }

} // namespace fuzzyifs
