#pragma once

// Closed-form coordinate expressions: parsing, printing and evaluation over
// plain doubles or jets.
//
// Grammar (lowest to highest precedence):
//   expr    := term (('+' | '-') term)*
//   term    := power (('*' | '/') power)*
//   power   := unary ('^' power)?          right-associative
//   unary   := '-' unary | primary
//   primary := number | coord | call | '(' expr ')'
//   coord   := 'x1' .. 'x8'                 1-based in text, 0-based in the AST
//   call    := name '(' expr (',' expr)* ')'   sqrt/1 exp/1 ln/1 sin/1 cos/1 pow/2
//
// Unary minus binds tighter than '^', so "-x1^2" is (-x1)^2.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "finsler/error.hpp"
#include "finsler/jet.hpp"

namespace finsler {

inline constexpr int kMaxCoordinates = 8;

enum class BinaryOp { add, sub, mul, div, pow };
enum class Function { sqrt, exp, ln, sin, cos, pow };

inline const char* function_name(Function f) {
  switch (f) {
    case Function::sqrt: return "sqrt";
    case Function::exp: return "exp";
    case Function::ln: return "ln";
    case Function::sin: return "sin";
    case Function::cos: return "cos";
    case Function::pow: return "pow";
  }
  return "?";
}

inline int function_arity(Function f) { return f == Function::pow ? 2 : 1; }

class Expr {
public:
  struct Node;
  using NodePtr = std::shared_ptr<const Node>;

  struct Number {
    double value;
  };
  struct Coord {
    int index;
  };
  struct Negate {
    NodePtr operand;
  };
  struct Binary {
    BinaryOp op;
    NodePtr lhs;
    NodePtr rhs;
  };
  struct Call {
    Function function;
    std::vector<NodePtr> args;
  };
  struct Node {
    std::variant<Number, Coord, Negate, Binary, Call> data;
  };

  Expr() : Expr(number(0.0)) {}

  static Expr number(double v) { return Expr(std::make_shared<const Node>(Node{Number{v}})); }
  static Expr coord(int index) {
    if (index < 0 || index >= kMaxCoordinates) throw IndexError("coordinate index out of range");
    return Expr(std::make_shared<const Node>(Node{Coord{index}}));
  }
  static Expr call(Function f, std::vector<Expr> args) {
    if (static_cast<int>(args.size()) != function_arity(f))
      throw ArityError(std::string(function_name(f)) + " expects " +
                           std::to_string(function_arity(f)) + " argument(s)",
                       0);
    std::vector<NodePtr> nodes;
    for (auto& a : args) nodes.push_back(a.node_);
    return Expr(std::make_shared<const Node>(Node{Call{f, std::move(nodes)}}));
  }

  friend Expr operator-(const Expr& a) { return Expr(std::make_shared<const Node>(Node{Negate{a.node_}})); }
  friend Expr operator+(const Expr& a, const Expr& b) { return binary(BinaryOp::add, a, b); }
  friend Expr operator-(const Expr& a, const Expr& b) { return binary(BinaryOp::sub, a, b); }
  friend Expr operator*(const Expr& a, const Expr& b) { return binary(BinaryOp::mul, a, b); }
  friend Expr operator/(const Expr& a, const Expr& b) { return binary(BinaryOp::div, a, b); }
  friend Expr pow(const Expr& a, const Expr& b) { return binary(BinaryOp::pow, a, b); }
  friend Expr sqrt(const Expr& a) { return call(Function::sqrt, {a}); }

  const Node& node() const noexcept { return *node_; }

  /// Largest 0-based coordinate index referenced, or -1.
  int max_coordinate() const { return max_coordinate(*node_); }

  /// Fully parenthesized text that parses back to the same tree.
  std::string to_string() const {
    std::string out;
    print(*node_, out);
    return out;
  }

  double eval(std::span<const double> point) const { return eval(*node_, point); }

  /// Evaluate with coordinate i replaced by `coords[i]`.
  Jet eval(std::span<const Jet> coords) const {
    if (coords.empty()) throw IndexError("no coordinate jets supplied");
    return eval(*node_, coords);
  }

  /// Evaluate with coordinate i lifted as jet variable i at `point[i]`.
  Jet eval_jet(const JetContextPtr& ctx, std::span<const double> point) const {
    const int needed = max_coordinate() + 1;
    if (static_cast<int>(point.size()) < needed)
      throw IndexError("evaluation point has " + std::to_string(point.size()) +
                       " coordinates, expression needs " + std::to_string(needed));
    std::vector<Jet> coords;
    coords.reserve(point.size());
    for (std::size_t i = 0; i < point.size(); ++i)
      coords.push_back(Jet::variable(ctx, static_cast<int>(i), point[i]));
    if (coords.empty()) coords.push_back(Jet::constant(ctx, 0.0));
    return eval(*node_, coords);
  }

  friend bool operator==(const Expr& a, const Expr& b) { return equal(*a.node_, *b.node_); }

private:
  explicit Expr(NodePtr node) : node_(std::move(node)) {}

  static Expr binary(BinaryOp op, const Expr& a, const Expr& b) {
    return Expr(std::make_shared<const Node>(Node{Binary{op, a.node_, b.node_}}));
  }

  static int max_coordinate(const Node& n) {
    return std::visit(
        [](const auto& d) -> int {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Number>) return -1;
          else if constexpr (std::is_same_v<T, Coord>) return d.index;
          else if constexpr (std::is_same_v<T, Negate>) return max_coordinate(*d.operand);
          else if constexpr (std::is_same_v<T, Binary>)
            return std::max(max_coordinate(*d.lhs), max_coordinate(*d.rhs));
          else {
            int m = -1;
            for (const auto& a : d.args) m = std::max(m, max_coordinate(*a));
            return m;
          }
        },
        n.data);
  }

  static bool equal(const Node& a, const Node& b) {
    if (a.data.index() != b.data.index()) return false;
    return std::visit(
        [&b](const auto& da) -> bool {
          using T = std::decay_t<decltype(da)>;
          const auto& db = std::get<T>(b.data);
          if constexpr (std::is_same_v<T, Number>) return da.value == db.value;
          else if constexpr (std::is_same_v<T, Coord>) return da.index == db.index;
          else if constexpr (std::is_same_v<T, Negate>) return equal(*da.operand, *db.operand);
          else if constexpr (std::is_same_v<T, Binary>)
            return da.op == db.op && equal(*da.lhs, *db.lhs) && equal(*da.rhs, *db.rhs);
          else {
            if (da.function != db.function || da.args.size() != db.args.size()) return false;
            for (std::size_t i = 0; i < da.args.size(); ++i)
              if (!equal(*da.args[i], *db.args[i])) return false;
            return true;
          }
        },
        a.data);
  }

  static void print(const Node& n, std::string& out) {
    std::visit(
        [&out](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Number>) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", std::abs(d.value));
            if (std::signbit(d.value)) out += "(-";
            out += buf;
            if (std::signbit(d.value)) out += ")";
          } else if constexpr (std::is_same_v<T, Coord>) {
            out += "x" + std::to_string(d.index + 1);
          } else if constexpr (std::is_same_v<T, Negate>) {
            out += "(-";
            print(*d.operand, out);
            out += ")";
          } else if constexpr (std::is_same_v<T, Binary>) {
            static constexpr char symbols[] = {'+', '-', '*', '/', '^'};
            out += "(";
            print(*d.lhs, out);
            out += symbols[static_cast<int>(d.op)];
            print(*d.rhs, out);
            out += ")";
          } else {
            out += function_name(d.function);
            out += "(";
            for (std::size_t i = 0; i < d.args.size(); ++i) {
              if (i) out += ",";
              print(*d.args[i], out);
            }
            out += ")";
          }
        },
        n.data);
  }

  static double eval(const Node& n, std::span<const double> x) {
    return std::visit(
        [x](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Number>) return d.value;
          else if constexpr (std::is_same_v<T, Coord>) {
            if (d.index >= static_cast<int>(x.size())) throw IndexError("coordinate out of range");
            return x[static_cast<std::size_t>(d.index)];
          } else if constexpr (std::is_same_v<T, Negate>) return -eval(*d.operand, x);
          else if constexpr (std::is_same_v<T, Binary>) {
            const double a = eval(*d.lhs, x);
            const double b = eval(*d.rhs, x);
            switch (d.op) {
              case BinaryOp::add: return a + b;
              case BinaryOp::sub: return a - b;
              case BinaryOp::mul: return a * b;
              case BinaryOp::div:
                if (!(std::abs(b) >= kDefaultDivisionFloor)) throw DegenerateValue("division by zero");
                return a / b;
              case BinaryOp::pow: return scalar_pow(a, b, max_coordinate(*d.rhs) < 0);
            }
            return 0.0;
          } else {
            const double a = eval(*d.args[0], x);
            switch (d.function) {
              case Function::sqrt:
                if (!(a > 0.0)) throw DomainError("sqrt of nonpositive value");
                return std::sqrt(a);
              case Function::exp: return std::exp(a);
              case Function::ln:
                if (!(a > 0.0)) throw DomainError("ln of nonpositive value");
                return std::log(a);
              case Function::sin: return std::sin(a);
              case Function::cos: return std::cos(a);
              case Function::pow:
                return scalar_pow(a, eval(*d.args[1], x), max_coordinate(*d.args[1]) < 0);
            }
            return 0.0;
          }
        },
        n.data);
  }

  static double scalar_pow(double a, double b, bool constant_exponent) {
    if (constant_exponent && b == std::trunc(b) && std::abs(b) <= 64.0) {
      if (b < 0 && !(std::abs(a) >= kDefaultDivisionFloor)) throw DegenerateValue("negative power of zero");
      return std::pow(a, b);
    }
    if (!(a > 0.0)) throw DomainError("fractional power of nonpositive value");
    return std::pow(a, b);
  }

  // Coordinate-free exponents are folded to a real power (exact for integers).
  static Jet jet_pow(const Jet& a, const Node& exponent, std::span<const Jet> x) {
    if (max_coordinate(exponent) < 0) return pow(a, eval(exponent, std::span<const double>{}));
    return pow(a, eval(exponent, x));
  }

  static Jet eval(const Node& n, std::span<const Jet> x) {
    return std::visit(
        [x](const auto& d) -> Jet {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Number>) return Jet::constant(x[0].context(), d.value);
          else if constexpr (std::is_same_v<T, Coord>) {
            if (d.index >= static_cast<int>(x.size())) throw IndexError("coordinate out of range");
            return x[static_cast<std::size_t>(d.index)];
          } else if constexpr (std::is_same_v<T, Negate>) return -eval(*d.operand, x);
          else if constexpr (std::is_same_v<T, Binary>) {
            if (d.op == BinaryOp::pow) return jet_pow(eval(*d.lhs, x), *d.rhs, x);
            const Jet a = eval(*d.lhs, x);
            const Jet b = eval(*d.rhs, x);
            switch (d.op) {
              case BinaryOp::add: return a + b;
              case BinaryOp::sub: return a - b;
              case BinaryOp::mul: return a * b;
              default: return a / b;
            }
          } else {
            if (d.function == Function::pow) return jet_pow(eval(*d.args[0], x), *d.args[1], x);
            const Jet a = eval(*d.args[0], x);
            switch (d.function) {
              case Function::sqrt: return sqrt(a);
              case Function::exp: return exp(a);
              case Function::ln: return log(a);
              case Function::sin: return sin(a);
              default: return cos(a);
            }
          }
        },
        n.data);
  }

  NodePtr node_;
};

namespace detail {

class Parser {
public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr parse() {
    Expr e = expression();
    skip_space();
    if (pos_ != text_.size()) throw SyntaxError(std::string("unexpected '") + text_[pos_] + "'", pos_);
    return e;
  }

private:
  Expr expression() {
    Expr lhs = term();
    for (;;) {
      skip_space();
      if (accept('+')) lhs = lhs + term();
      else if (accept('-')) lhs = lhs - term();
      else return lhs;
    }
  }

  Expr term() {
    Expr lhs = power();
    for (;;) {
      skip_space();
      if (accept('*')) lhs = lhs * power();
      else if (accept('/')) lhs = lhs / power();
      else return lhs;
    }
  }

  Expr power() {
    Expr base = unary();
    skip_space();
    if (accept('^')) return pow(base, power());
    return base;
  }

  Expr unary() {
    skip_space();
    if (accept('-')) return -unary();
    return primary();
  }

  Expr primary() {
    skip_space();
    if (pos_ >= text_.size()) throw SyntaxError("unexpected end of expression", pos_);
    const char ch = text_[pos_];
    if (accept('(')) {
      Expr inner = expression();
      skip_space();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') return identifier();
    throw SyntaxError(std::string("unexpected '") + ch + "'", pos_);
  }

  Expr number() {
    const std::size_t start = pos_;
    auto digits = [this] {
      std::size_t n = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_, ++n;
      return n;
    };
    std::size_t mantissa = digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0) throw SyntaxError("malformed number", start);
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      const std::size_t exp_pos = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (digits() == 0) throw SyntaxError("malformed exponent", exp_pos);
    }
    const std::string literal(text_.substr(start, pos_ - start));
    return Expr::number(std::strtod(literal.c_str(), nullptr));
  }

  Expr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string name(text_.substr(start, pos_ - start));

    if (name.size() >= 2 && name[0] == 'x' &&
        name.find_first_not_of("0123456789", 1) == std::string::npos) {
      const int index = std::atoi(name.c_str() + 1);
      if (index < 1 || index > kMaxCoordinates || name[1] == '0')
        throw UnknownIdentifier("unknown coordinate '" + name + "'", start);
      return Expr::coord(index - 1);
    }

    static constexpr Function functions[] = {Function::sqrt, Function::exp, Function::ln,
                                             Function::sin,  Function::cos, Function::pow};
    for (Function f : functions) {
      if (name != function_name(f)) continue;
      skip_space();
      expect('(');
      std::vector<Expr> args;
      args.push_back(expression());
      skip_space();
      while (accept(',')) {
        args.push_back(expression());
        skip_space();
      }
      expect(')');
      if (static_cast<int>(args.size()) != function_arity(f))
        throw ArityError(name + " expects " + std::to_string(function_arity(f)) + " argument(s), got " +
                             std::to_string(args.size()),
                         start);
      return Expr::call(f, std::move(args));
    }
    throw UnknownIdentifier("unknown identifier '" + name + "'", start);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= text_.size()) throw SyntaxError(std::string("expected '") + c + "' before end", pos_);
      throw SyntaxError(std::string("expected '") + c + "', found '" + text_[pos_] + "'", pos_);
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expr parse_expression(std::string_view text) { return detail::Parser(text).parse(); }

}  // namespace finsler
