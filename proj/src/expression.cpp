#include "robinsym/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <vector>

#include "robinsym/errors.hpp"

namespace robinsym {

struct Expression::Node {
  enum class Kind { number, x, y, r, neg, add, sub, mul, div, pow, exp, sin, cos } kind;
  double value = 0.0;
  std::shared_ptr<const Node> a, b;

  double eval(double x, double y) const {
    switch (kind) {
      case Kind::number: return value;
      case Kind::x: return x;
      case Kind::y: return y;
      case Kind::r: return std::hypot(x, y);
      case Kind::neg: return -a->eval(x, y);
      case Kind::add: return a->eval(x, y) + b->eval(x, y);
      case Kind::sub: return a->eval(x, y) - b->eval(x, y);
      case Kind::mul: return a->eval(x, y) * b->eval(x, y);
      case Kind::div: return a->eval(x, y) / b->eval(x, y);
      case Kind::pow: return std::pow(a->eval(x, y), b->eval(x, y));
      case Kind::exp: return std::exp(a->eval(x, y));
      case Kind::sin: return std::sin(a->eval(x, y));
      case Kind::cos: return std::cos(a->eval(x, y));
    }
    return std::nan("");
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind k, NodePtr a = nullptr, NodePtr b = nullptr, double v = 0.0) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  n->value = v;
  return n;
}

class Parser {
public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("expression column " + std::to_string(pos_ + 1) + ": " + what);
  }

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

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) lhs = make(Kind::add, lhs, term());
      else if (accept('-')) lhs = make(Kind::sub, lhs, term());
      else return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = factor();
    for (;;) {
      if (accept('*')) lhs = make(Kind::mul, lhs, factor());
      else if (accept('/')) lhs = make(Kind::div, lhs, factor());
      else return lhs;
    }
  }

  // Unary minus binds looser than '^', so -2^2 = -4 and 2^-1 = 0.5.
  NodePtr factor() {
    if (accept('-')) return make(Kind::neg, factor());
    NodePtr base = atom();
    if (accept('^')) return make(Kind::pow, base, factor());
    return base;
  }

  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return make(Kind::number, nullptr, nullptr, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      if (name == "pi") return make(Kind::number, nullptr, nullptr, std::numbers::pi);
      if (name == "x") return make(Kind::x);
      if (name == "y") return make(Kind::y);
      if (name == "r") return make(Kind::r);
      Kind k;
      if (name == "exp") k = Kind::exp;
      else if (name == "sin") k = Kind::sin;
      else if (name == "cos") k = Kind::cos;
      else {
        pos_ = start;
        fail("unknown name '" + name + "'");
      }
      if (!accept('(')) fail("expected '(' after " + name);
      NodePtr arg = expr();
      if (!accept(')')) fail("expected ')'");
      return make(k, arg);
    }
    if (accept('(')) {
      NodePtr e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text) {
  Parser p(text);
  return Expression(text, p.parse());
}

double Expression::operator()(double x, double y) const { return root_->eval(x, y); }

}  // namespace robinsym
