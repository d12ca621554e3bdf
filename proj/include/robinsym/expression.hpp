#pragma once

// Closed-form source expressions over chart coordinates.
//
// Grammar:
//   expr   := term (('+' | '-') term)*
//   term   := factor (('*' | '/') factor)*
//   factor := unary ('^' factor)?          right associative
//   unary  := '-' unary | atom
//   atom   := number | 'pi' | 'x' | 'y' | 'r' | func '(' expr ')' | '(' expr ')'
//   func   := 'exp' | 'sin' | 'cos'

#include <memory>
#include <string>

#include "robinsym/mesh.hpp"

namespace robinsym {

class Expression {
public:
  struct Node;

  /// Throws ParseError with the offending column.
  static Expression parse(const std::string& text);

  double operator()(double x, double y) const;
  double operator()(Point2 p) const { return (*this)(p.x, p.y); }
  const std::string& text() const noexcept { return text_; }

private:
  Expression(std::string text, std::shared_ptr<const Node> root) : text_(std::move(text)), root_(std::move(root)) {}

  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace robinsym
