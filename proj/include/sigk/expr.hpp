#pragma once

#include <memory>
#include <string>

#include "sigk/types.hpp"

namespace sigk {

/// Variable of an expression over (x, z, xi). Indices are 0-based.
struct ExprVar {
  enum class Kind { kX, kZ, kXi };
  Kind kind = Kind::kZ;
  int index = 0;
};

/// Arithmetic expression in x1..xn, z, xi1..xin with symbolic differentiation.
///
/// Grammar:
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := '-' unary | power
///   power   := primary ('^' unary)?
///   primary := number | name | func '(' expr ')' | '(' expr ')'
///   name    := x<i> | xi<i> | z | xsq | xisq | pi
///   func    := sin | cos | tan | exp | log | sqrt | sinh | cosh | tanh
/// xsq and xisq expand to sum_i x_i^2 and sum_i xi_i^2.
class Expr {
 public:
  struct Node;

  Expr();  // the constant 0
  static Expr parse(const std::string& text, int n);
  static Expr constant(double c);
  static Expr variable(ExprVar v);

  [[nodiscard]] double eval(const Vec& x, double z, const Vec& xi) const;
  [[nodiscard]] Expr diff(ExprVar v) const;
  [[nodiscard]] std::string str() const;
  [[nodiscard]] bool is_constant() const;
  /// True if the expression mentions the variable.
  [[nodiscard]] bool depends_on(ExprVar v) const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

}  // namespace sigk
