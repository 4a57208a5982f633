#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "timefreeze/functions.hpp"

namespace timefreeze {

// Arithmetic expression parser for user-defined vector fields. Variables:
// x0..x{n-1} (whole state), q0.., v0.. (position/velocity halves of a
// mechanical state) and u0.. (controls); constants pi and e; functions
// sin, cos, tan, exp, log, sqrt, abs, tanh; operators + - * / ^ and unary
// minus. Expressions evaluate on every dual flavor, so parsed fields are
// differentiable.

namespace expr_detail {
struct Node;
}

class Expression {
public:
  Expression() = default;

  template <class T>
  T eval(std::span<const T> x, std::span<const T> u) const;

  const std::string& source() const { return source_; }

  friend Expression parse_expression(const std::string& text, int n_x, int n_u);

private:
  std::shared_ptr<const expr_detail::Node> root_;
  std::string source_;
};

/// Throws std::invalid_argument with a position-annotated message on parse
/// errors or out-of-range variable references.
Expression parse_expression(const std::string& text, int n_x, int n_u);

/// Vector field from one expression per state component.
FieldFunc make_expression_field(const std::vector<std::string>& components, int n_x, int n_u);

}  // namespace timefreeze
