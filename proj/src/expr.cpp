#include "timefreeze/expr.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace timefreeze {

namespace expr_detail {

enum class Op { Const, StateVar, ControlVar, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Tanh };

struct Node {
  Op op;
  double value = 0.0;  // Const
  int index = 0;       // variables
  std::shared_ptr<const Node> a, b;
};

using NodePtr = std::shared_ptr<const Node>;

// double resolves to the std functions; dual types are found through ADL.
using std::abs;
using std::cos;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sqrt;
using std::tanh;

template <class T>
T eval_node(const Node& n, std::span<const T> x, std::span<const T> u) {
  switch (n.op) {
    case Op::Const: return T(n.value);
    case Op::StateVar: return x[n.index];
    case Op::ControlVar: return u[n.index];
    case Op::Add: return eval_node(*n.a, x, u) + eval_node(*n.b, x, u);
    case Op::Sub: return eval_node(*n.a, x, u) - eval_node(*n.b, x, u);
    case Op::Mul: return eval_node(*n.a, x, u) * eval_node(*n.b, x, u);
    case Op::Div: return eval_node(*n.a, x, u) / eval_node(*n.b, x, u);
    case Op::Pow: {
      // Exponent restricted to constants at parse time.
      return pow(eval_node(*n.a, x, u), n.b->value);
    }
    case Op::Neg: return -eval_node(*n.a, x, u);
    case Op::Sin: return sin(eval_node(*n.a, x, u));
    case Op::Cos: return cos(eval_node(*n.a, x, u));
    case Op::Tan: {
      T v = eval_node(*n.a, x, u);
      return sin(v) / cos(v);
    }
    case Op::Exp: return exp(eval_node(*n.a, x, u));
    case Op::Log: return log(eval_node(*n.a, x, u));
    case Op::Sqrt: return sqrt(eval_node(*n.a, x, u));
    case Op::Abs: return abs(eval_node(*n.a, x, u));
    case Op::Tanh: return tanh(eval_node(*n.a, x, u));
  }
  throw std::logic_error("unreachable");
}

class Parser {
public:
  Parser(const std::string& text, int n_x, int n_u) : text_(text), n_x_(n_x), n_u_(n_u) {}

  NodePtr parse() {
    NodePtr e = expression();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw std::invalid_argument("expression error at position " + std::to_string(pos_) + ": " + msg + " in \"" +
                                text_ + "\"");
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expression() {
    NodePtr left = term();
    for (;;) {
      if (consume('+'))
        left = binary(Op::Add, left, term());
      else if (consume('-'))
        left = binary(Op::Sub, left, term());
      else
        return left;
    }
  }

  NodePtr term() {
    NodePtr left = factor();
    for (;;) {
      if (consume('*'))
        left = binary(Op::Mul, left, factor());
      else if (consume('/'))
        left = binary(Op::Div, left, factor());
      else
        return left;
    }
  }

  NodePtr factor() {
    if (consume('-')) {
      auto n = std::make_shared<Node>();
      n->op = Op::Neg;
      n->a = factor();
      return n;
    }
    if (consume('+')) return factor();
    NodePtr base = primary();
    if (consume('^')) {
      NodePtr exponent = factor();
      if (exponent->op != Op::Const && !(exponent->op == Op::Neg && exponent->a->op == Op::Const))
        fail("exponent must be a constant");
      double p = exponent->op == Op::Const ? exponent->value : -exponent->a->value;
      auto c = std::make_shared<Node>();
      c->op = Op::Const;
      c->value = p;
      return binary(Op::Pow, base, c);
    }
    return base;
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    if (consume('(')) {
      NodePtr e = expression();
      if (!consume(')')) fail("missing closing parenthesis");
      return e;
    }
    fail("expected a number, variable, function or parenthesis");
  }

  NodePtr number() {
    size_t end = pos_;
    while (end < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[end])) || text_[end] == '.' || text_[end] == 'e' ||
            text_[end] == 'E' || ((text_[end] == '+' || text_[end] == '-') && end > pos_ &&
                                  (text_[end - 1] == 'e' || text_[end - 1] == 'E'))))
      ++end;
    auto n = std::make_shared<Node>();
    n->op = Op::Const;
    try {
      n->value = std::stod(text_.substr(pos_, end - pos_));
    } catch (const std::exception&) {
      fail("malformed number");
    }
    pos_ = end;
    return n;
  }

  NodePtr identifier() {
    size_t end = pos_;
    while (end < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_'))
      ++end;
    const std::string name = text_.substr(pos_, end - pos_);
    pos_ = end;

    if (name == "pi") return constant(std::numbers::pi);
    if (name == "e") return constant(std::numbers::e);

    static const std::pair<const char*, Op> funcs[] = {
        {"sin", Op::Sin}, {"cos", Op::Cos},   {"tan", Op::Tan}, {"exp", Op::Exp},
        {"log", Op::Log}, {"sqrt", Op::Sqrt}, {"abs", Op::Abs}, {"tanh", Op::Tanh},
    };
    for (const auto& [fname, op] : funcs) {
      if (name == fname) {
        if (!consume('(')) fail("function " + name + " needs parentheses");
        auto n = std::make_shared<Node>();
        n->op = op;
        n->a = expression();
        if (!consume(')')) fail("missing closing parenthesis");
        return n;
      }
    }

    // Variables: x<i>, u<i>, q<i>, v<i>.
    if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'u' || name[0] == 'q' || name[0] == 'v')) {
      bool digits = true;
      for (size_t i = 1; i < name.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
      if (digits) {
        const int idx = std::stoi(name.substr(1));
        auto n = std::make_shared<Node>();
        if (name[0] == 'u') {
          if (idx >= n_u_) fail("control index out of range: " + name);
          n->op = Op::ControlVar;
          n->index = idx;
        } else {
          n->op = Op::StateVar;
          int offset = 0;
          if (name[0] == 'q' || name[0] == 'v') {
            if (n_x_ % 2 != 0) fail("q/v variables need an even state dimension");
            if (idx >= n_x_ / 2) fail("state index out of range: " + name);
            offset = name[0] == 'v' ? n_x_ / 2 : 0;
          } else if (idx >= n_x_) {
            fail("state index out of range: " + name);
          }
          n->index = idx + offset;
        }
        return n;
      }
    }
    fail("unknown identifier: " + name);
  }

  NodePtr constant(double v) {
    auto n = std::make_shared<Node>();
    n->op = Op::Const;
    n->value = v;
    return n;
  }

  NodePtr binary(Op op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }

  const std::string& text_;
  int n_x_, n_u_;
  size_t pos_ = 0;
};

}  // namespace expr_detail

template <class T>
T Expression::eval(std::span<const T> x, std::span<const T> u) const {
  return expr_detail::eval_node<T>(*root_, x, u);
}

template double Expression::eval<double>(std::span<const double>, std::span<const double>) const;
template ad::Dual Expression::eval<ad::Dual>(std::span<const ad::Dual>, std::span<const ad::Dual>) const;
template ad::Grad Expression::eval<ad::Grad>(std::span<const ad::Grad>, std::span<const ad::Grad>) const;
template ad::GradDir Expression::eval<ad::GradDir>(std::span<const ad::GradDir>, std::span<const ad::GradDir>) const;
template ad::Hyper Expression::eval<ad::Hyper>(std::span<const ad::Hyper>, std::span<const ad::Hyper>) const;

Expression parse_expression(const std::string& text, int n_x, int n_u) {
  Expression e;
  e.root_ = expr_detail::Parser(text, n_x, n_u).parse();
  e.source_ = text;
  return e;
}

FieldFunc make_expression_field(const std::vector<std::string>& components, int n_x, int n_u) {
  if (static_cast<int>(components.size()) != n_x)
    throw std::invalid_argument("need exactly one field expression per state component");
  std::vector<Expression> exprs;
  exprs.reserve(components.size());
  for (const auto& c : components) exprs.push_back(parse_expression(c, n_x, n_u));
  return FieldFunc::make(n_x, n_u, [exprs](auto x, auto u, auto out) {
    for (size_t i = 0; i < exprs.size(); ++i) out[i] = exprs[i].eval(x, u);
  });
}

}  // namespace timefreeze
