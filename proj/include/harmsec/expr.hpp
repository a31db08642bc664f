#pragma once

// Scalar expression language used for every smooth coefficient function:
// literals, variables, + - * / ^, unary minus, sin cos tan exp log sqrt atan2,
// and the constant pi. Expressions are immutable and cheap to copy.

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "harmsec/dual.hpp"
#include "harmsec/error.hpp"

namespace harmsec {

using Bindings = std::map<std::string, double, std::less<>>;

class Expr {
 public:
  enum class Kind { Number, Variable, Neg, Add, Sub, Mul, Div, Pow, Call };
  enum class Func { Sin, Cos, Tan, Exp, Log, Sqrt, Atan2 };

  Expr();  // the literal 0

  static Expr number(double value);
  static Expr pi();
  static Expr variable(std::string name);
  static Expr call(Func f, std::vector<Expr> args);
  static Expr unary_minus(Expr a);

  Kind kind() const;
  double number_value() const;
  const std::string& name() const;
  Func func() const;
  const std::vector<Expr>& children() const;

  std::string to_string() const;
  std::set<std::string> free_variables() const;
  bool is_constant() const { return free_variables().empty(); }

  friend Expr operator+(Expr a, Expr b);
  friend Expr operator-(Expr a, Expr b);
  friend Expr operator*(Expr a, Expr b);
  friend Expr operator/(Expr a, Expr b);
  friend Expr pow(Expr a, Expr b);

  /// Structural (tree) equality; literals compare by value.
  friend bool operator==(const Expr& a, const Expr& b);

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node);
  static Expr binary(Kind k, Expr a, Expr b);
  std::shared_ptr<const Node> node_;
};

const char* func_name(Expr::Func f);

/// Parses `text` under the usual precedence (^ binds tightest and is
/// right-associative, then unary minus, then * /, then + -).
/// Throws SyntaxError (with byte offset) or Error{UnknownFunction}.
Expr parse(std::string_view text);

/// Replaces variables by expressions (simultaneous substitution).
Expr substitute(const Expr& e, const std::map<std::string, Expr>& repl);

/// A flattened evaluation tape over a fixed, ordered variable list.
/// Integer-literal exponents are expanded to repeated multiplication.
class Program {
 public:
  Program() = default;
  Program(const Expr& e, std::span<const std::string> variables);

  std::size_t arity() const { return arity_; }

  double run(std::span<const double> args) const;
  Dual<double> run(std::span<const Dual<double>> args) const;
  Dual<Dual<double>> run(std::span<const Dual<Dual<double>>> args) const;

  /// Value and gradient with respect to all arguments.
  double gradient(std::span<const double> x, Eigen::Ref<Eigen::VectorXd> grad) const;
  /// Value, gradient and Hessian with respect to all arguments.
  double hessian(std::span<const double> x, Eigen::Ref<Eigen::VectorXd> grad,
                 Eigen::Ref<Eigen::MatrixXd> hess) const;

  struct Instr {
    enum class Op {
      Const, Var, Neg, Add, Sub, Mul, Div, PowInt, PowConst, PowGeneral,
      Sin, Cos, Tan, Exp, Log, Sqrt, Atan2
    } op;
    double c = 0.0;
    int i = 0;
  };

 private:
  template <class T>
  T exec(std::span<const T> args) const;

  std::vector<Instr> tape_;
  std::size_t arity_ = 0;
  int max_stack_ = 0;
};

double eval(const Expr& e, const Bindings& bindings);

struct Partials {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;  // empty unless order == 2
};

/// Exact forward-mode partials with respect to `wrt` (order 1 or 2).
/// Variables bound but not listed in `wrt` are held constant.
Partials derivative(const Expr& e, const Bindings& bindings,
                    std::span<const std::string> wrt, int order);

}  // namespace harmsec
