#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace impulse {

/// Reference to a differentiation / evaluation variable: either the state
/// coordinate x_{index+1} or the time symbol `t`.
struct Variable {
  enum class Kind { State, Time };
  Kind kind = Kind::State;
  std::size_t index = 0;

  static Variable state(std::size_t i) { return {Kind::State, i}; }
  static Variable time() { return {Kind::Time, 0}; }
  bool is_time() const { return kind == Kind::Time; }
  friend bool operator==(const Variable&, const Variable&) = default;
};

/// Immutable scalar expression over x1..xn and optionally t.
///
/// The node set is closed under differentiation and consists of C-infinity
/// primitives only (no abs/max). Copies share the underlying tree.
class Expression {
public:
  enum class Op { Const, Var, Time, Neg, Sin, Cos, Exp, Sqrt, Add, Sub, Mul, Div, Pow };

  struct Node {
    Op op = Op::Const;
    double value = 0.0;         // Const
    std::size_t index = 0;      // Var
    unsigned exponent = 0;      // Pow
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
  };

  /// The zero constant.
  Expression();

  static Expression constant(double v);
  static Expression variable(std::size_t index);
  static Expression time();

  // Raw constructors: build exactly the requested node.
  static Expression unary(Op op, Expression arg);
  static Expression binary(Op op, Expression lhs, Expression rhs);
  static Expression power(Expression base, unsigned exponent);

  Op op() const { return node_->op; }
  const Node& node() const { return *node_; }
  Expression lhs() const { return Expression(node_->lhs); }
  Expression rhs() const { return Expression(node_->rhs); }

  bool is_constant() const { return node_->op == Op::Const; }
  bool is_constant(double v) const { return is_constant() && node_->value == v; }

  /// IEEE evaluation; throws DomainError on division by zero or sqrt of a
  /// negative number.
  double evaluate(std::span<const double> point, double time = 0.0) const;
  double evaluate(const Eigen::VectorXd& point, double time = 0.0) const {
    return evaluate(std::span<const double>(point.data(), static_cast<std::size_t>(point.size())), time);
  }

  /// Largest state index referenced plus one (0 if none).
  std::size_t state_extent() const;
  bool uses_time() const;
  std::size_t node_count() const;

  /// Fully parenthesized infix form, re-parseable by `parse`.
  std::string to_string() const;

private:
  explicit Expression(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

// Folding constructors used by differentiation. They collapse literal zero
// and one operands and fold constant subtrees with finite results.
Expression operator+(const Expression& a, const Expression& b);
Expression operator-(const Expression& a, const Expression& b);
Expression operator*(const Expression& a, const Expression& b);
Expression operator/(const Expression& a, const Expression& b);
Expression operator-(const Expression& a);
Expression pow(const Expression& base, unsigned exponent);
Expression sin(const Expression& a);
Expression cos(const Expression& a);
Expression exp(const Expression& a);
Expression sqrt(const Expression& a);

struct ParseOptions {
  std::size_t dimension = 0;  ///< identifiers x1..x{dimension} are accepted
  bool allow_time = false;    ///< accept the identifier `t`
};

/// Parses the expression grammar
///
///   sum     := product (('+' | '-') product)*
///   product := unary (('*' | '/') unary)*
///   unary   := '-' unary | power
///   power   := primary ('^' integer)*
///   primary := number | x<k> | t | fn '(' sum ')' | '(' sum ')'
///   fn      := sin | cos | exp | sqrt
///
/// Throws ParseError (with byte offset) or UnknownSymbol.
Expression parse(std::string_view text, const ParseOptions& options);

/// Exact symbolic derivative.
Expression differentiate(const Expression& e, Variable var);

/// A vector field on R^n given by its component expressions.
class VectorField {
public:
  VectorField() = default;
  VectorField(std::size_t dimension, std::vector<Expression> components);

  /// Parses each component over x1..xn.
  static VectorField parse(const std::vector<std::string>& components, std::size_t dimension);
  static VectorField zero(std::size_t dimension);

  std::size_t dimension() const { return dimension_; }
  const Expression& operator[](std::size_t i) const { return components_[i]; }
  const std::vector<Expression>& components() const { return components_; }

  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const;
  void evaluate_into(const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> out) const;

  std::vector<std::string> to_strings() const;

private:
  std::size_t dimension_ = 0;
  std::vector<Expression> components_;
};

/// Symbolic Jacobian; entry (i, j) is d v_i / d x_j.
class Jacobian {
public:
  Jacobian() = default;
  explicit Jacobian(const VectorField& v);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const Expression& operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

  Eigen::MatrixXd evaluate(const Eigen::VectorXd& x) const;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Expression> entries_;
};

inline Jacobian jacobian(const VectorField& v) { return Jacobian(v); }

}  // namespace impulse
