#include "impulse/expr.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>

#include "impulse/error.hpp"

namespace impulse {

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make_node(Expression::Node n) { return std::make_shared<const Expression::Node>(std::move(n)); }

double eval_node(const Expression::Node& n, std::span<const double> x, double t) {
  using Op = Expression::Op;
  switch (n.op) {
    case Op::Const:
      return n.value;
    case Op::Var:
      return x[n.index];
    case Op::Time:
      return t;
    case Op::Neg:
      return -eval_node(*n.lhs, x, t);
    case Op::Sin:
      return std::sin(eval_node(*n.lhs, x, t));
    case Op::Cos:
      return std::cos(eval_node(*n.lhs, x, t));
    case Op::Exp:
      return std::exp(eval_node(*n.lhs, x, t));
    case Op::Sqrt: {
      const double a = eval_node(*n.lhs, x, t);
      if (a < 0.0) throw DomainError("sqrt of negative value " + std::to_string(a));
      return std::sqrt(a);
    }
    case Op::Add:
      return eval_node(*n.lhs, x, t) + eval_node(*n.rhs, x, t);
    case Op::Sub:
      return eval_node(*n.lhs, x, t) - eval_node(*n.rhs, x, t);
    case Op::Mul:
      return eval_node(*n.lhs, x, t) * eval_node(*n.rhs, x, t);
    case Op::Div: {
      const double num = eval_node(*n.lhs, x, t);
      const double den = eval_node(*n.rhs, x, t);
      if (den == 0.0) throw DomainError("division by zero");
      return num / den;
    }
    case Op::Pow: {
      const double b = eval_node(*n.lhs, x, t);
      double r = 1.0;
      for (unsigned k = 0; k < n.exponent; ++k) r *= b;
      return r;
    }
  }
  return 0.0;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print_node(const Expression::Node& n, std::string& out) {
  using Op = Expression::Op;
  auto fn = [&](const char* name) {
    out += name;
    out += '(';
    print_node(*n.lhs, out);
    out += ')';
  };
  auto bin = [&](const char* sym) {
    out += '(';
    print_node(*n.lhs, out);
    out += sym;
    print_node(*n.rhs, out);
    out += ')';
  };
  switch (n.op) {
    case Op::Const:
      if (n.value < 0.0 || std::signbit(n.value)) {
        out += "(-" + format_number(-n.value) + ")";
      } else {
        out += format_number(n.value);
      }
      return;
    case Op::Var:
      out += "x" + std::to_string(n.index + 1);
      return;
    case Op::Time:
      out += "t";
      return;
    case Op::Neg:
      out += "(-";
      print_node(*n.lhs, out);
      out += ')';
      return;
    case Op::Sin: fn("sin"); return;
    case Op::Cos: fn("cos"); return;
    case Op::Exp: fn("exp"); return;
    case Op::Sqrt: fn("sqrt"); return;
    case Op::Add: bin(" + "); return;
    case Op::Sub: bin(" - "); return;
    case Op::Mul: bin(" * "); return;
    case Op::Div: bin(" / "); return;
    case Op::Pow:
      out += '(';
      print_node(*n.lhs, out);
      out += "^" + std::to_string(n.exponent) + ")";
      return;
  }
}

// Recursive-descent parser over the byte string.
class Parser {
public:
  Parser(std::string_view text, const ParseOptions& opts) : text_(text), opts_(opts) {}

  Expression run() {
    Expression e = sum();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(pos_, msg); }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' || text_[pos_] == '\r'))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expression sum() {
    Expression e = product();
    for (;;) {
      if (accept('+')) {
        e = Expression::binary(Expression::Op::Add, e, product());
      } else if (accept('-')) {
        e = Expression::binary(Expression::Op::Sub, e, product());
      } else {
        return e;
      }
    }
  }

  Expression product() {
    Expression e = unary();
    for (;;) {
      if (accept('*')) {
        e = Expression::binary(Expression::Op::Mul, e, unary());
      } else if (accept('/')) {
        e = Expression::binary(Expression::Op::Div, e, unary());
      } else {
        return e;
      }
    }
  }

  Expression unary() {
    if (accept('-')) return Expression::unary(Expression::Op::Neg, unary());
    return power();
  }

  Expression power() {
    Expression e = primary();
    while (accept('^')) {
      skip_ws();
      const std::size_t start = pos_;
      while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
      if (start == pos_) fail("exponent must be a non-negative integer literal");
      unsigned k = 0;
      auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, k);
      if (ec != std::errc{} || ptr != text_.data() + pos_) {
        pos_ = start;
        fail("exponent out of range");
      }
      e = Expression::power(e, k);
    }
    return e;
  }

  Expression primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expression e = sum();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if ((c >= '0' && c <= '9') || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  Expression number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
    };
    digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      const std::size_t exp_start = pos_;
      digits();
      if (exp_start == pos_) pos_ = save;
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (ec != std::errc{} || ptr != text_.data() + pos_ || !std::isfinite(v)) {
      pos_ = start;
      fail("malformed number");
    }
    return Expression::constant(v);
  }

  Expression identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string name(text_.substr(start, pos_ - start));

    static const std::pair<const char*, Expression::Op> functions[] = {
        {"sin", Expression::Op::Sin}, {"cos", Expression::Op::Cos},
        {"exp", Expression::Op::Exp}, {"sqrt", Expression::Op::Sqrt}};
    for (const auto& [fname, op] : functions) {
      if (name == fname) {
        if (!accept('(')) fail("expected '(' after " + name);
        Expression arg = sum();
        if (!accept(')')) fail("expected ')'");
        return Expression::unary(op, arg);
      }
    }
    if (name == "t") {
      if (!opts_.allow_time) throw UnknownSymbol(name, start);
      return Expression::time();
    }
    if (name.size() >= 2 && name[0] == 'x' && name[1] != '0') {
      std::size_t k = 0;
      auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), k);
      if (ec == std::errc{} && ptr == name.data() + name.size() && k >= 1 && k <= opts_.dimension)
        return Expression::variable(k - 1);
    }
    throw UnknownSymbol(name, start);
  }

  std::string_view text_;
  ParseOptions opts_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression() : node_(make_node({})) {}

Expression Expression::constant(double v) {
  Node n;
  n.op = Op::Const;
  n.value = v;
  return Expression(make_node(std::move(n)));
}

Expression Expression::variable(std::size_t index) {
  Node n;
  n.op = Op::Var;
  n.index = index;
  return Expression(make_node(std::move(n)));
}

Expression Expression::time() {
  Node n;
  n.op = Op::Time;
  return Expression(make_node(std::move(n)));
}

Expression Expression::unary(Op op, Expression arg) {
  Node n;
  n.op = op;
  n.lhs = arg.node_;
  return Expression(make_node(std::move(n)));
}

Expression Expression::binary(Op op, Expression lhs, Expression rhs) {
  Node n;
  n.op = op;
  n.lhs = lhs.node_;
  n.rhs = rhs.node_;
  return Expression(make_node(std::move(n)));
}

Expression Expression::power(Expression base, unsigned exponent) {
  Node n;
  n.op = Op::Pow;
  n.exponent = exponent;
  n.lhs = base.node_;
  return Expression(make_node(std::move(n)));
}

double Expression::evaluate(std::span<const double> point, double time) const {
  return eval_node(*node_, point, time);
}

std::size_t Expression::state_extent() const {
  std::size_t extent = 0;
  std::function<void(const Node&)> walk = [&](const Node& n) {
    if (n.op == Op::Var) extent = std::max(extent, n.index + 1);
    if (n.lhs) walk(*n.lhs);
    if (n.rhs) walk(*n.rhs);
  };
  walk(*node_);
  return extent;
}

bool Expression::uses_time() const {
  std::function<bool(const Node&)> walk = [&](const Node& n) -> bool {
    if (n.op == Op::Time) return true;
    return (n.lhs && walk(*n.lhs)) || (n.rhs && walk(*n.rhs));
  };
  return walk(*node_);
}

std::size_t Expression::node_count() const {
  std::function<std::size_t(const Node&)> walk = [&](const Node& n) -> std::size_t {
    return 1 + (n.lhs ? walk(*n.lhs) : 0) + (n.rhs ? walk(*n.rhs) : 0);
  };
  return walk(*node_);
}

std::string Expression::to_string() const {
  std::string out;
  print_node(*node_, out);
  return out;
}

namespace {

Expression fold_if_finite(double v, Expression fallback) {
  return std::isfinite(v) ? Expression::constant(v) : fallback;
}

}  // namespace

Expression operator+(const Expression& a, const Expression& b) {
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  Expression raw = Expression::binary(Expression::Op::Add, a, b);
  if (a.is_constant() && b.is_constant()) return fold_if_finite(a.node().value + b.node().value, raw);
  return raw;
}

Expression operator-(const Expression& a, const Expression& b) {
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return -b;
  Expression raw = Expression::binary(Expression::Op::Sub, a, b);
  if (a.is_constant() && b.is_constant()) return fold_if_finite(a.node().value - b.node().value, raw);
  return raw;
}

Expression operator*(const Expression& a, const Expression& b) {
  if (a.is_constant(0.0) || b.is_constant(0.0)) return Expression::constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  Expression raw = Expression::binary(Expression::Op::Mul, a, b);
  if (a.is_constant() && b.is_constant()) return fold_if_finite(a.node().value * b.node().value, raw);
  return raw;
}

Expression operator/(const Expression& a, const Expression& b) {
  if (b.is_constant(1.0)) return a;
  Expression raw = Expression::binary(Expression::Op::Div, a, b);
  if (a.is_constant() && b.is_constant() && b.node().value != 0.0)
    return fold_if_finite(a.node().value / b.node().value, raw);
  return raw;
}

Expression operator-(const Expression& a) {
  if (a.is_constant()) return Expression::constant(-a.node().value);
  if (a.op() == Expression::Op::Neg) return a.lhs();
  return Expression::unary(Expression::Op::Neg, a);
}

Expression pow(const Expression& base, unsigned exponent) {
  if (exponent == 0) return Expression::constant(1.0);
  if (exponent == 1) return base;
  if (base.is_constant()) {
    double r = 1.0;
    for (unsigned k = 0; k < exponent; ++k) r *= base.node().value;
    return fold_if_finite(r, Expression::power(base, exponent));
  }
  return Expression::power(base, exponent);
}

Expression sin(const Expression& a) {
  if (a.is_constant()) return Expression::constant(std::sin(a.node().value));
  return Expression::unary(Expression::Op::Sin, a);
}

Expression cos(const Expression& a) {
  if (a.is_constant()) return Expression::constant(std::cos(a.node().value));
  return Expression::unary(Expression::Op::Cos, a);
}

Expression exp(const Expression& a) {
  if (a.is_constant()) return fold_if_finite(std::exp(a.node().value), Expression::unary(Expression::Op::Exp, a));
  return Expression::unary(Expression::Op::Exp, a);
}

Expression sqrt(const Expression& a) {
  if (a.is_constant() && a.node().value >= 0.0) return Expression::constant(std::sqrt(a.node().value));
  return Expression::unary(Expression::Op::Sqrt, a);
}

Expression parse(std::string_view text, const ParseOptions& options) {
  return Parser(text, options).run();
}

Expression differentiate(const Expression& e, Variable var) {
  using Op = Expression::Op;
  const auto d = [&](const Expression& sub) { return differentiate(sub, var); };
  switch (e.op()) {
    case Op::Const:
      return Expression::constant(0.0);
    case Op::Var:
      return Expression::constant(!var.is_time() && e.node().index == var.index ? 1.0 : 0.0);
    case Op::Time:
      return Expression::constant(var.is_time() ? 1.0 : 0.0);
    case Op::Neg:
      return -d(e.lhs());
    case Op::Sin:
      return cos(e.lhs()) * d(e.lhs());
    case Op::Cos:
      return -(sin(e.lhs()) * d(e.lhs()));
    case Op::Exp:
      return e * d(e.lhs());
    case Op::Sqrt:
      return d(e.lhs()) / (Expression::constant(2.0) * e);
    case Op::Add:
      return d(e.lhs()) + d(e.rhs());
    case Op::Sub:
      return d(e.lhs()) - d(e.rhs());
    case Op::Mul:
      return d(e.lhs()) * e.rhs() + e.lhs() * d(e.rhs());
    case Op::Div: {
      // (u/v)' = u'/v - u v' / v^2
      const Expression u = e.lhs();
      const Expression v = e.rhs();
      return d(u) / v - (u * d(v)) / pow(v, 2);
    }
    case Op::Pow: {
      const unsigned k = e.node().exponent;
      if (k == 0) return Expression::constant(0.0);
      return Expression::constant(static_cast<double>(k)) * pow(e.lhs(), k - 1) * d(e.lhs());
    }
  }
  return Expression::constant(0.0);
}

VectorField::VectorField(std::size_t dimension, std::vector<Expression> components)
    : dimension_(dimension), components_(std::move(components)) {
  if (components_.size() != dimension_)
    throw DimensionMismatch("expr", "vector field has " + std::to_string(components_.size()) +
                                        " components, expected " + std::to_string(dimension_));
  for (const auto& c : components_) {
    if (c.state_extent() > dimension_)
      throw DimensionMismatch("expr", "component references a variable beyond dimension " +
                                          std::to_string(dimension_));
  }
}

VectorField VectorField::parse(const std::vector<std::string>& components, std::size_t dimension) {
  std::vector<Expression> exprs;
  exprs.reserve(components.size());
  for (const auto& text : components) exprs.push_back(impulse::parse(text, {dimension, false}));
  return VectorField(dimension, std::move(exprs));
}

VectorField VectorField::zero(std::size_t dimension) {
  return VectorField(dimension, std::vector<Expression>(dimension, Expression::constant(0.0)));
}

Eigen::VectorXd VectorField::evaluate(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(dimension_));
  evaluate_into(x, out);
  return out;
}

void VectorField::evaluate_into(const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> out) const {
  if (static_cast<std::size_t>(x.size()) != dimension_)
    throw DimensionMismatch("expr", "point dimension does not match vector field");
  const std::span<const double> pt(x.data(), dimension_);
  for (std::size_t i = 0; i < dimension_; ++i) out[static_cast<Eigen::Index>(i)] = components_[i].evaluate(pt);
}

std::vector<std::string> VectorField::to_strings() const {
  std::vector<std::string> out;
  for (const auto& c : components_) out.push_back(c.to_string());
  return out;
}

Jacobian::Jacobian(const VectorField& v) : rows_(v.dimension()), cols_(v.dimension()) {
  entries_.reserve(rows_ * cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) entries_.push_back(differentiate(v[i], Variable::state(j)));
}

Eigen::MatrixXd Jacobian::evaluate(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  const std::span<const double> pt(x.data(), static_cast<std::size_t>(x.size()));
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = entries_[i * cols_ + j].evaluate(pt);
  return out;
}

}  // namespace impulse
