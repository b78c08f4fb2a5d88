#pragma once

// Shared fixtures for the unit and acceptance suites.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "impulse/expr.hpp"
#include "impulse/process.hpp"
#include "impulse/system.hpp"

namespace testing_support {

using impulse::ControlAffineSystem;
using impulse::ControlSignal;
using impulse::Expression;
using impulse::PolyhedralCone;
using impulse::VectorField;

inline std::string source_path(const std::string& rel) { return std::string(IMPULSE_SOURCE_DIR) + "/" + rel; }

/// Scalar f = 0, g = 1 with the given cone (R when m1 = 1, R+ when m1 = 0).
inline ControlAffineSystem scalar_shift(std::size_t m1) {
  const VectorField f = VectorField::parse({"0"}, 1);
  const VectorField g = VectorField::parse({"1"}, 1);
  if (m1 == 1) return ControlAffineSystem::unconstrained(f, {g});
  return ControlAffineSystem(f, {g}, PolyhedralCone::product(0, Eigen::MatrixXd::Ones(1, 1)), 0);
}

/// Random smooth expression over x1..xn; division and sqrt arguments are
/// kept positive so the expression is defined everywhere.
inline Expression random_expression(std::mt19937_64& rng, std::size_t n, int depth, bool allow_time = false) {
  std::uniform_int_distribution<int> pick(0, 9);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::uniform_int_distribution<std::size_t> var(0, n - 1);
  if (depth <= 0) {
    const int k = pick(rng);
    if (k < 3) return Expression::constant(std::round(coef(rng) * 100.0) / 100.0);
    if (allow_time && k == 3) return Expression::time();
    return Expression::variable(var(rng));
  }
  const auto sub = [&] { return random_expression(rng, n, depth - 1, allow_time); };
  using Op = Expression::Op;
  switch (pick(rng)) {
    case 0: return Expression::binary(Op::Add, sub(), sub());
    case 1: return Expression::binary(Op::Sub, sub(), sub());
    case 2: return Expression::binary(Op::Mul, sub(), sub());
    case 3: {
      const Expression d = sub();
      return Expression::binary(Op::Div, sub(),
                                Expression::binary(Op::Add, Expression::constant(1.0), Expression::power(d, 2)));
    }
    case 4: return Expression::unary(Op::Sin, sub());
    case 5: return Expression::unary(Op::Cos, sub());
    case 6: return Expression::unary(Op::Exp, Expression::unary(Op::Sin, sub()));
    case 7: {
      const Expression d = sub();
      return Expression::unary(Op::Sqrt, Expression::binary(Op::Add, Expression::constant(1.0), Expression::power(d, 2)));
    }
    case 8: return Expression::power(sub(), 1 + static_cast<unsigned>(pick(rng) % 3));
    default: return Expression::unary(Op::Neg, sub());
  }
}

/// Random polynomial vector field of degree <= 2 with small coefficients.
inline VectorField random_polynomial_field(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::vector<Expression> comps;
  for (std::size_t i = 0; i < n; ++i) {
    Expression e = Expression::constant(coef(rng));
    for (std::size_t j = 0; j < n; ++j) {
      e = e + Expression::constant(coef(rng)) * Expression::variable(j);
      for (std::size_t k = j; k < n; ++k)
        e = e + Expression::constant(0.5 * coef(rng)) * Expression::variable(j) * Expression::variable(k);
    }
    comps.push_back(e);
  }
  return VectorField(n, comps);
}

/// Random piecewise-constant control with values in `cone`, intervals of
/// random length. When `canonical`, every interval sits on w0 + |w| = 1.
inline ControlSignal random_control(std::mt19937_64& rng, const PolyhedralCone& cone, std::size_t intervals,
                                    double horizon, bool canonical, double min_w0 = 0.0) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t m = cone.ambient_dimension();
  std::vector<double> cuts{0.0, horizon};
  for (std::size_t i = 1; i < intervals; ++i) cuts.push_back(horizon * (0.05 + 0.9 * unit(rng)));
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<double> w0;
  Eigen::MatrixXd w(static_cast<Eigen::Index>(cuts.size() - 1), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(m));
    for (auto& x : v) x = gauss(rng);
    v = cone.project(v);
    double a = min_w0 + unit(rng);
    if (unit(rng) < 0.2 && min_w0 == 0.0) a = 0.0;
    if (a == 0.0 && v.norm() < 1e-6) a = 1.0;
    if (canonical) {
      const double rate = a + v.norm();
      a /= rate;
      v /= rate;
      if (a < min_w0) {
        a = min_w0;
        if (v.norm() > 0) v *= (1.0 - min_w0) / v.norm();
      }
    }
    w0.push_back(a);
    w.row(static_cast<Eigen::Index>(i)) = v.transpose();
  }
  return ControlSignal(cuts, w0, w);
}

}  // namespace testing_support
