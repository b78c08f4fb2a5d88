#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "impulse/cone.hpp"
#include "impulse/expr.hpp"

namespace impulse {

/// dx/dt = f(x) + sum_i g_i(x) u^i with u in the cone C = R^{m1} x C2.
///
/// Jacobians are differentiated once at construction and shared by copies.
class ControlAffineSystem {
public:
  ControlAffineSystem() = default;
  ControlAffineSystem(VectorField drift, std::vector<VectorField> controls, PolyhedralCone cone, std::size_t m1);

  /// Unconstrained controls: C = R^m, m1 = m.
  static ControlAffineSystem unconstrained(VectorField drift, std::vector<VectorField> controls);

  std::size_t state_dimension() const { return drift_.dimension(); }
  std::size_t control_dimension() const { return controls_.size(); }
  std::size_t m1() const { return m1_; }

  const VectorField& drift() const { return drift_; }
  const std::vector<VectorField>& controls() const { return controls_; }
  const PolyhedralCone& cone() const { return cone_; }
  const Jacobian& drift_jacobian() const { return drift_jac_; }
  const Jacobian& control_jacobian(std::size_t i) const { return control_jacs_[i]; }

  /// n x m matrix [g_1(x) ... g_m(x)].
  Eigen::MatrixXd control_matrix(const Eigen::VectorXd& x) const;

  /// f(x) w0 + G(x) w.
  Eigen::VectorXd velocity(const Eigen::VectorXd& x, double w0, const Eigen::VectorXd& w) const;

  /// Df(x) w0 + sum_i Dg_i(x) w^i.
  Eigen::MatrixXd velocity_jacobian(const Eigen::VectorXd& x, double w0, const Eigen::VectorXd& w) const;

private:
  VectorField drift_;
  std::vector<VectorField> controls_;
  PolyhedralCone cone_;
  std::size_t m1_ = 0;
  Jacobian drift_jac_;
  std::vector<Jacobian> control_jacs_;
};

}  // namespace impulse
