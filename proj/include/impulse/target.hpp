#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "impulse/expr.hpp"

namespace impulse {

/// Linear approximating cone K to the target at an endpoint (t, x), stored as
/// orthonormal bases of K and of its orthogonal complement in R^{1+n}.
/// Coordinates are ordered (t, x1, ..., xn).
struct ApproximatingCone {
  Eigen::MatrixXd basis;             ///< (1+n) x dim K
  Eigen::MatrixXd orthogonal_basis;  ///< (1+n) x (1+n - dim K)

  std::size_t ambient_dimension() const { return static_cast<std::size_t>(basis.rows()); }
  /// Orthogonal projection onto K.
  Eigen::VectorXd project(const Eigen::VectorXd& v) const { return basis * (basis.transpose() * v); }
};

/// Closed endpoint set S in [0, inf) x R^n: a single point, or the zero set of
/// smooth constraints Phi(t, x) = 0 (no constraints means the whole space).
class TargetSpec {
public:
  enum class Kind { Point, LevelSet };

  static TargetSpec point(double t, Eigen::VectorXd x);
  static TargetSpec level_set(std::vector<Expression> constraints, std::size_t dimension);
  static TargetSpec level_set(const std::vector<std::string>& constraints, std::size_t dimension);

  Kind kind() const { return kind_; }
  std::size_t dimension() const { return dimension_; }
  double point_time() const { return point_t_; }
  const Eigen::VectorXd& point_state() const { return point_x_; }
  const std::vector<Expression>& constraints() const { return constraints_; }

  /// Euclidean distance from (t, x) to the target. Level sets are handled by
  /// Gauss-Newton projection from (t, x).
  double distance(double t, const Eigen::VectorXd& x) const;

  /// q x (1+n) constraint Jacobian at (t, x); empty for point targets.
  Eigen::MatrixXd constraint_jacobian(double t, const Eigen::VectorXd& x) const;

  /// Tangent space of the level set (or {0} for a point). Throws when the
  /// constraint Jacobian is rank deficient (smallest singular value < 1e-8).
  ApproximatingCone approximating_cone(double t, const Eigen::VectorXd& x) const;

private:
  Eigen::VectorXd constraint_values(const Eigen::VectorXd& tx) const;

  Kind kind_ = Kind::Point;
  std::size_t dimension_ = 0;
  double point_t_ = 0.0;
  Eigen::VectorXd point_x_;
  std::vector<Expression> constraints_;
  std::vector<std::vector<Expression>> gradients_;  // per constraint, d/dt then d/dx_j
};

/// Gradient (d/dt, d/dx1, ..., d/dxn) of a scalar expression over (t, x).
Eigen::VectorXd time_state_gradient(const Expression& e, double t, const Eigen::VectorXd& x);

}  // namespace impulse
