#include "impulse/target.hpp"

#include <cmath>

#include "impulse/error.hpp"

namespace impulse {

TargetSpec TargetSpec::point(double t, Eigen::VectorXd x) {
  TargetSpec s;
  s.kind_ = Kind::Point;
  s.dimension_ = static_cast<std::size_t>(x.size());
  s.point_t_ = t;
  s.point_x_ = std::move(x);
  return s;
}

TargetSpec TargetSpec::level_set(std::vector<Expression> constraints, std::size_t dimension) {
  TargetSpec s;
  s.kind_ = Kind::LevelSet;
  s.dimension_ = dimension;
  for (const auto& c : constraints) {
    if (c.state_extent() > dimension) throw DimensionMismatch("extremal", "target constraint exceeds state dimension");
    std::vector<Expression> grad;
    grad.push_back(differentiate(c, Variable::time()));
    for (std::size_t j = 0; j < dimension; ++j) grad.push_back(differentiate(c, Variable::state(j)));
    s.gradients_.push_back(std::move(grad));
  }
  s.constraints_ = std::move(constraints);
  return s;
}

TargetSpec TargetSpec::level_set(const std::vector<std::string>& constraints, std::size_t dimension) {
  std::vector<Expression> exprs;
  for (const auto& c : constraints) exprs.push_back(parse(c, {dimension, true}));
  return level_set(std::move(exprs), dimension);
}

Eigen::VectorXd TargetSpec::constraint_values(const Eigen::VectorXd& tx) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(constraints_.size()));
  const std::span<const double> x(tx.data() + 1, dimension_);
  for (std::size_t i = 0; i < constraints_.size(); ++i) out[static_cast<Eigen::Index>(i)] = constraints_[i].evaluate(x, tx[0]);
  return out;
}

Eigen::MatrixXd TargetSpec::constraint_jacobian(double t, const Eigen::VectorXd& x) const {
  const auto q = static_cast<Eigen::Index>(constraints_.size());
  Eigen::MatrixXd jac(q, static_cast<Eigen::Index>(dimension_ + 1));
  const std::span<const double> pt(x.data(), dimension_);
  for (Eigen::Index i = 0; i < q; ++i)
    for (std::size_t j = 0; j <= dimension_; ++j)
      jac(i, static_cast<Eigen::Index>(j)) = gradients_[static_cast<std::size_t>(i)][j].evaluate(pt, t);
  return jac;
}

double TargetSpec::distance(double t, const Eigen::VectorXd& x) const {
  if (kind_ == Kind::Point) {
    const double dt = t - point_t_;
    return std::sqrt(dt * dt + (x - point_x_).squaredNorm());
  }
  if (constraints_.empty()) return 0.0;
  Eigen::VectorXd z0(static_cast<Eigen::Index>(dimension_ + 1));
  z0[0] = t;
  z0.tail(static_cast<Eigen::Index>(dimension_)) = x;
  Eigen::VectorXd z = z0;
  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::VectorXd phi = constraint_values(z);
    if (phi.norm() <= 1e-14) break;
    const Eigen::MatrixXd jac = constraint_jacobian(z[0], z.tail(static_cast<Eigen::Index>(dimension_)));
    const Eigen::VectorXd step = jac.completeOrthogonalDecomposition().solve(phi);
    z -= step;
    if (step.norm() <= 1e-15 * (1.0 + z.norm())) break;
  }
  return (z - z0).norm();
}

ApproximatingCone TargetSpec::approximating_cone(double t, const Eigen::VectorXd& x) const {
  const auto ambient = static_cast<Eigen::Index>(dimension_ + 1);
  ApproximatingCone cone;
  if (kind_ == Kind::Point) {
    cone.basis = Eigen::MatrixXd::Zero(ambient, 0);
    cone.orthogonal_basis = Eigen::MatrixXd::Identity(ambient, ambient);
    return cone;
  }
  const auto q = static_cast<Eigen::Index>(constraints_.size());
  if (q == 0) {
    cone.basis = Eigen::MatrixXd::Identity(ambient, ambient);
    cone.orthogonal_basis = Eigen::MatrixXd::Zero(ambient, 0);
    return cone;
  }
  const Eigen::MatrixXd jac = constraint_jacobian(t, x);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (q > ambient || sv.size() < q || sv[q - 1] < 1e-8)
    throw Error("extremal.RankDeficientTarget", ErrorKind::Validation,
                "target constraint Jacobian is rank deficient at the endpoint");
  const Eigen::MatrixXd& v = svd.matrixV();
  cone.orthogonal_basis = v.leftCols(q);
  cone.basis = v.rightCols(ambient - q);
  return cone;
}

Eigen::VectorXd time_state_gradient(const Expression& e, double t, const Eigen::VectorXd& x) {
  const auto n = static_cast<std::size_t>(x.size());
  Eigen::VectorXd g(static_cast<Eigen::Index>(n + 1));
  const std::span<const double> pt(x.data(), n);
  g[0] = differentiate(e, Variable::time()).evaluate(pt, t);
  for (std::size_t j = 0; j < n; ++j) g[static_cast<Eigen::Index>(j + 1)] = differentiate(e, Variable::state(j)).evaluate(pt, t);
  return g;
}

}  // namespace impulse
