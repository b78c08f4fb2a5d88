#include "impulse/system.hpp"

#include "impulse/error.hpp"

namespace impulse {

ControlAffineSystem::ControlAffineSystem(VectorField drift, std::vector<VectorField> controls, PolyhedralCone cone,
                                         std::size_t m1)
    : drift_(std::move(drift)), controls_(std::move(controls)), cone_(std::move(cone)), m1_(m1) {
  for (const auto& g : controls_) {
    if (g.dimension() != drift_.dimension())
      throw DimensionMismatch("process", "control field dimension differs from drift dimension");
  }
  if (cone_.ambient_dimension() != controls_.size())
    throw DimensionMismatch("process", "cone dimension " + std::to_string(cone_.ambient_dimension()) +
                                           " differs from control count " + std::to_string(controls_.size()));
  if (m1_ > controls_.size()) throw DimensionMismatch("process", "m1 exceeds the number of control fields");
  drift_jac_ = Jacobian(drift_);
  control_jacs_.reserve(controls_.size());
  for (const auto& g : controls_) control_jacs_.emplace_back(g);
}

ControlAffineSystem ControlAffineSystem::unconstrained(VectorField drift, std::vector<VectorField> controls) {
  const std::size_t m = controls.size();
  return ControlAffineSystem(std::move(drift), std::move(controls), PolyhedralCone::whole_space(m), m);
}

Eigen::MatrixXd ControlAffineSystem::control_matrix(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd g(x.size(), static_cast<Eigen::Index>(controls_.size()));
  for (std::size_t i = 0; i < controls_.size(); ++i) controls_[i].evaluate_into(x, g.col(static_cast<Eigen::Index>(i)));
  return g;
}

Eigen::VectorXd ControlAffineSystem::velocity(const Eigen::VectorXd& x, double w0, const Eigen::VectorXd& w) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd tmp(x.size());
  if (w0 != 0.0) {
    drift_.evaluate_into(x, tmp);
    v += w0 * tmp;
  }
  for (std::size_t i = 0; i < controls_.size(); ++i) {
    const double wi = w[static_cast<Eigen::Index>(i)];
    if (wi == 0.0) continue;
    controls_[i].evaluate_into(x, tmp);
    v += wi * tmp;
  }
  return v;
}

Eigen::MatrixXd ControlAffineSystem::velocity_jacobian(const Eigen::VectorXd& x, double w0, const Eigen::VectorXd& w) const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(x.size(), x.size());
  if (w0 != 0.0) a += w0 * drift_jac_.evaluate(x);
  for (std::size_t i = 0; i < controls_.size(); ++i) {
    const double wi = w[static_cast<Eigen::Index>(i)];
    if (wi != 0.0) a += wi * control_jacs_[i].evaluate(x);
  }
  return a;
}

}  // namespace impulse
