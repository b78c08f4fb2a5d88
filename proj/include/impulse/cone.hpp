#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace impulse {

/// Result of a nonnegative least-squares solve min ||A x - b||, x >= 0.
struct NnlsResult {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd fitted;     ///< A * coefficients
  Eigen::VectorXd residual;   ///< b - fitted
  std::size_t iterations = 0;
  bool converged = true;
};

/// Lawson-Hanson active-set NNLS. Columns of `a` are the generators.
NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tolerance = 1e-12);

/// Closed convex cone generated by the columns of a matrix:
/// C = { G lambda : lambda >= 0 }.
class PolyhedralCone {
public:
  PolyhedralCone() = default;
  /// `generators` is m x k; zero columns are dropped.
  explicit PolyhedralCone(const Eigen::MatrixXd& generators);

  /// R^{m1} x cone(c2) embedded in R^{m1 + m2}. `extra_c1` columns (m1 rows)
  /// are appended to the first block; they never enlarge R^{m1} but are
  /// accepted for completeness.
  static PolyhedralCone product(std::size_t m1, const Eigen::MatrixXd& c2_generators,
                                const Eigen::MatrixXd& extra_c1 = Eigen::MatrixXd());
  static PolyhedralCone whole_space(std::size_t m);

  std::size_t ambient_dimension() const { return ambient_; }
  const Eigen::MatrixXd& generators() const { return generators_; }

  /// Euclidean projection onto the cone.
  Eigen::VectorXd project(const Eigen::VectorXd& v) const;

  /// Distance from v to the cone.
  double distance(const Eigen::VectorXd& v) const;
  bool contains(const Eigen::VectorXd& v, double tolerance = 1e-9) const;

  /// True when the cone contains no line: no generator's negation is in the
  /// cone.
  bool is_pointed(double tolerance = 1e-9) const;

  /// sup { l . c : c in C, |c| = 1 }. Equals |P(l)| when the projection is
  /// nonzero; otherwise the best normalized generator. Returns the maximizing
  /// unit direction in `argmax` when non-null.
  double unit_sup(const Eigen::VectorXd& l, Eigen::VectorXd* argmax = nullptr) const;

private:
  std::size_t ambient_ = 0;
  Eigen::MatrixXd generators_;
};

}  // namespace impulse
