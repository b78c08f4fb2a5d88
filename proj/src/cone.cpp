#include "impulse/cone.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "impulse/error.hpp"

namespace impulse {

namespace {

// Least squares restricted to the passive columns; minimum-norm solution so
// that numerically dependent passive sets do not blow up.
Eigen::VectorXd passive_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const std::vector<Eigen::Index>& passive) {
  Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(passive.size()));
  for (std::size_t j = 0; j < passive.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = a.col(passive[j]);
  return sub.completeOrthogonalDecomposition().solve(b);
}

}  // namespace

NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tolerance) {
  const Eigen::Index k = a.cols();
  NnlsResult out;
  out.coefficients = Eigen::VectorXd::Zero(k);
  out.fitted = Eigen::VectorXd::Zero(a.rows());
  out.residual = b;
  if (k == 0 || a.rows() == 0) return out;

  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff()) * std::max(1.0, b.norm());
  const double tol = tolerance * scale;

  std::vector<bool> in_passive(static_cast<std::size_t>(k), false);
  std::vector<Eigen::Index> passive;
  Eigen::VectorXd& x = out.coefficients;
  Eigen::VectorXd w = a.transpose() * b;
  const std::size_t max_iter = 3 * static_cast<std::size_t>(k) + 50;

  while (out.iterations < max_iter) {
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!in_passive[static_cast<std::size_t>(j)] && w[j] > best_w) {
        best_w = w[j];
        best = j;
      }
    }
    if (best < 0) break;
    ++out.iterations;
    in_passive[static_cast<std::size_t>(best)] = true;
    passive.push_back(best);

    for (std::size_t inner = 0; inner < max_iter; ++inner) {
      const Eigen::VectorXd z = passive_solve(a, b, passive);
      bool all_positive = true;
      for (Eigen::Index j = 0; j < z.size(); ++j)
        if (z[j] <= 0.0) all_positive = false;
      if (all_positive) {
        for (std::size_t j = 0; j < passive.size(); ++j) x[passive[j]] = z[static_cast<Eigen::Index>(j)];
        break;
      }
      double alpha = 1.0;
      for (std::size_t j = 0; j < passive.size(); ++j) {
        const double zj = z[static_cast<Eigen::Index>(j)];
        if (zj <= 0.0) {
          const double xj = x[passive[j]];
          const double denom = xj - zj;
          if (denom > 0.0) alpha = std::min(alpha, xj / denom);
        }
      }
      for (std::size_t j = 0; j < passive.size(); ++j) {
        const Eigen::Index idx = passive[j];
        x[idx] += alpha * (z[static_cast<Eigen::Index>(j)] - x[idx]);
      }
      std::vector<Eigen::Index> kept;
      for (Eigen::Index idx : passive) {
        if (x[idx] <= std::numeric_limits<double>::epsilon() * scale) {
          x[idx] = 0.0;
          in_passive[static_cast<std::size_t>(idx)] = false;
        } else {
          kept.push_back(idx);
        }
      }
      passive.swap(kept);
      if (passive.empty()) break;
    }
    out.fitted = a * x;
    out.residual = b - out.fitted;
    w = a.transpose() * out.residual;
  }
  out.converged = out.iterations < max_iter;
  out.fitted = a * x;
  out.residual = b - out.fitted;
  return out;
}

PolyhedralCone::PolyhedralCone(const Eigen::MatrixXd& generators) : ambient_(static_cast<std::size_t>(generators.rows())) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < generators.cols(); ++j)
    if (generators.col(j).norm() > 0.0) keep.push_back(j);
  generators_.resize(generators.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) generators_.col(static_cast<Eigen::Index>(j)) = generators.col(keep[j]);
}

PolyhedralCone PolyhedralCone::product(std::size_t m1, const Eigen::MatrixXd& c2_generators, const Eigen::MatrixXd& extra_c1) {
  const Eigen::Index n1 = static_cast<Eigen::Index>(m1);
  const Eigen::Index n2 = c2_generators.rows();
  const Eigen::Index extra = extra_c1.size() == 0 ? 0 : extra_c1.cols();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n1 + n2, 2 * n1 + extra + c2_generators.cols());
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < n1; ++i) {
    g(i, col++) = 1.0;
    g(i, col++) = -1.0;
  }
  for (Eigen::Index j = 0; j < extra; ++j) g.block(0, col++, n1, 1) = extra_c1.col(j);
  for (Eigen::Index j = 0; j < c2_generators.cols(); ++j) g.block(n1, col++, n2, 1) = c2_generators.col(j);
  return PolyhedralCone(g);
}

PolyhedralCone PolyhedralCone::whole_space(std::size_t m) {
  return product(m, Eigen::MatrixXd::Zero(0, 0));
}

Eigen::VectorXd PolyhedralCone::project(const Eigen::VectorXd& v) const {
  if (static_cast<std::size_t>(v.size()) != ambient_)
    throw DimensionMismatch("extremal", "vector dimension does not match cone");
  if (generators_.cols() == 0) return Eigen::VectorXd::Zero(v.size());
  return nnls(generators_, v).fitted;
}

double PolyhedralCone::distance(const Eigen::VectorXd& v) const { return (v - project(v)).norm(); }

bool PolyhedralCone::contains(const Eigen::VectorXd& v, double tolerance) const {
  return distance(v) <= tolerance * std::max(1.0, v.norm());
}

bool PolyhedralCone::is_pointed(double tolerance) const {
  for (Eigen::Index j = 0; j < generators_.cols(); ++j) {
    const Eigen::VectorXd neg = -generators_.col(j);
    if (contains(neg, tolerance)) return false;
  }
  return true;
}

double PolyhedralCone::unit_sup(const Eigen::VectorXd& l, Eigen::VectorXd* argmax) const {
  if (ambient_ == 0) {
    if (argmax) argmax->resize(0);
    return -std::numeric_limits<double>::infinity();
  }
  if (generators_.cols() == 0) throw DegenerateCone("control cone has no nonzero generator");
  const Eigen::VectorXd proj = project(l);
  const double norm = proj.norm();
  const double scale = std::max(1.0, l.norm());
  if (norm > 1e-14 * scale) {
    if (argmax) *argmax = proj / norm;
    return norm;
  }
  // l lies in the polar cone: the supremum over the unit slice is attained on
  // an extreme ray, hence on a generator.
  double best = -std::numeric_limits<double>::infinity();
  Eigen::Index best_j = 0;
  for (Eigen::Index j = 0; j < generators_.cols(); ++j) {
    const double value = l.dot(generators_.col(j)) / generators_.col(j).norm();
    if (value > best) {
      best = value;
      best_j = j;
    }
  }
  if (argmax) *argmax = generators_.col(best_j).normalized();
  return best;
}

}  // namespace impulse
