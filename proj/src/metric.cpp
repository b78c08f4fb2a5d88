#include "impulse/metric.hpp"

#include <algorithm>
#include <cmath>

#include "impulse/error.hpp"

namespace impulse {

namespace {

// Merged-grid L1 integral of |dw0| + |dw| over [0, upper], controls zero past
// their horizons.
DistanceReport l1_distance(const ControlSignal& a, const ControlSignal& b, double upper) {
  DistanceReport r;
  r.horizon_gap = std::abs(a.horizon() - b.horizon());
  std::vector<double> cuts;
  cuts.reserve(a.breakpoints().size() + b.breakpoints().size() + 1);
  for (double s : a.breakpoints())
    if (s < upper) cuts.push_back(s);
  for (double s : b.breakpoints())
    if (s < upper) cuts.push_back(s);
  cuts.push_back(upper);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const Eigen::Index m = static_cast<Eigen::Index>(std::max(a.control_dimension(), b.control_dimension()));
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(m);
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double len = cuts[k + 1] - cuts[k];
    const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
    const std::size_t ia = a.interval_at(mid);
    const std::size_t ib = b.interval_at(mid);
    const double w0a = ia < a.intervals() ? a.w0(ia) : 0.0;
    const double w0b = ib < b.intervals() ? b.w0(ib) : 0.0;
    const Eigen::VectorXd wa = ia < a.intervals() ? a.w(ia) : zero;
    const Eigen::VectorXd wb = ib < b.intervals() ? b.w(ib) : zero;
    r.w0_part += std::abs(w0a - w0b) * len;
    r.w_part += (wa - wb).norm() * len;
  }
  r.integral = r.w0_part + r.w_part;
  r.total = r.horizon_gap + r.integral;
  return r;
}

double spectral_norm(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()[0];
}

}  // namespace

DistanceReport dist_d(const ControlSignal& a, const ControlSignal& b) {
  return l1_distance(a, b, std::min(a.horizon(), b.horizon()));
}

DistanceReport dist_dtilde(const ControlSignal& a, const ControlSignal& b) {
  return l1_distance(a, b, std::max(a.horizon(), b.horizon()));
}

bool StateBox::contains(const Eigen::VectorXd& x, double slack) const {
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] < lower[i] - slack || x[i] > upper[i] + slack) return false;
  return true;
}

FieldBounds estimate_field_bounds(const ControlAffineSystem& system, const StateBox& box,
                                  const std::vector<Eigen::VectorXd>& extra_points, std::size_t max_grid) {
  const std::size_t n = system.state_dimension();
  FieldBounds out;
  auto visit = [&](const Eigen::VectorXd& x) {
    ++out.samples;
    const Eigen::VectorXd f = system.drift().evaluate(x);
    out.m_bound = std::max(out.m_bound, f.norm());
    out.m_bound = std::max(out.m_bound, spectral_norm(system.control_matrix(x)));
    out.lipschitz = std::max(out.lipschitz, spectral_norm(system.drift_jacobian().evaluate(x)));
    double sum = 0.0;
    for (std::size_t i = 0; i < system.control_dimension(); ++i) {
      const double li = spectral_norm(system.control_jacobian(i).evaluate(x));
      sum += li * li;
    }
    out.lipschitz = std::max(out.lipschitz, std::sqrt(sum));
  };

  std::size_t per_axis = 2;
  if (n > 0) {
    while (true) {
      double count = 1.0;
      for (std::size_t i = 0; i < n; ++i) count *= static_cast<double>(per_axis + 1);
      if (count > static_cast<double>(max_grid)) break;
      ++per_axis;
    }
  }
  std::vector<std::size_t> idx(n, 0);
  Eigen::VectorXd x(static_cast<Eigen::Index>(n));
  while (true) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double frac = static_cast<double>(idx[i]) / static_cast<double>(per_axis - 1);
      x[ii] = box.lower[ii] + frac * (box.upper[ii] - box.lower[ii]);
    }
    visit(x);
    std::size_t d = 0;
    while (d < n && ++idx[d] == per_axis) idx[d++] = 0;
    if (d == n) break;
  }
  for (const auto& p : extra_points) visit(p);
  return out;
}

CertificateReport gronwall_certificate(const ControlAffineSystem& system, const ExtendedProcess& process,
                                       const ExtendedProcess& reference, const StateBox& box) {
  std::vector<Eigen::VectorXd> nodes;
  for (const ExtendedProcess* p : {&process, &reference}) {
    for (std::size_t k = 0; k < p->trajectory.nodes(); ++k) {
      Eigen::VectorXd x = p->trajectory.state(k);
      if (!box.contains(x))
        throw BoxViolation("trajectory leaves the declared state box at s = " + std::to_string(p->trajectory.grid[k]));
      nodes.push_back(std::move(x));
    }
  }
  const FieldBounds bounds = estimate_field_bounds(system, box, nodes);
  const DistanceReport dt = dist_dtilde(process.control, reference.control);

  CertificateReport r;
  r.d_tilde = dt.total;
  r.m_bound = bounds.m_bound;
  r.lipschitz = bounds.lipschitz;
  r.reference_length = reference.end_clock() + reference.end_energy();
  r.clock_bound = dt.w0_part;
  r.energy_bound = dt.w_part;
  r.state_bound = r.m_bound * std::exp(r.lipschitz * r.reference_length) * r.d_tilde;

  std::vector<double> grid = process.trajectory.grid;
  grid.insert(grid.end(), reference.trajectory.grid.begin(), reference.trajectory.grid.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  for (double s : grid) {
    const ExtendedState a = state_at(system, process, s);
    const ExtendedState b = state_at(system, reference, s);
    r.clock_gap = std::max(r.clock_gap, std::abs(a.clock - b.clock));
    r.state_gap = std::max(r.state_gap, (a.state - b.state).norm());
    r.energy_gap = std::max(r.energy_gap, std::abs(a.energy - b.energy));
  }
  // Rounding slack only; the estimates themselves carry no tolerance.
  auto holds = [](double gap, double bound) { return gap <= bound + 1e-10 * (1.0 + bound); };
  r.clock_ok = holds(r.clock_gap, r.clock_bound);
  r.state_ok = holds(r.state_gap, r.state_bound);
  r.energy_ok = holds(r.energy_gap, r.energy_bound);
  r.pass = r.clock_ok && r.state_ok && r.energy_ok;
  return r;
}

}  // namespace impulse
