#pragma once

#include <vector>

#include <Eigen/Dense>

#include "impulse/process.hpp"

namespace impulse {

/// Breakdown of an L1 control distance. total = horizon_gap + integral.
struct DistanceReport {
  double total = 0.0;
  double horizon_gap = 0.0;  ///< |S1 - S2|
  double integral = 0.0;     ///< w0 part + w part
  double w0_part = 0.0;      ///< int |w0_1 - w0_2|
  double w_part = 0.0;       ///< int |w_1 - w_2|
};

/// d(z1, z2) = |S1 - S2| + ||(w0_1, w_1) - (w0_2, w_2)||_{L1[0, S1 ^ S2]}, with
/// the pointwise norm |dw0| + |dw|. Exact on the merged breakpoint grid.
DistanceReport dist_d(const ControlSignal& a, const ControlSignal& b);
inline DistanceReport dist_d(const ExtendedProcess& a, const ExtendedProcess& b) { return dist_d(a.control, b.control); }

/// Same integrand over [0, S1 v S2], controls zero-extended past their horizons.
DistanceReport dist_dtilde(const ControlSignal& a, const ControlSignal& b);
inline DistanceReport dist_dtilde(const ExtendedProcess& a, const ExtendedProcess& b) {
  return dist_dtilde(a.control, b.control);
}

/// Axis-aligned state box.
struct StateBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  bool contains(const Eigen::VectorXd& x, double slack = 0.0) const;
};

/// Field bounds sampled over a box: M bounds |f| and the operator norm of
/// G = [g_1 ... g_m]; L bounds the Lipschitz moduli (sup of |Df| and of
/// sqrt(sum_i |Dg_i|^2), spectral norms).
struct FieldBounds {
  double m_bound = 0.0;
  double lipschitz = 0.0;
  std::size_t samples = 0;
};

/// Sampling uses a tensor grid (at most `max_grid` points), corners, and any
/// extra points supplied (typically trajectory nodes).
FieldBounds estimate_field_bounds(const ControlAffineSystem& system, const StateBox& box,
                                  const std::vector<Eigen::VectorXd>& extra_points = {}, std::size_t max_grid = 4096);

struct CertificateReport {
  double d_tilde = 0.0;
  double m_bound = 0.0;
  double lipschitz = 0.0;
  double reference_length = 0.0;  ///< R = y0(S) + beta(S) of the reference
  double clock_gap = 0.0;         ///< sup |y0 - y0_ref|
  double state_gap = 0.0;         ///< sup |y - y_ref|
  double energy_gap = 0.0;        ///< sup |beta - beta_ref|
  double clock_bound = 0.0;       ///< int |w0 - w0_ref|
  double state_bound = 0.0;       ///< M e^{L R} d_tilde
  double energy_bound = 0.0;      ///< int |w - w_ref|
  bool clock_ok = false;
  bool state_ok = false;
  bool energy_ok = false;
  bool pass = false;

  double clock_margin() const { return clock_bound - clock_gap; }
  double state_margin() const { return state_bound - state_gap; }
  double energy_margin() const { return energy_bound - energy_gap; }
};

/// Checks the three sup-norm estimates between `process` and `reference`
/// on the union of both integration grids (constant extension past each
/// horizon). Throws BoxViolation when either trajectory leaves the box.
CertificateReport gronwall_certificate(const ControlAffineSystem& system, const ExtendedProcess& process,
                                       const ExtendedProcess& reference, const StateBox& box);

}  // namespace impulse
