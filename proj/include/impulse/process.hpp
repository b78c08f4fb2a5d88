#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "impulse/system.hpp"
#include "impulse/target.hpp"

namespace impulse {

inline constexpr double kInfiniteEnergy = std::numeric_limits<double>::infinity();

/// Tolerance for the canonical slice w0 + |w| = 1.
inline constexpr double kCanonicalTolerance = 1e-9;

/// Piecewise-constant extended control (S, w0, w) on 0 = s_0 < ... < s_N = S.
/// |w| is the Euclidean norm throughout.
class ControlSignal {
public:
  ControlSignal() = default;
  /// `w` is N x m (one row per interval). Throws DimensionMismatch on size
  /// mismatch and BadTimeChange on non-increasing breakpoints.
  ControlSignal(std::vector<double> breakpoints, std::vector<double> w0, Eigen::MatrixXd w);

  static ControlSignal constant(double horizon, double w0, const Eigen::VectorXd& w);

  double horizon() const { return breakpoints_.back(); }
  std::size_t intervals() const { return w0_.size(); }
  std::size_t control_dimension() const { return static_cast<std::size_t>(w_.cols()); }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  double start(std::size_t i) const { return breakpoints_[i]; }
  double length(std::size_t i) const { return breakpoints_[i + 1] - breakpoints_[i]; }
  double w0(std::size_t i) const { return w0_[i]; }
  Eigen::VectorXd w(std::size_t i) const { return w_.row(static_cast<Eigen::Index>(i)).transpose(); }
  const std::vector<double>& w0_values() const { return w0_; }
  const Eigen::MatrixXd& w_values() const { return w_; }

  /// Interval containing s (right-continuous); N when s >= S.
  std::size_t interval_at(double s) const;

  /// Clock rate w0 + |w| on interval i.
  double rate(std::size_t i) const { return w0_[i] + w(i).norm(); }
  double min_rate() const;
  double min_w0() const;

  bool is_strict_positive() const { return intervals() > 0 && min_w0() > 0.0; }
  bool is_canonical(double tolerance = kCanonicalTolerance) const;
  bool in_cone(const PolyhedralCone& cone, double tolerance = 1e-9) const;

private:
  std::vector<double> breakpoints_{0.0};
  std::vector<double> w0_;
  Eigen::MatrixXd w_;
};

/// Piecewise-constant strict-sense control u on 0 = t_0 < ... < t_N = T.
class StrictControl {
public:
  StrictControl() = default;
  StrictControl(std::vector<double> breakpoints, Eigen::MatrixXd u);
  static StrictControl constant(double horizon, const Eigen::VectorXd& u);

  double horizon() const { return breakpoints_.back(); }
  std::size_t intervals() const { return static_cast<std::size_t>(u_.rows()); }
  std::size_t control_dimension() const { return static_cast<std::size_t>(u_.cols()); }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  double length(std::size_t i) const { return breakpoints_[i + 1] - breakpoints_[i]; }
  Eigen::VectorXd u(std::size_t i) const { return u_.row(static_cast<Eigen::Index>(i)).transpose(); }
  const Eigen::MatrixXd& values() const { return u_; }

private:
  std::vector<double> breakpoints_{0.0};
  Eigen::MatrixXd u_;
};

/// Samples of an integrated trajectory. Grid nodes include every control
/// breakpoint; interval i spans nodes offsets[i] .. offsets[i+1].
struct TrajectorySamples {
  std::vector<double> grid;     ///< s (extended) or t (strict)
  std::vector<double> clock;    ///< y0 (extended) or t (strict)
  Eigen::MatrixXd states;       ///< nodes x n
  std::vector<double> energy;   ///< beta (extended) or v (strict)
  std::vector<std::size_t> offsets;

  std::size_t nodes() const { return grid.size(); }
  Eigen::VectorXd state(std::size_t k) const { return states.row(static_cast<Eigen::Index>(k)).transpose(); }
  std::size_t steps_in(std::size_t interval) const { return offsets[interval + 1] - offsets[interval]; }
};

struct IntegrationOptions {
  double relative_step = 1e-3;  ///< h = relative_step * horizon when `step` is 0
  double step = 0.0;            ///< absolute h when positive
  double step_for(double horizon) const { return step > 0.0 ? step : relative_step * horizon; }
};

/// (S, w0, w, y0, y, beta) with (y0, y, beta)(0) = (0, x0, 0).
struct ExtendedProcess {
  ControlSignal control;
  Eigen::VectorXd initial_state;
  TrajectorySamples trajectory;
  double step = 0.0;  ///< nominal integration step

  double horizon() const { return control.horizon(); }
  double end_clock() const { return trajectory.clock.back(); }
  Eigen::VectorXd end_state() const { return trajectory.state(trajectory.nodes() - 1); }
  double end_energy() const { return trajectory.energy.back(); }
};

/// (T, u, x, v) with (x, v)(0) = (x0, 0).
struct StrictProcess {
  StrictControl control;
  Eigen::VectorXd initial_state;
  TrajectorySamples trajectory;
  double step = 0.0;

  double horizon() const { return control.horizon(); }
  Eigen::VectorXd end_state() const { return trajectory.state(trajectory.nodes() - 1); }
  double end_energy() const { return trajectory.energy.back(); }
};

/// Strictly increasing piecewise-linear map sigma: [0, S_new] -> [0, S_old].
class TimeChange {
public:
  /// Throws BadTimeChange unless knots and values both start at 0 and are
  /// strictly increasing.
  TimeChange(std::vector<double> knots, std::vector<double> values);
  static TimeChange identity(double horizon);
  static TimeChange linear(double new_horizon, double old_horizon);

  double domain_end() const { return knots_.back(); }
  double range_end() const { return values_.back(); }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }

  double operator()(double s) const;
  double inverse(double value) const;
  double slope(std::size_t piece) const;
  double min_slope() const;
  double max_slope() const;

private:
  std::vector<double> knots_;
  std::vector<double> values_;
};

/// One classical RK4 step of dy/ds = f(y) w0 + G(y) w.
Eigen::VectorXd rk4_advance(const ControlAffineSystem& system, const Eigen::VectorXd& y, double w0,
                            const Eigen::VectorXd& w, double h);

/// Fixed-step RK4 for dy/ds = f(y) w0 + G(y) w; y0 and beta integrate exactly.
ExtendedProcess simulate_extended(const ControlAffineSystem& system, const ControlSignal& control,
                                  const Eigen::VectorXd& initial_state, const IntegrationOptions& options = {});

/// As above, but with an explicit number of RK4 steps per control interval.
ExtendedProcess simulate_extended(const ControlAffineSystem& system, const ControlSignal& control,
                                  const Eigen::VectorXd& initial_state, const std::vector<std::size_t>& steps,
                                  double nominal_step);

StrictProcess simulate_strict(const ControlAffineSystem& system, const StrictControl& control,
                              const Eigen::VectorXd& initial_state, const IntegrationOptions& options = {});

/// Canonical embedded representative: sigma(t) = t + v(t), y0 = sigma^{-1}.
ExtendedProcess embed(const ControlAffineSystem& system, const StrictProcess& process);

/// Inverse of embed via sigma = (y0)^{-1}. Throws NotStrictPositive when some
/// interval has w0 <= 0.
StrictProcess restrict_process(const ControlAffineSystem& system, const ExtendedProcess& process);

/// Equivalent process (w0, w) := ((w0, w) o sigma) sigma',
/// (y0, y, beta) := (y0, y, beta) o sigma, where sigma maps the new horizon
/// onto the old one. The new trajectory is re-integrated on its own grid.
ExtendedProcess reparametrize(const ControlAffineSystem& system, const ExtendedProcess& process, const TimeChange& sigma);

/// Canonical parameterization sigma(s) = y0(s) + beta(s). Throws
/// DegenerateClock when w0 + |w| vanishes on some interval.
ExtendedProcess canonicalize(const ControlAffineSystem& system, const ExtendedProcess& process);

/// (y0, y, beta) at arbitrary s >= 0, constant beyond the horizon. Between
/// grid nodes the state is advanced from the previous node by one RK4 step.
struct ExtendedState {
  double clock = 0.0;
  Eigen::VectorXd state;
  double energy = 0.0;
};
ExtendedState state_at(const ControlAffineSystem& system, const ExtendedProcess& process, double s);

struct FeasibilityReport {
  double endpoint_distance = 0.0;
  bool within_target = false;
  double energy = 0.0;
  double energy_bound = kInfiniteEnergy;
  bool within_energy = false;
  bool feasible = false;
};

/// dist((y0(S), y(S)), target) <= eta and beta(S) <= K + eta.
FeasibilityReport check_feasible(const ExtendedProcess& process, const TargetSpec& target, double energy_bound,
                                 double eta);

}  // namespace impulse
