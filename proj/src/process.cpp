#include "impulse/process.hpp"

#include <algorithm>
#include <cmath>

#include "impulse/error.hpp"

namespace impulse {

namespace {

void check_breakpoints(const std::vector<double>& breakpoints, const char* what) {
  if (breakpoints.size() < 2) throw BadTimeChange(std::string(what) + " needs at least one interval");
  if (breakpoints.front() != 0.0) throw BadTimeChange(std::string(what) + " must start at 0");
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > breakpoints[i - 1]) || !std::isfinite(breakpoints[i]))
      throw BadTimeChange(std::string(what) + " breakpoints must be finite and strictly increasing");
  }
}

std::size_t steps_for(double length, double h) {
  const double raw = std::ceil(length / h - 1e-9);
  return std::max<std::size_t>(1, static_cast<std::size_t>(raw));
}

Eigen::VectorXd rk4_step(const ControlAffineSystem& system, const Eigen::VectorXd& y, double w0, const Eigen::VectorXd& w,
                         double h) {
  return rk4_advance(system, y, w0, w, h);
}

// Shared RK4 driver. `lengths`, `w0`, `w` describe the intervals in the
// integration variable; `steps` gives the RK4 step count per interval.
TrajectorySamples integrate(const ControlAffineSystem& system, const Eigen::VectorXd& x0,
                            const std::vector<double>& breakpoints, const std::vector<double>& w0,
                            const Eigen::MatrixXd& w, const std::vector<std::size_t>& steps) {
  const std::size_t n = system.state_dimension();
  if (static_cast<std::size_t>(x0.size()) != n)
    throw DimensionMismatch("process", "initial state has dimension " + std::to_string(x0.size()) + ", expected " +
                                           std::to_string(n));
  if (static_cast<std::size_t>(w.cols()) != system.control_dimension())
    throw DimensionMismatch("process", "control dimension does not match the system");
  const std::size_t intervals = w0.size();
  std::size_t total = 1;
  for (std::size_t s : steps) total += s;

  TrajectorySamples out;
  out.grid.reserve(total);
  out.clock.reserve(total);
  out.energy.reserve(total);
  out.states.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(n));
  out.offsets.reserve(intervals + 1);

  Eigen::VectorXd y = x0;
  double clock = 0.0;
  double energy = 0.0;
  out.grid.push_back(0.0);
  out.clock.push_back(0.0);
  out.energy.push_back(0.0);
  out.states.row(0) = y.transpose();
  std::size_t node = 0;

  for (std::size_t i = 0; i < intervals; ++i) {
    out.offsets.push_back(node);
    const double a = breakpoints[i];
    const double len = breakpoints[i + 1] - a;
    const std::size_t k = steps[i];
    const double h = len / static_cast<double>(k);
    const Eigen::VectorXd wi = w.row(static_cast<Eigen::Index>(i)).transpose();
    const double speed = wi.norm();
    const double clock0 = clock;
    const double energy0 = energy;
    for (std::size_t j = 1; j <= k; ++j) {
      y = rk4_step(system, y, w0[i], wi, h);
      if (!y.allFinite())
        throw NonFiniteState("process", "state became non-finite at s = " + std::to_string(a + static_cast<double>(j) * h));
      const double ds = (j == k) ? len : static_cast<double>(j) * h;
      ++node;
      out.grid.push_back(j == k ? breakpoints[i + 1] : a + ds);
      out.clock.push_back(clock0 + w0[i] * ds);
      out.energy.push_back(energy0 + speed * ds);
      out.states.row(static_cast<Eigen::Index>(node)) = y.transpose();
    }
    clock = out.clock.back();
    energy = out.energy.back();
  }
  out.offsets.push_back(node);
  return out;
}

}  // namespace

Eigen::VectorXd rk4_advance(const ControlAffineSystem& system, const Eigen::VectorXd& y, double w0,
                            const Eigen::VectorXd& w, double h) {
  const Eigen::VectorXd k1 = system.velocity(y, w0, w);
  const Eigen::VectorXd k2 = system.velocity(y + 0.5 * h * k1, w0, w);
  const Eigen::VectorXd k3 = system.velocity(y + 0.5 * h * k2, w0, w);
  const Eigen::VectorXd k4 = system.velocity(y + h * k3, w0, w);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

ControlSignal::ControlSignal(std::vector<double> breakpoints, std::vector<double> w0, Eigen::MatrixXd w)
    : breakpoints_(std::move(breakpoints)), w0_(std::move(w0)), w_(std::move(w)) {
  check_breakpoints(breakpoints_, "control");
  if (w0_.size() + 1 != breakpoints_.size() || static_cast<std::size_t>(w_.rows()) != w0_.size())
    throw DimensionMismatch("process", "control has inconsistent interval counts");
  for (std::size_t i = 0; i < w0_.size(); ++i) {
    if (!(w0_[i] >= 0.0) || !std::isfinite(w0_[i])) throw DimensionMismatch("process", "w0 must be finite and nonnegative");
  }
  if (!w_.allFinite()) throw DimensionMismatch("process", "control values must be finite");
}

ControlSignal ControlSignal::constant(double horizon, double w0, const Eigen::VectorXd& w) {
  return ControlSignal({0.0, horizon}, {w0}, w.transpose());
}

std::size_t ControlSignal::interval_at(double s) const {
  if (s >= horizon()) return intervals();
  if (s < 0.0) return 0;
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), s);
  return static_cast<std::size_t>(std::distance(breakpoints_.begin(), it)) - 1;
}

double ControlSignal::min_rate() const {
  double r = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < intervals(); ++i) r = std::min(r, rate(i));
  return r;
}

double ControlSignal::min_w0() const {
  double r = std::numeric_limits<double>::infinity();
  for (double v : w0_) r = std::min(r, v);
  return r;
}

bool ControlSignal::is_canonical(double tolerance) const {
  for (std::size_t i = 0; i < intervals(); ++i)
    if (std::abs(rate(i) - 1.0) > tolerance) return false;
  return true;
}

bool ControlSignal::in_cone(const PolyhedralCone& cone, double tolerance) const {
  if (cone.ambient_dimension() != control_dimension()) return false;
  for (std::size_t i = 0; i < intervals(); ++i)
    if (!cone.contains(w(i), tolerance)) return false;
  return true;
}

StrictControl::StrictControl(std::vector<double> breakpoints, Eigen::MatrixXd u)
    : breakpoints_(std::move(breakpoints)), u_(std::move(u)) {
  check_breakpoints(breakpoints_, "strict control");
  if (static_cast<std::size_t>(u_.rows()) + 1 != breakpoints_.size())
    throw DimensionMismatch("process", "strict control has inconsistent interval counts");
  if (!u_.allFinite()) throw DimensionMismatch("process", "control values must be finite");
}

StrictControl StrictControl::constant(double horizon, const Eigen::VectorXd& u) {
  return StrictControl({0.0, horizon}, u.transpose());
}

TimeChange::TimeChange(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.size() != values_.size() || knots_.size() < 2) throw BadTimeChange("time change needs matching knots and values");
  if (knots_.front() != 0.0 || values_.front() != 0.0) throw BadTimeChange("time change must satisfy sigma(0) = 0");
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i] > knots_[i - 1]) || !(values_[i] > values_[i - 1]))
      throw BadTimeChange("time change must be strictly increasing");
  }
}

TimeChange TimeChange::identity(double horizon) { return TimeChange({0.0, horizon}, {0.0, horizon}); }

TimeChange TimeChange::linear(double new_horizon, double old_horizon) {
  return TimeChange({0.0, new_horizon}, {0.0, old_horizon});
}

double TimeChange::slope(std::size_t piece) const {
  return (values_[piece + 1] - values_[piece]) / (knots_[piece + 1] - knots_[piece]);
}

double TimeChange::min_slope() const {
  double r = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i) r = std::min(r, slope(i));
  return r;
}

double TimeChange::max_slope() const {
  double r = 0.0;
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i) r = std::max(r, slope(i));
  return r;
}

double TimeChange::operator()(double s) const {
  if (s <= 0.0) return 0.0;
  if (s >= knots_.back()) return values_.back();
  auto it = std::upper_bound(knots_.begin(), knots_.end(), s);
  const std::size_t p = static_cast<std::size_t>(std::distance(knots_.begin(), it)) - 1;
  return values_[p] + slope(p) * (s - knots_[p]);
}

double TimeChange::inverse(double value) const {
  if (value <= 0.0) return 0.0;
  if (value >= values_.back()) return knots_.back();
  auto it = std::upper_bound(values_.begin(), values_.end(), value);
  const std::size_t p = static_cast<std::size_t>(std::distance(values_.begin(), it)) - 1;
  return knots_[p] + (value - values_[p]) / slope(p);
}

ExtendedProcess simulate_extended(const ControlAffineSystem& system, const ControlSignal& control,
                                  const Eigen::VectorXd& initial_state, const IntegrationOptions& options) {
  const double h = options.step_for(control.horizon());
  std::vector<std::size_t> steps;
  steps.reserve(control.intervals());
  for (std::size_t i = 0; i < control.intervals(); ++i) steps.push_back(steps_for(control.length(i), h));
  return simulate_extended(system, control, initial_state, steps, h);
}

ExtendedProcess simulate_extended(const ControlAffineSystem& system, const ControlSignal& control,
                                  const Eigen::VectorXd& initial_state, const std::vector<std::size_t>& steps,
                                  double nominal_step) {
  if (steps.size() != control.intervals()) throw DimensionMismatch("process", "step counts do not match intervals");
  ExtendedProcess p;
  p.control = control;
  p.initial_state = initial_state;
  p.step = nominal_step;
  p.trajectory = integrate(system, initial_state, control.breakpoints(), control.w0_values(), control.w_values(), steps);
  return p;
}

StrictProcess simulate_strict(const ControlAffineSystem& system, const StrictControl& control,
                              const Eigen::VectorXd& initial_state, const IntegrationOptions& options) {
  const double h = options.step_for(control.horizon());
  std::vector<std::size_t> steps;
  for (std::size_t i = 0; i < control.intervals(); ++i) steps.push_back(steps_for(control.length(i), h));
  StrictProcess p;
  p.control = control;
  p.initial_state = initial_state;
  p.step = h;
  const std::vector<double> ones(control.intervals(), 1.0);
  p.trajectory = integrate(system, initial_state, control.breakpoints(), ones, control.values(), steps);
  return p;
}

ExtendedProcess embed(const ControlAffineSystem& system, const StrictProcess& process) {
  const StrictControl& u = process.control;
  const std::size_t n_int = u.intervals();
  std::vector<double> breakpoints{0.0};
  std::vector<double> w0(n_int);
  Eigen::MatrixXd w(static_cast<Eigen::Index>(n_int), static_cast<Eigen::Index>(u.control_dimension()));
  std::vector<std::size_t> steps(n_int);
  for (std::size_t i = 0; i < n_int; ++i) {
    const Eigen::VectorXd ui = u.u(i);
    const double rate = 1.0 + ui.norm();  // d sigma / dt
    breakpoints.push_back(breakpoints.back() + rate * u.length(i));
    w0[i] = 1.0 / rate;
    w.row(static_cast<Eigen::Index>(i)) = (ui / rate).transpose();
    steps[i] = process.trajectory.steps_in(i);
  }
  const double ratio = breakpoints.back() / u.horizon();
  return simulate_extended(system, ControlSignal(std::move(breakpoints), std::move(w0), std::move(w)),
                           process.initial_state, steps, process.step * ratio);
}

StrictProcess restrict_process(const ControlAffineSystem& system, const ExtendedProcess& process) {
  const ControlSignal& c = process.control;
  const std::size_t n_int = c.intervals();
  std::vector<double> breakpoints{0.0};
  Eigen::MatrixXd u(static_cast<Eigen::Index>(n_int), static_cast<Eigen::Index>(c.control_dimension()));
  std::vector<std::size_t> steps(n_int);
  for (std::size_t i = 0; i < n_int; ++i) {
    if (!(c.w0(i) > 0.0))
      throw NotStrictPositive("interval " + std::to_string(i) + " has w0 = " + std::to_string(c.w0(i)) +
                              "; impulsive pieces have no strict-sense representative");
    breakpoints.push_back(breakpoints.back() + c.w0(i) * c.length(i));
    u.row(static_cast<Eigen::Index>(i)) = (c.w(i) / c.w0(i)).transpose();
    steps[i] = process.trajectory.steps_in(i);
  }
  StrictControl strict(std::move(breakpoints), std::move(u));
  StrictProcess p;
  p.control = strict;
  p.initial_state = process.initial_state;
  p.step = process.step * strict.horizon() / c.horizon();
  const std::vector<double> ones(n_int, 1.0);
  p.trajectory = integrate(system, process.initial_state, strict.breakpoints(), ones, strict.values(), steps);
  return p;
}

ExtendedProcess reparametrize(const ControlAffineSystem& system, const ExtendedProcess& process, const TimeChange& sigma) {
  const ControlSignal& old = process.control;
  const double s_old = old.horizon();
  if (std::abs(sigma.range_end() - s_old) > 1e-12 * std::max(1.0, s_old))
    throw BadTimeChange("time change ends at " + std::to_string(sigma.range_end()) + ", process horizon is " +
                        std::to_string(s_old));
  const double s_new = sigma.domain_end();

  std::vector<double> cuts = sigma.knots();
  for (std::size_t i = 1; i < old.breakpoints().size() - 1; ++i) cuts.push_back(sigma.inverse(old.breakpoints()[i]));
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> breakpoints{0.0};
  const double merge_tol = 1e-13 * std::max(1.0, s_new);
  for (double c : cuts) {
    if (c - breakpoints.back() > merge_tol && s_new - c > merge_tol) breakpoints.push_back(c);
  }
  breakpoints.push_back(s_new);

  const std::size_t n_int = breakpoints.size() - 1;
  std::vector<double> w0(n_int);
  Eigen::MatrixXd w(static_cast<Eigen::Index>(n_int), static_cast<Eigen::Index>(old.control_dimension()));
  const auto& knots = sigma.knots();
  for (std::size_t i = 0; i < n_int; ++i) {
    const double mid = 0.5 * (breakpoints[i] + breakpoints[i + 1]);
    auto it = std::upper_bound(knots.begin(), knots.end(), mid);
    const std::size_t piece = std::min<std::size_t>(static_cast<std::size_t>(std::distance(knots.begin(), it)) - 1, knots.size() - 2);
    const double slope = sigma.slope(piece);
    const std::size_t j = std::min(old.interval_at(sigma(mid)), old.intervals() - 1);
    w0[i] = old.w0(j) * slope;
    w.row(static_cast<Eigen::Index>(i)) = (old.w(j) * slope).transpose();
  }
  const double h = (process.step > 0.0 ? process.step : 1e-3 * s_old) * s_new / s_old;
  IntegrationOptions opts;
  opts.step = h;
  return simulate_extended(system, ControlSignal(std::move(breakpoints), std::move(w0), std::move(w)),
                           process.initial_state, opts);
}

ExtendedProcess canonicalize(const ControlAffineSystem& system, const ExtendedProcess& process) {
  const ControlSignal& c = process.control;
  const std::size_t n_int = c.intervals();
  std::vector<double> breakpoints{0.0};
  std::vector<double> w0(n_int);
  Eigen::MatrixXd w(static_cast<Eigen::Index>(n_int), static_cast<Eigen::Index>(c.control_dimension()));
  std::vector<std::size_t> steps(n_int);
  for (std::size_t i = 0; i < n_int; ++i) {
    const double rate = c.rate(i);
    if (!(rate > 1e-12))
      throw DegenerateClock("w0 + |w| vanishes on interval " + std::to_string(i));
    breakpoints.push_back(breakpoints.back() + rate * c.length(i));
    w0[i] = c.w0(i) / rate;
    w.row(static_cast<Eigen::Index>(i)) = (c.w(i) / rate).transpose();
    steps[i] = process.trajectory.steps_in(i);
  }
  const double ratio = breakpoints.back() / c.horizon();
  return simulate_extended(system, ControlSignal(std::move(breakpoints), std::move(w0), std::move(w)),
                           process.initial_state, steps, process.step * ratio);
}

ExtendedState state_at(const ControlAffineSystem& system, const ExtendedProcess& process, double s) {
  const TrajectorySamples& tr = process.trajectory;
  const std::size_t last = tr.nodes() - 1;
  if (s >= tr.grid.back()) return {tr.clock[last], tr.state(last), tr.energy[last]};
  if (s <= 0.0) return {0.0, tr.state(0), 0.0};
  auto it = std::upper_bound(tr.grid.begin(), tr.grid.end(), s);
  const std::size_t k = static_cast<std::size_t>(std::distance(tr.grid.begin(), it)) - 1;
  const double ds = s - tr.grid[k];
  if (ds == 0.0) return {tr.clock[k], tr.state(k), tr.energy[k]};
  auto off = std::upper_bound(tr.offsets.begin(), tr.offsets.end(), k);
  const std::size_t interval = static_cast<std::size_t>(std::distance(tr.offsets.begin(), off)) - 1;
  const double w0 = process.control.w0(interval);
  const Eigen::VectorXd w = process.control.w(interval);
  return {tr.clock[k] + w0 * ds, rk4_step(system, tr.state(k), w0, w, ds), tr.energy[k] + w.norm() * ds};
}

FeasibilityReport check_feasible(const ExtendedProcess& process, const TargetSpec& target, double energy_bound, double eta) {
  FeasibilityReport r;
  r.endpoint_distance = target.distance(process.end_clock(), process.end_state());
  r.within_target = r.endpoint_distance <= eta;
  r.energy = process.end_energy();
  r.energy_bound = energy_bound;
  r.within_energy = r.energy <= energy_bound + eta;
  r.feasible = r.within_target && r.within_energy;
  return r;
}

}  // namespace impulse
