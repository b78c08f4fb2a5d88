#include "impulse/gap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <future>
#include <limits>
#include <random>

#include "impulse/error.hpp"
#include "impulse/metric.hpp"

namespace impulse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Canonical control with w0 >= floor on every interval.
ControlSignal canonical_with_floor(const std::vector<double>& lengths, const std::vector<double>& w0,
                                   const Eigen::MatrixXd& w, double floor) {
  std::vector<double> bp{0.0};
  std::vector<double> c0(lengths.size());
  Eigen::MatrixXd cw(w.rows(), w.cols());
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double norm = w.row(ii).norm();
    const double rate = w0[i] + norm;
    double a = w0[i] / rate;
    Eigen::RowVectorXd b = w.row(ii) / rate;
    if (a < floor) {
      a = floor;
      b = norm > 0.0 ? Eigen::RowVectorXd(w.row(ii) * ((1.0 - floor) / norm)) : Eigen::RowVectorXd(b * 0.0);
      if (norm == 0.0) a = 1.0;
    }
    c0[i] = a;
    cw.row(ii) = b;
    bp.push_back(bp.back() + lengths[i] * rate);
  }
  return ControlSignal(std::move(bp), std::move(c0), std::move(cw));
}

ControlSignal perturb(const PolyhedralCone& cone, const ControlSignal& ref, double r, double floor, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double horizon = ref.horizon();
  const double amplitude = r * unit(rng) / (2.0 * horizon);
  std::vector<double> lengths;
  std::vector<double> w0;
  std::vector<Eigen::VectorXd> ws;
  for (std::size_t i = 0; i < ref.intervals(); ++i) {
    const std::size_t pieces = 1 + static_cast<std::size_t>(unit(rng) * 3.0);
    std::vector<double> cuts{0.0, 1.0};
    for (std::size_t j = 1; j < pieces; ++j) cuts.push_back(unit(rng));
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
      const double len = (cuts[j + 1] - cuts[j]) * ref.length(i);
      if (!(len > 1e-12)) continue;
      Eigen::VectorXd w = ref.w(i);
      for (Eigen::Index c = 0; c < w.size(); ++c) w[c] += amplitude * gauss(rng);
      w = cone.project(w);
      lengths.push_back(len);
      w0.push_back(std::max(floor, ref.w0(i) + amplitude * gauss(rng)));
      ws.push_back(std::move(w));
    }
  }
  Eigen::MatrixXd wm(static_cast<Eigen::Index>(ws.size()), static_cast<Eigen::Index>(ref.control_dimension()));
  for (std::size_t i = 0; i < ws.size(); ++i) wm.row(static_cast<Eigen::Index>(i)) = ws[i].transpose();
  if (unit(rng) < 0.5) {
    // Horizon jitter within r/2.
    const double target = horizon + (unit(rng) - 0.5) * r;
    if (target > 1e-9) {
      const double total = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < lengths.size(); ++i)
          s += lengths[i] * (w0[i] + ws[i].norm());
        return s;
      }();
      for (double& l : lengths) l *= target / total;
    }
  }
  return canonical_with_floor(lengths, w0, wm, floor);
}

std::uint64_t mix_seed(std::uint64_t seed, double r) {
  std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ULL;
  h ^= std::bit_cast<std::uint64_t>(r) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

template <class F>
std::vector<ExtendedProcess> simulate_all(const std::vector<ControlSignal>& controls, std::size_t jobs, F&& sim) {
  std::vector<ExtendedProcess> out(controls.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < controls.size(); ++i) out[i] = sim(controls[i]);
    return out;
  }
  std::vector<std::future<void>> futs;
  for (std::size_t t = 0; t < jobs; ++t) {
    futs.push_back(std::async(std::launch::async, [&, t] {
      for (std::size_t i = t; i < controls.size(); i += jobs) out[i] = sim(controls[i]);
    }));
  }
  for (auto& f : futs) f.get();
  return out;
}

}  // namespace

ExtendedProcess epsilon_lift(const ControlAffineSystem& system, const ExtendedProcess& process, double eps) {
  if (!(eps > 0.0) || eps > 1.0) throw ValidationError("epsilon_lift needs 0 < eps <= 1");
  const ControlSignal& c = process.control;
  if (c.min_w0() >= eps) return process;
  std::vector<double> w0 = c.w0_values();
  for (double& v : w0) v = std::max(v, eps);
  const ExtendedProcess lifted = simulate_extended(system, ControlSignal(c.breakpoints(), std::move(w0), c.w_values()),
                                                   process.initial_state, [&] {
                                                     std::vector<std::size_t> steps;
                                                     for (std::size_t i = 0; i < c.intervals(); ++i)
                                                       steps.push_back(process.trajectory.steps_in(i));
                                                     return steps;
                                                   }(),
                                                   process.step);
  return canonicalize(system, lifted);
}

std::vector<ExtendedProcess> sample_ball(const ControlAffineSystem& system, const ExtendedProcess& reference, double r,
                                         std::size_t budget, std::uint64_t seed, const SampleOptions& options) {
  if (!(r > 0.0)) throw ValidationError("sample radius must be positive");
  if (budget == 0) return {};
  const double floor = options.min_clock_rate;
  const double h = options.step > 0.0 ? options.step : reference.step;
  const ControlSignal& ref = reference.control;

  std::vector<ControlSignal> controls;
  std::vector<ExtendedProcess> lifted;
  auto accept = [&](const ControlSignal& c) { return dist_d(c, ref).total < r; };

  // Epsilon-lifts: r, r/2, ... down to the clock floor.
  std::vector<double> eps;
  for (double e = std::min(r, 1.0); e > floor; e *= 0.5) eps.push_back(e);
  eps.push_back(floor);
  for (double e : eps) {
    if (controls.size() + lifted.size() >= budget) break;
    ExtendedProcess z = epsilon_lift(system, reference, e);
    if (z.control.min_w0() > 0.0 && accept(z.control)) lifted.push_back(std::move(z));
  }

  std::mt19937_64 rng(mix_seed(seed, r));
  const std::size_t attempts = 20 * budget;
  for (std::size_t a = 0; a < attempts && controls.size() + lifted.size() < budget; ++a) {
    ControlSignal c = perturb(system.cone(), ref, r, floor, rng);
    if (accept(c)) controls.push_back(std::move(c));
  }

  IntegrationOptions io;
  io.step = h;
  std::vector<ExtendedProcess> out = simulate_all(controls, options.jobs, [&](const ControlSignal& c) {
    return simulate_extended(system, c, reference.initial_state, io);
  });
  lifted.insert(lifted.end(), std::make_move_iterator(out.begin()), std::make_move_iterator(out.end()));
  return lifted;
}

const char* to_string(GapVerdict v) {
  switch (v) {
    case GapVerdict::GapDetected: return "GapDetected";
    case GapVerdict::NoGapEvidence: return "NoGapEvidence";
    case GapVerdict::Undetermined: return "Undetermined";
  }
  return "?";
}

std::vector<GapRecord> GapReport::at_eta(double eta) const {
  std::vector<GapRecord> out;
  for (const auto& rec : records)
    if (rec.eta == eta) out.push_back(rec);
  return out;
}

GapReport probe_gap(const ControlAffineSystem& system, const ExtendedProcess& reference, const TargetSpec& target,
                    const Expression& cost, double energy_bound, const GapOptions& options) {
  if (options.radii.empty() || options.eta.empty()) throw ValidationError("probe needs at least one radius and one eta");
  std::vector<double> radii = options.radii;
  std::sort(radii.begin(), radii.end());
  const double eta_min = *std::min_element(options.eta.begin(), options.eta.end());

  const FeasibilityReport ref_feas = check_feasible(reference, target, energy_bound, eta_min);
  if (!ref_feas.feasible)
    throw InfeasibleReference("reference endpoint is " + std::to_string(ref_feas.endpoint_distance) +
                              " from the target (eta " + std::to_string(eta_min) + "), energy " +
                              std::to_string(ref_feas.energy));

  auto evaluate_cost = [&](const ExtendedProcess& z) {
    Eigen::VectorXd x = z.end_state();
    return cost.evaluate(x, z.end_clock());
  };

  GapReport report;
  report.reference_cost = evaluate_cost(reference);
  report.margin = options.margin >= 0.0 ? options.margin : 1e-3 * (1.0 + std::abs(report.reference_cost));

  struct Scored {
    double distance;
    double target_distance;
    double energy;
    double cost;
  };
  std::vector<Scored> pool;
  for (double r : radii) {
    const auto samples = sample_ball(system, reference, r, options.budget, options.seed, options.sampling);
    for (const auto& z : samples) {
      Scored s;
      s.distance = dist_d(z.control, reference.control).total;
      s.target_distance = target.distance(z.end_clock(), z.end_state());
      s.energy = z.end_energy();
      s.cost = evaluate_cost(z);
      pool.push_back(s);
    }
  }
  report.total_samples = pool.size();

  for (double r : radii) {
    for (double eta : options.eta) {
      GapRecord rec;
      rec.radius = r;
      rec.eta = eta;
      rec.best_cost = kInf;
      rec.best_distance = kInf;
      for (const auto& s : pool) {
        if (!(s.distance < r)) continue;
        ++rec.samples;
        rec.best_distance = std::min(rec.best_distance, s.target_distance);
        const bool feasible = s.target_distance <= eta && s.energy <= energy_bound + eta;
        if (!feasible) continue;
        ++rec.feasible;
        rec.best_cost = std::min(rec.best_cost, s.cost);
      }
      report.records.push_back(rec);
    }
  }

  const std::vector<GapRecord> decisive = report.at_eta(eta_min);
  const bool none = std::all_of(decisive.begin(), decisive.end(), [](const GapRecord& g) { return g.feasible == 0; });
  const GapRecord& smallest = decisive.front();
  if (none)
    report.verdict = GapVerdict::GapDetected;
  else if (smallest.feasible == 0)
    report.verdict = GapVerdict::Undetermined;
  else if (smallest.best_cost > report.reference_cost + report.margin)
    report.verdict = GapVerdict::GapDetected;
  else
    report.verdict = GapVerdict::NoGapEvidence;
  return report;
}

}  // namespace impulse
