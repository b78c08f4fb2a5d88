#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "impulse/expr.hpp"
#include "impulse/process.hpp"
#include "impulse/target.hpp"

namespace impulse {

/// Raises w0 to max(w0, eps) on every interval and canonicalizes. Returns the
/// input unchanged when min w0 >= eps already.
ExtendedProcess epsilon_lift(const ControlAffineSystem& system, const ExtendedProcess& process, double eps);

struct SampleOptions {
  /// Lower bound on w0 in every random sample; also the smallest lift.
  double min_clock_rate = 2e-2;
  /// Integration step for samples; 0 reuses the reference step.
  double step = 0.0;
  std::size_t jobs = 1;
};

/// Canonical strict-positive processes z with d(z, reference) < r. The
/// population mixes epsilon-lifts, random piecewise perturbations projected
/// onto the cone and the canonical slice, and horizon jitter within r/2.
/// Deterministic given the seed, independent of `jobs`.
std::vector<ExtendedProcess> sample_ball(const ControlAffineSystem& system, const ExtendedProcess& reference, double r,
                                         std::size_t budget, std::uint64_t seed, const SampleOptions& options = {});

enum class GapVerdict { GapDetected, NoGapEvidence, Undetermined };
const char* to_string(GapVerdict v);

struct GapRecord {
  double radius = 0.0;
  double eta = 0.0;
  std::size_t samples = 0;       ///< samples with d < radius
  std::size_t feasible = 0;
  double best_cost;              ///< +inf when nothing is feasible
  double best_distance;          ///< closest endpoint to the target over all samples
};

struct GapReport {
  double reference_cost = 0.0;
  double margin = 0.0;
  std::vector<GapRecord> records;  ///< radius-major, eta in schedule order
  GapVerdict verdict = GapVerdict::Undetermined;
  std::size_t total_samples = 0;

  /// Records at one tolerance, in radius order.
  std::vector<GapRecord> at_eta(double eta) const;
};

struct GapOptions {
  std::vector<double> radii{0.1, 0.3, 1.0};
  std::vector<double> eta{1e-2, 3e-3, 1e-3};
  std::size_t budget = 2000;  ///< samples per radius
  std::uint64_t seed = 1;
  double margin = -1.0;       ///< negative selects 1e-3 (1 + |reference cost|)
  SampleOptions sampling;
};

/// Samples each ball, keeps samples feasible at each eta, and compares the
/// best strict cost with the reference cost. Samples are pooled, so a radius
/// sees every drawn sample within it and best cost is monotone in r.
/// The verdict reads the smallest eta. Throws InfeasibleReference when the
/// reference misses the target at that eta.
GapReport probe_gap(const ControlAffineSystem& system, const ExtendedProcess& reference, const TargetSpec& target,
                    const Expression& cost, double energy_bound, const GapOptions& options = {});

}  // namespace impulse
