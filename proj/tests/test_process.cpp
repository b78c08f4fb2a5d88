#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "impulse/error.hpp"
#include "impulse/process.hpp"
#include "support.hpp"

using namespace impulse;
using testing_support::scalar_shift;

namespace {

ControlAffineSystem exponential_drift() {
  return ControlAffineSystem::unconstrained(VectorField::parse({"x1"}, 1), {VectorField::parse({"0"}, 1)});
}

ControlAffineSystem planar_system(std::mt19937_64& rng) {
  return ControlAffineSystem(testing_support::random_polynomial_field(rng, 2),
                             {testing_support::random_polynomial_field(rng, 2), testing_support::random_polynomial_field(rng, 2)},
                             PolyhedralCone::product(1, Eigen::MatrixXd::Ones(1, 1)), 1);
}

TimeChange random_time_change(std::mt19937_64& rng, double old_horizon) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> values{0.0, old_horizon};
  for (int i = 0; i < 3; ++i) values.push_back(old_horizon * (0.05 + 0.9 * unit(rng)));
  std::sort(values.begin(), values.end());
  std::vector<double> knots{0.0};
  for (std::size_t i = 1; i < values.size(); ++i) knots.push_back(knots.back() + (values[i] - values[i - 1]) / (0.5 + 1.5 * unit(rng)));
  return TimeChange(knots, values);
}

Eigen::VectorXd one(double v) { return Eigen::VectorXd::Constant(1, v); }

}  // namespace

TEST(SimulateStrict, LinearExact) {
  const StrictProcess p = simulate_strict(scalar_shift(1), StrictControl::constant(1.0, one(1.0)), one(0.0));
  for (std::size_t k = 0; k < p.trajectory.nodes(); ++k) {
    EXPECT_NEAR(p.trajectory.state(k)[0], p.trajectory.grid[k], 1e-10);
    EXPECT_NEAR(p.trajectory.energy[k], p.trajectory.grid[k], 1e-10);
  }
}

TEST(SimulateStrict, ExponentialClosedForm) {
  IntegrationOptions o;
  o.step = 1e-3;
  const StrictProcess p = simulate_strict(exponential_drift(), StrictControl::constant(1.0, one(0.0)), one(1.0), o);
  EXPECT_LE(std::abs(p.end_state()[0] - std::exp(1.0)), 1e-8);
}

TEST(SimulateStrict, ZeroControlZeroDrift) {
  const StrictProcess p = simulate_strict(scalar_shift(1), StrictControl::constant(2.0, one(0.0)), one(0.7));
  for (std::size_t k = 0; k < p.trajectory.nodes(); ++k) {
    EXPECT_EQ(p.trajectory.state(k)[0], 0.7);
    EXPECT_EQ(p.trajectory.energy[k], 0.0);
  }
}

TEST(SimulateExtended, ClockOnly) {
  const ExtendedProcess z = simulate_extended(exponential_drift(), ControlSignal::constant(1.0, 1.0, one(0.0)), one(1.0));
  EXPECT_NEAR(z.end_clock(), 1.0, 1e-14);
  EXPECT_EQ(z.end_energy(), 0.0);
  EXPECT_NEAR(z.end_state()[0], std::exp(1.0), 1e-8);
}

TEST(SimulateExtended, PureJump) {
  const ExtendedProcess z = simulate_extended(scalar_shift(0), ControlSignal::constant(1.0, 0.0, one(1.0)), one(0.0));
  for (std::size_t k = 0; k < z.trajectory.nodes(); ++k) {
    EXPECT_EQ(z.trajectory.clock[k], 0.0);
    EXPECT_NEAR(z.trajectory.state(k)[0], z.trajectory.grid[k], 1e-12);
    EXPECT_NEAR(z.trajectory.energy[k], z.trajectory.grid[k], 1e-12);
  }
}

TEST(SimulateExtended, CanonicalHalfHalf) {
  const ExtendedProcess z = simulate_extended(scalar_shift(1), ControlSignal::constant(3.0, 0.5, one(0.5)), one(0.0));
  EXPECT_NEAR(z.end_clock(), 1.5, 1e-12);
  EXPECT_NEAR(z.end_energy(), 1.5, 1e-12);
}

TEST(SimulateExtended, GridContainsBreakpoints) {
  const ControlSignal c({0.0, 0.123, 0.5, 1.0}, {1.0, 0.0, 0.5}, Eigen::Vector3d(0.0, 1.0, 0.5));
  const ExtendedProcess z = simulate_extended(scalar_shift(1), c, one(0.0));
  for (std::size_t i = 0; i <= c.intervals(); ++i) EXPECT_EQ(z.trajectory.grid[z.trajectory.offsets[i]], c.breakpoints()[i]);
}

TEST(SimulateExtended, Rk4Order) {
  const auto err = [](double h) {
    IntegrationOptions o;
    o.step = h;
    return std::abs(
        simulate_extended(exponential_drift(), ControlSignal::constant(1.0, 1.0, one(0.0)), one(1.0), o).end_state()[0] -
        std::exp(1.0));
  };
  EXPECT_GE(err(0.1) / err(0.05), 8.0);
  EXPECT_GE(err(0.05) / err(0.025), 8.0);
}

TEST(SimulateExtended, ClockAndEnergyNondecreasing) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const ControlAffineSystem sys = planar_system(rng);
    const ControlSignal c = testing_support::random_control(rng, sys.cone(), 5, 1.0, false);
    const ExtendedProcess z = simulate_extended(sys, c, Eigen::Vector2d(0.1, -0.1));
    for (std::size_t k = 1; k < z.trajectory.nodes(); ++k) {
      EXPECT_GE(z.trajectory.clock[k], z.trajectory.clock[k - 1]);
      EXPECT_GE(z.trajectory.energy[k], z.trajectory.energy[k - 1]);
    }
  }
}

TEST(ControlSignal, RejectsBadInput) {
  EXPECT_THROW(ControlSignal({0.0, 0.5, 0.5}, {1.0, 1.0}, Eigen::MatrixXd::Zero(2, 1)), BadTimeChange);
  EXPECT_THROW(ControlSignal({0.0, 1.0}, {1.0, 1.0}, Eigen::MatrixXd::Zero(2, 1)), DimensionMismatch);
}

TEST(Embed, HandExample) {
  const StrictProcess p = simulate_strict(scalar_shift(1), StrictControl::constant(1.0, one(1.0)), one(0.0));
  const ExtendedProcess z = embed(scalar_shift(1), p);
  EXPECT_NEAR(z.horizon(), 2.0, 1e-14);
  EXPECT_NEAR(z.control.w0(0), 0.5, 1e-14);
  EXPECT_NEAR(z.control.w(0)[0], 0.5, 1e-14);
  for (std::size_t k = 0; k < z.trajectory.nodes(); ++k) EXPECT_NEAR(z.trajectory.clock[k], z.trajectory.grid[k] / 2, 1e-12);
  EXPECT_TRUE(z.control.is_canonical());
  EXPECT_TRUE(z.control.is_strict_positive());
}

TEST(Embed, ZeroControlKeepsTime) {
  const StrictProcess p = simulate_strict(exponential_drift(), StrictControl::constant(1.0, one(0.0)), one(1.0));
  const ExtendedProcess z = embed(exponential_drift(), p);
  EXPECT_NEAR(z.horizon(), 1.0, 1e-15);
  EXPECT_EQ(z.control.w0(0), 1.0);
  EXPECT_NEAR(z.end_state()[0], p.end_state()[0], 1e-12);
}

TEST(Restrict, Examples) {
  const auto sys = scalar_shift(1);
  const StrictProcess p = simulate_strict(sys, StrictControl::constant(1.0, one(1.0)), one(0.0));
  const StrictProcess back = restrict_process(sys, embed(sys, p));
  EXPECT_NEAR(back.horizon(), 1.0, 1e-14);
  EXPECT_NEAR(back.control.u(0)[0], 1.0, 1e-14);

  const ExtendedProcess clock = simulate_extended(sys, ControlSignal::constant(1.5, 1.0, one(0.0)), one(0.0));
  const StrictProcess r = restrict_process(sys, clock);
  EXPECT_NEAR(r.horizon(), 1.5, 1e-15);
  EXPECT_EQ(r.control.u(0)[0], 0.0);

  const ExtendedProcess jump = simulate_extended(scalar_shift(0), ControlSignal::constant(1.0, 0.0, one(1.0)), one(0.0));
  EXPECT_THROW(restrict_process(scalar_shift(0), jump), NotStrictPositive);
}

TEST(Restrict, RoundTrip) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const ControlAffineSystem sys = planar_system(rng);
    const ControlSignal c = testing_support::random_control(rng, sys.cone(), 4, 1.0, false);
    Eigen::MatrixXd values = c.w_values();
    const StrictProcess p = simulate_strict(sys, StrictControl(c.breakpoints(), values), Eigen::Vector2d(u(rng), u(rng)));
    const StrictProcess q = restrict_process(sys, embed(sys, p));
    ASSERT_EQ(q.trajectory.nodes(), p.trajectory.nodes());
    EXPECT_NEAR(q.horizon(), p.horizon(), 1e-8);
    EXPECT_LE((q.control.values() - p.control.values()).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((q.trajectory.states - p.trajectory.states).cwiseAbs().maxCoeff(), 1e-8);
    for (std::size_t k = 0; k < p.trajectory.nodes(); ++k) EXPECT_NEAR(q.trajectory.energy[k], p.trajectory.energy[k], 1e-8);
  }
}

TEST(Reparametrize, Identity) {
  const auto sys = scalar_shift(1);
  const ExtendedProcess z = simulate_extended(sys, ControlSignal({0.0, 0.4, 1.0}, {0.5, 1.0}, Eigen::Vector2d(-0.5, 0.0)), one(0.0));
  const ExtendedProcess r = reparametrize(sys, z, TimeChange::identity(1.0));
  EXPECT_EQ(r.control.breakpoints(), z.control.breakpoints());
  EXPECT_EQ(r.control.w0_values(), z.control.w0_values());
  EXPECT_NEAR(r.end_state()[0], z.end_state()[0], 1e-14);
}

TEST(Reparametrize, DoubleSpeed) {
  const auto sys = scalar_shift(1);
  const ExtendedProcess z = simulate_extended(sys, ControlSignal::constant(2.0, 0.5, one(0.5)), one(0.0));
  const ExtendedProcess r = reparametrize(sys, z, TimeChange::linear(1.0, 2.0));
  EXPECT_NEAR(r.horizon(), 1.0, 1e-15);
  EXPECT_NEAR(r.control.w0(0), 1.0, 1e-15);
  EXPECT_NEAR(r.control.w(0)[0], 1.0, 1e-15);
  EXPECT_NEAR(r.end_state()[0], z.end_state()[0], 1e-12);
  EXPECT_NEAR(r.end_clock(), z.end_clock(), 1e-12);
}

TEST(Reparametrize, RejectsMismatchedRange) {
  const auto sys = scalar_shift(1);
  const ExtendedProcess z = simulate_extended(sys, ControlSignal::constant(2.0, 0.5, one(0.5)), one(0.0));
  EXPECT_THROW(reparametrize(sys, z, TimeChange::linear(1.0, 1.5)), BadTimeChange);
  EXPECT_THROW(TimeChange({0.0, 1.0, 1.0}, {0.0, 0.5, 1.0}), BadTimeChange);
}

TEST(Reparametrize, EndpointInvariance) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 15; ++trial) {
    const ControlAffineSystem sys = planar_system(rng);
    const ControlSignal c = testing_support::random_control(rng, sys.cone(), 4, 1.0, false);
    const ExtendedProcess z = simulate_extended(sys, c, Eigen::Vector2d(0.2, 0.1));
    const TimeChange sigma = random_time_change(rng, z.horizon());
    const ExtendedProcess r = reparametrize(sys, z, sigma);
    EXPECT_NEAR(r.end_clock(), z.end_clock(), 1e-6);
    EXPECT_NEAR(r.end_energy(), z.end_energy(), 1e-6);
    EXPECT_LE((r.end_state() - z.end_state()).norm(), 1e-6);
  }
}

TEST(Canonicalize, HandExample) {
  const auto sys = scalar_shift(1);
  const ExtendedProcess c = canonicalize(sys, simulate_extended(sys, ControlSignal::constant(1.0, 1.0, one(1.0)), one(0.0)));
  EXPECT_NEAR(c.horizon(), 2.0, 1e-15);
  EXPECT_NEAR(c.control.w0(0), 0.5, 1e-15);
  EXPECT_NEAR(c.control.w(0)[0], 0.5, 1e-15);
}

TEST(Canonicalize, FixedPoints) {
  const auto sys = scalar_shift(0);
  const ExtendedProcess jump = simulate_extended(sys, ControlSignal::constant(1.0, 0.0, one(1.0)), one(0.0));
  const ExtendedProcess c = canonicalize(sys, jump);
  EXPECT_EQ(c.control.breakpoints(), jump.control.breakpoints());
  EXPECT_LE((c.trajectory.states - jump.trajectory.states).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Canonicalize, DegenerateClock) {
  const auto sys = scalar_shift(1);
  const ExtendedProcess z =
      simulate_extended(sys, ControlSignal({0.0, 0.5, 1.0}, {1.0, 0.0}, Eigen::Vector2d(0.0, 0.0)), one(0.0));
  EXPECT_THROW(canonicalize(sys, z), DegenerateClock);
}

TEST(Canonicalize, IdempotentOnSliceAndEndpointPreserving) {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 15; ++trial) {
    const ControlAffineSystem sys = planar_system(rng);
    const ControlSignal ctl = testing_support::random_control(rng, sys.cone(), 5, 1.0, false);
    const ExtendedProcess z = simulate_extended(sys, ctl, Eigen::Vector2d(-0.1, 0.3));
    const ExtendedProcess c1 = canonicalize(sys, z);
    const ExtendedProcess c2 = canonicalize(sys, c1);
    for (std::size_t i = 0; i < c1.control.intervals(); ++i) EXPECT_NEAR(c1.control.rate(i), 1.0, 1e-9);
    EXPECT_LE((c1.end_state() - z.end_state()).norm(), 1e-6);
    ASSERT_EQ(c2.control.intervals(), c1.control.intervals());
    for (std::size_t i = 0; i <= c1.control.intervals(); ++i)
      EXPECT_NEAR(c2.control.breakpoints()[i], c1.control.breakpoints()[i], 1e-9);
    EXPECT_LE((c2.control.w_values() - c1.control.w_values()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((c2.trajectory.states - c1.trajectory.states).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(StateAt, MatchesNodesAndExtendsConstantly) {
  const auto sys = scalar_shift(1);
  const ExtendedProcess z = simulate_extended(sys, ControlSignal::constant(1.0, 0.5, one(0.5)), one(0.0));
  EXPECT_NEAR(state_at(sys, z, 0.3).state[0], 0.15, 1e-12);
  EXPECT_NEAR(state_at(sys, z, 0.3).clock, 0.15, 1e-12);
  EXPECT_NEAR(state_at(sys, z, 5.0).energy, 0.5, 1e-12);
}

TEST(Feasibility, Examples) {
  const TargetSpec target = TargetSpec::point(1.0, one(1.0));
  const auto sys = scalar_shift(1);
  const ExtendedProcess hit = simulate_extended(sys, ControlSignal::constant(2.0, 0.5, one(0.5)), one(0.0));
  EXPECT_TRUE(check_feasible(hit, target, kInfiniteEnergy, 1e-9).feasible);

  const ExtendedProcess near = simulate_extended(sys, ControlSignal::constant(2.0, 0.5, one(0.45)), one(0.0));
  const FeasibilityReport miss = check_feasible(near, target, kInfiniteEnergy, 0.05);
  EXPECT_FALSE(miss.feasible);
  EXPECT_FALSE(miss.within_target);
  EXPECT_NEAR(miss.endpoint_distance, 0.1, 1e-12);

  const ExtendedProcess heavy = simulate_extended(sys, ControlSignal::constant(2.0, 0.0, one(1.0)), one(-1.0));
  const FeasibilityReport r = check_feasible(heavy, TargetSpec::level_set(std::vector<std::string>{}, 1), 1.0, 1e-9);
  EXPECT_NEAR(r.energy, 2.0, 1e-12);
  EXPECT_FALSE(r.within_energy);
  EXPECT_FALSE(r.feasible);
}
