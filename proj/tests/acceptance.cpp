// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "impulse/cli.hpp"
#include "impulse/cone.hpp"
#include "impulse/extremal.hpp"
#include "impulse/fields.hpp"
#include "impulse/gap.hpp"
#include "impulse/metric.hpp"
#include "impulse/process.hpp"
#include "impulse/scenario.hpp"
#include "support.hpp"

using namespace impulse;
namespace fs = std::filesystem;
namespace ts = testing_support;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Eigen::VectorXd one(double v) { return Eigen::VectorXd::Constant(1, v); }

Outcome differentiation() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> dim(1, 3);
  double worst = 0.0;
  for (int pair = 0; pair < 200; ++pair) {
    const std::size_t n = dim(rng);
    const Expression e = ts::random_expression(rng, n, 3);
    Eigen::VectorXd x(static_cast<Eigen::Index>(n));
    for (auto& v : x) v = u(rng);
    for (std::size_t j = 0; j < n; ++j) {
      const double sym = differentiate(e, Variable::state(j)).evaluate(x);
      Eigen::VectorXd a = x, b = x;
      a[static_cast<Eigen::Index>(j)] += 1e-6;
      b[static_cast<Eigen::Index>(j)] -= 1e-6;
      const double num = (e.evaluate(a) - e.evaluate(b)) / 2e-6;
      worst = std::max(worst, std::abs(sym - num) / (1e-5 * (1 + std::abs(sym))));
    }
  }
  return {worst <= 1.0, "worst error/tolerance " + fmt("%.3g", worst)};
}

Outcome flow_commutator() {
  std::mt19937_64 rng(102);
  double worst = 1e300;
  for (int pair = 0; pair < 10; ++pair) {
    const std::size_t n = pair < 5 ? 2 : 3;
    const VectorField h = ts::random_polynomial_field(rng, n);
    const VectorField k = ts::random_polynomial_field(rng, n);
    const ControlAffineSystem sys = ControlAffineSystem::unconstrained(VectorField::zero(n), {h, k});
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 0.1);
    const Eigen::VectorXd br = lie_bracket(h, k).evaluate(x);
    const auto defect = [&](double t) {
      const double s = std::sqrt(t);
      Eigen::MatrixXd w(4, 2);
      w << 1, 0, 0, 1, -1, 0, 0, -1;
      const ControlSignal c({0, s, 2 * s, 3 * s, 4 * s}, {0, 0, 0, 0}, w);
      return (simulate_extended(sys, c, x, std::vector<std::size_t>(4, 50), s / 50).end_state() - x - t * br).norm();
    };
    worst = std::min(worst, defect(1e-3) / defect(1e-4));
  }
  return {worst >= 3.0, "smallest defect ratio " + fmt("%.3g", worst)};
}

ControlAffineSystem random_planar(std::mt19937_64& rng) {
  return ControlAffineSystem(ts::random_polynomial_field(rng, 2),
                             {ts::random_polynomial_field(rng, 2), ts::random_polynomial_field(rng, 2)},
                             PolyhedralCone::product(1, Eigen::MatrixXd::Ones(1, 1)), 1);
}

Outcome rate_independence() {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double endpoint = 0.0, idem = 0.0, slice = 0.0;
  for (int pair = 0; pair < 100; ++pair) {
    const ControlAffineSystem sys = random_planar(rng);
    const ControlSignal c = ts::random_control(rng, sys.cone(), 4, 1.0, false);
    const ExtendedProcess z = simulate_extended(sys, c, Eigen::Vector2d(0.1, -0.1));
    std::vector<double> values{0.0, z.horizon()};
    for (int i = 0; i < 3; ++i) values.push_back(z.horizon() * (0.05 + 0.9 * unit(rng)));
    std::sort(values.begin(), values.end());
    std::vector<double> knots{0.0};
    for (std::size_t i = 1; i < values.size(); ++i)
      knots.push_back(knots.back() + (values[i] - values[i - 1]) / (0.5 + 1.5 * unit(rng)));
    const ExtendedProcess r = reparametrize(sys, z, TimeChange(knots, values));
    endpoint = std::max({endpoint, (r.end_state() - z.end_state()).norm(), std::abs(r.end_clock() - z.end_clock()),
                         std::abs(r.end_energy() - z.end_energy())});
    const ExtendedProcess c1 = canonicalize(sys, z);
    const ExtendedProcess c2 = canonicalize(sys, c1);
    for (std::size_t i = 0; i < c1.control.intervals(); ++i) slice = std::max(slice, std::abs(c1.control.rate(i) - 1.0));
    idem = std::max(idem, (c2.trajectory.states - c1.trajectory.states).cwiseAbs().maxCoeff());
    idem = std::max(idem, (c2.control.w_values() - c1.control.w_values()).cwiseAbs().maxCoeff());
    for (std::size_t i = 0; i <= c1.control.intervals(); ++i)
      idem = std::max(idem, std::abs(c2.control.breakpoints()[i] - c1.control.breakpoints()[i]));
  }
  return {endpoint <= 1e-6 && idem <= 1e-9 && slice <= 1e-9,
          "endpoint " + fmt("%.2g", endpoint) + ", idempotence " + fmt("%.2g", idem) + ", slice " + fmt("%.2g", slice)};
}

Outcome distance_equivalence() {
  std::mt19937_64 rng(104);
  std::uniform_real_distribution<double> hor(0.5, 1.5);
  const PolyhedralCone cone = PolyhedralCone::product(1, Eigen::MatrixXd::Ones(1, 1));
  double worst = -1e300;
  for (int pair = 0; pair < 100; ++pair) {
    const ControlSignal a = ts::random_control(rng, cone, 4, hor(rng), true);
    const ControlSignal b = ts::random_control(rng, cone, 3, hor(rng), true);
    const double d = dist_d(a, b).total, dt = dist_dtilde(a, b).total;
    worst = std::max({worst, d - dt, dt - 2 * d});
  }
  return {worst <= 1e-10, "max violation " + fmt("%.2g", worst)};
}

struct BoxedSystem {
  ControlAffineSystem system;
  Eigen::VectorXd x0;
  StateBox box;
};

std::vector<BoxedSystem> certificate_systems() {
  std::vector<BoxedSystem> out;
  for (const char* name : {"pure_jump.json", "reach_point.json"}) {
    const Scenario sc = load_scenario(ts::source_path(std::string("scenarios/") + name));
    out.push_back({sc.system, sc.initial_state, *sc.box});
  }
  out.push_back({ControlAffineSystem(VectorField::parse({"-x2", "x1"}, 2),
                                     {VectorField::parse({"1", "0"}, 2), VectorField::parse({"0", "x1"}, 2)},
                                     PolyhedralCone::product(1, Eigen::MatrixXd::Ones(1, 1)), 1),
                 Eigen::Vector2d(0.2, 0.0), {Eigen::Vector2d(-4, -4), Eigen::Vector2d(4, 4)}});
  out.push_back({ControlAffineSystem::unconstrained(VectorField::parse({"x2", "-sin(x1)"}, 2), {VectorField::parse({"0", "1"}, 2)}),
                 Eigen::Vector2d(0.5, 0.0), {Eigen::Vector2d(-3, -3), Eigen::Vector2d(3, 3)}});
  Eigen::MatrixXd c2(2, 2);
  c2 << 1, 0, 1, 1;
  out.push_back({ControlAffineSystem(VectorField::parse({"x2", "x3", "-x1"}, 3),
                                     {VectorField::parse({"1", "0", "0"}, 3), VectorField::parse({"0", "cos(x1)", "sin(x1)"}, 3),
                                      VectorField::parse({"0", "0", "1"}, 3)},
                                     PolyhedralCone::product(1, c2), 1),
                 Eigen::Vector3d(0.0, 0.1, -0.1), {Eigen::Vector3d(-4, -4, -4), Eigen::Vector3d(4, 4, 4)}});
  return out;
}

Outcome gronwall() {
  std::mt19937_64 rng(105);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::size_t failures = 0, pairs = 0;
  double tightest = 1e300;
  for (const BoxedSystem& s : certificate_systems()) {
    const auto inside = [&](const ExtendedProcess& z) {
      for (std::size_t i = 0; i < z.trajectory.nodes(); ++i)
        if (!s.box.contains(z.trajectory.state(i))) return false;
      return true;
    };
    for (int k = 0; k < 40;) {
      const ControlSignal rc = ts::random_control(rng, s.system.cone(), 3, 1.0, true);
      // Perturb values, breakpoints and horizon, then pull back into the cone.
      std::vector<double> bp = rc.breakpoints();
      const double scale = 0.3 * unit(rng);
      bp.back() *= 1.0 + scale * (unit(rng) - 0.5);
      for (std::size_t i = 1; i + 1 < bp.size(); ++i) bp[i] = std::min(bp[i] * (1.0 + 0.1 * scale * gauss(rng)), bp.back() * 0.99);
      std::sort(bp.begin(), bp.end());
      std::vector<double> w0 = rc.w0_values();
      Eigen::MatrixXd w = rc.w_values();
      for (std::size_t i = 0; i < w0.size(); ++i) {
        w0[i] = std::max(0.0, w0[i] + scale * gauss(rng));
        Eigen::VectorXd v = rc.w(i);
        for (auto& x : v) x += scale * gauss(rng);
        w.row(static_cast<Eigen::Index>(i)) = s.system.cone().project(v).transpose();
      }
      const ExtendedProcess ref = simulate_extended(s.system, rc, s.x0);
      const ExtendedProcess z = simulate_extended(s.system, ControlSignal(bp, w0, w), s.x0);
      // The estimate presumes both trajectories stay in the box; redraw otherwise.
      if (!inside(ref) || !inside(z)) continue;
      const CertificateReport r = gronwall_certificate(s.system, z, ref, s.box);
      if (!r.pass) ++failures;
      tightest = std::min({tightest, r.clock_margin(), r.state_margin(), r.energy_margin()});
      ++k;
      ++pairs;
    }
  }
  return {failures == 0, std::to_string(pairs) + " pairs, " + std::to_string(failures) + " failures, smallest margin " +
                             fmt("%.3g", tightest)};
}

Outcome embed_restrict() {
  std::mt19937_64 rng(106);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  bool tags = true;
  for (int k = 0; k < 50; ++k) {
    const ControlAffineSystem sys = random_planar(rng);
    const ControlSignal c = ts::random_control(rng, sys.cone(), 4, 0.5 + 0.5 * std::abs(u(rng)), false);
    const StrictProcess p =
        simulate_strict(sys, StrictControl(c.breakpoints(), 0.5 * c.w_values()), Eigen::Vector2d(u(rng), u(rng)) * 0.3);
    const ExtendedProcess z = embed(sys, p);
    tags = tags && z.control.is_canonical() && z.control.is_strict_positive();
    const StrictProcess q = restrict_process(sys, z);
    worst = std::max(worst, std::abs(q.horizon() - p.horizon()));
    worst = std::max(worst, (q.control.values() - p.control.values()).cwiseAbs().maxCoeff());
    worst = std::max(worst, (q.trajectory.states - p.trajectory.states).cwiseAbs().maxCoeff());
    for (std::size_t i = 0; i < p.trajectory.nodes(); ++i)
      worst = std::max(worst, std::abs(q.trajectory.energy[i] - p.trajectory.energy[i]));
  }
  return {worst <= 1e-8 && tags, "sup error " + fmt("%.2g", worst) + (tags ? "" : ", tag violation")};
}

struct Loaded {
  Scenario sc;
  ExtendedProcess z;
  BracketFamily b0, b1;
};

Loaded load(const std::string& name) {
  Loaded l{load_scenario(ts::source_path("scenarios/" + name)), {}, {}, {}};
  l.z = simulate_extended(l.sc.system, *l.sc.reference, l.sc.initial_state, l.sc.integration());
  l.b0 = enumerate_family(l.sc.m1, l.sc.max_degree, FamilyTag::B0);
  l.b1 = enumerate_family(l.sc.m1, l.sc.max_degree, FamilyTag::B1);
  return l;
}

Outcome extremality() {
  const Loaded pj = load("pure_jump.json");
  const auto cert = MultiplierCertificate::with_path(pj.sc.system, pj.z, -1.0, one(0.0), 0.0, 0.0);
  const ConditionReport r =
      check_conditions(pj.sc.system, pj.z, pj.sc.target.approximating_cone(pj.z.end_clock(), pj.z.end_state()), pj.sc.cost,
                       pj.sc.energy_bound, cert, pj.b0, pj.b1);
  const Classification a = classify_normality(pj.sc.system, pj.z, pj.sc.target, pj.sc.cost, pj.sc.energy_bound, pj.b0, pj.b1);
  const Loaded rp = load("reach_point.json");
  const Classification b = classify_normality(rp.sc.system, rp.z, rp.sc.target, rp.sc.cost, rp.sc.energy_bound, rp.b0, rp.b1);
  return {r.verdict && a.verdict == Normality::Abnormal && b.verdict == Normality::Normal,
          std::string("certificate ") + (r.verdict ? "passes" : "fails") + ", pure jump " + to_string(a.verdict) +
              ", reach point " + to_string(b.verdict)};
}

Outcome gap_consistency() {
  GapOptions o;
  o.radii = {0.1, 0.3, 1.0};
  o.budget = 2000;
  const Loaded pj = load("pure_jump.json");
  const GapReport a = probe_gap(pj.sc.system, pj.z, pj.sc.target, pj.sc.cost, pj.sc.energy_bound, o);
  std::size_t feasible = 0;
  for (const auto& rec : a.records) feasible += rec.feasible;
  const Loaded rp = load("reach_point.json");
  const GapReport b = probe_gap(rp.sc.system, rp.z, rp.sc.target, rp.sc.cost, rp.sc.energy_bound, o);
  const auto tight = b.at_eta(o.eta.back());
  const double best = tight.back().best_cost;
  const bool ok = a.verdict == GapVerdict::GapDetected && feasible == 0 && b.verdict == GapVerdict::NoGapEvidence &&
                  std::abs(best - b.reference_cost) <= 5e-3;
  return {ok, std::string("pure jump ") + to_string(a.verdict) + " with " + std::to_string(feasible) +
                  " feasible samples; reach point " + to_string(b.verdict) + ", best cost " + fmt("%.6g", best) +
                  " vs reference " + fmt("%.6g", b.reference_cost)};
}

Outcome moreau() {
  std::mt19937_64 rng(109);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 6), count(1, 8);
  double orth = 0.0, polar = -1e300;
  for (int k = 0; k < 500; ++k) {
    const int m = dim(rng), c = count(rng);
    Eigen::MatrixXd gens(m, c);
    for (auto& v : gens.reshaped()) v = g(rng);
    const PolyhedralCone cone(gens);
    Eigen::VectorXd l(m);
    for (auto& v : l) v = g(rng);
    const Eigen::VectorXd p = cone.project(l);
    const Eigen::VectorXd r = l - p;
    orth = std::max(orth, std::abs(r.dot(p)));
    polar = std::max(polar, (gens.transpose() * r).maxCoeff());
  }
  return {orth <= 1e-9 && polar <= 1e-9, "orthogonality " + fmt("%.2g", orth) + ", polar " + fmt("%.2g", polar)};
}

std::string slurp_stable(const fs::path& p) {
  std::ifstream in(p);
  return impulse::cli::stable_text(nlohmann::json::parse(in));
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "impulse_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::size_t reports = 0, mismatches = 0;
  for (const char* scenario : {"pure_jump", "reach_point"}) {
    for (const auto& command : impulse::cli::commands()) {
      std::string texts[2];
      for (int run = 0; run < 2; ++run) {
        const fs::path out = dir / (std::string(scenario) + "." + command + "." + std::to_string(run) + ".json");
        const std::string cmd = std::string(IMPULSE_CLI_PATH) + " " + command + " --scenario " +
                                ts::source_path(std::string("scenarios/") + scenario + ".json") + " --out " + out.string() +
                                " 2>/dev/null";
        if (std::system(cmd.c_str()) != 0) return {false, command + " failed on " + scenario};
        texts[run] = slurp_stable(out);
      }
      ++reports;
      if (texts[0] != texts[1]) ++mismatches;
    }
  }
  fs::remove_all(dir);
  return {mismatches == 0, std::to_string(reports) + " report pairs, " + std::to_string(mismatches) + " differ"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"symbolic differentiation matches central differences", differentiation},
      {"flow commutator defect shrinks with the bracket", flow_commutator},
      {"reparametrization and canonical form invariants", rate_independence},
      {"d and d-tilde are equivalent on canonical pairs", distance_equivalence},
      {"Gronwall certificate holds on perturbation pairs", gronwall},
      {"embed and restrict are inverse", embed_restrict},
      {"extremality checker and classifier on shipped scenarios", extremality},
      {"gap probe agrees with normality on shipped scenarios", gap_consistency},
      {"Moreau decomposition of the cone projection", moreau},
      {"CLI reports are reproducible", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %zu %s (%s; %.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
