#include "impulse/extremal.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <random>

#include "impulse/cone.hpp"
#include "impulse/error.hpp"

namespace impulse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Backward RK4 for dX/ds = -A(s)^T X on the process grid, X(S) = x_end.
// X is a vector (one covector) or a matrix (transition, one column per
// terminal coordinate). Midpoint states come from a half RK4 step.
template <class Mat>
std::vector<Mat> backward_sweep(const ControlAffineSystem& system, const ExtendedProcess& z, const Mat& x_end) {
  const TrajectorySamples& tr = z.trajectory;
  const std::size_t nodes = tr.nodes();
  std::vector<Mat> out(nodes);
  out[nodes - 1] = x_end;
  Mat q = x_end;
  for (std::size_t i = z.control.intervals(); i-- > 0;) {
    const double w0 = z.control.w0(i);
    const Eigen::VectorXd w = z.control.w(i);
    for (std::size_t k = tr.offsets[i + 1]; k > tr.offsets[i]; --k) {
      const double h = tr.grid[k] - tr.grid[k - 1];
      const Eigen::VectorXd y_lo = tr.state(k - 1);
      const Eigen::VectorXd y_mid = rk4_advance(system, y_lo, w0, w, 0.5 * h);
      const Eigen::MatrixXd a_hi = system.velocity_jacobian(tr.state(k), w0, w).transpose();
      const Eigen::MatrixXd a_mid = system.velocity_jacobian(y_mid, w0, w).transpose();
      const Eigen::MatrixXd a_lo = system.velocity_jacobian(y_lo, w0, w).transpose();
      const Mat k1 = a_hi * q;
      const Mat k2 = a_mid * (q + 0.5 * h * k1);
      const Mat k3 = a_mid * (q + 0.5 * h * k2);
      const Mat k4 = a_lo * (q + h * k3);
      q = q + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!q.allFinite()) throw NonFiniteState("extremal", "adjoint became non-finite at s = " + std::to_string(tr.grid[k - 1]));
      out[k - 1] = q;
    }
  }
  return out;
}

Eigen::MatrixXd stack_rows(const std::vector<Eigen::VectorXd>& rows, Eigen::Index n) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), n);
  for (std::size_t k = 0; k < rows.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = rows[k].transpose();
  return m;
}

struct Tracker {
  ConditionResult r;
  void see(double residual, double s) {
    if (residual > r.max_residual || (r.max_residual == 0.0 && residual > 0.0)) {
      r.max_residual = residual;
      r.worst_s = s;
    }
  }
};

}  // namespace

double hamiltonian(const ControlAffineSystem& system, const Eigen::VectorXd& x, const Eigen::VectorXd& p, double p0,
                   double pi, double w0, const Eigen::VectorXd& w) {
  if (static_cast<std::size_t>(p.size()) != system.state_dimension() ||
      static_cast<std::size_t>(w.size()) != system.control_dimension())
    throw DimensionMismatch("extremal", "hamiltonian arguments do not match the system");
  return p0 * w0 + p.dot(system.velocity(x, w0, w)) + pi * w.norm();
}

HamiltonianMax max_hamiltonian(const ControlAffineSystem& system, const Eigen::VectorXd& x, const Eigen::VectorXd& p,
                               double p0, double pi) {
  const std::size_t m = system.control_dimension();
  HamiltonianMax out;
  out.value = p0 + p.dot(system.drift().evaluate(x));
  out.w0 = 1.0;
  out.w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  if (m == 0) return out;
  Eigen::VectorXd c;
  const double sup = system.cone().unit_sup(system.control_matrix(x).transpose() * p, &c) + pi;
  if (sup > out.value) {
    out.value = sup;
    out.w0 = 0.0;
    out.w = c;
  }
  return out;
}

Eigen::MatrixXd integrate_adjoint(const ControlAffineSystem& system, const ExtendedProcess& process,
                                  const Eigen::VectorXd& p_end) {
  const std::size_t n = system.state_dimension();
  if (static_cast<std::size_t>(p_end.size()) != n)
    throw DimensionMismatch("extremal", "terminal covector has dimension " + std::to_string(p_end.size()));
  const auto path = backward_sweep<Eigen::VectorXd>(system, process, p_end);
  return stack_rows(path, static_cast<Eigen::Index>(n));
}

std::vector<Eigen::MatrixXd> adjoint_transition(const ControlAffineSystem& system, const ExtendedProcess& process) {
  const auto n = static_cast<Eigen::Index>(system.state_dimension());
  return backward_sweep<Eigen::MatrixXd>(system, process, Eigen::MatrixXd::Identity(n, n));
}

MultiplierCertificate MultiplierCertificate::with_path(const ControlAffineSystem& system, const ExtendedProcess& process,
                                                       double p0, const Eigen::VectorXd& p_end, double pi,
                                                       double lambda) {
  MultiplierCertificate c;
  c.p0 = p0;
  c.p_end = p_end;
  c.pi = pi;
  c.lambda = lambda;
  c.path = integrate_adjoint(system, process, p_end);
  return c;
}

const ConditionResult* ConditionReport::find(const std::string& name) const {
  for (const auto& c : conditions)
    if (c.name == name) return &c;
  return nullptr;
}

double ConditionReport::worst_ratio() const {
  double r = 0.0;
  for (const auto& c : conditions) r = std::max(r, c.ratio);
  return r;
}

const char* to_string(Normality n) {
  switch (n) {
    case Normality::Normal: return "Normal";
    case Normality::Abnormal: return "Abnormal";
    case Normality::Inconclusive: return "Inconclusive";
  }
  return "?";
}

ExtremalContext::ExtremalContext(const ControlAffineSystem& system, const ExtendedProcess& process,
                                 ApproximatingCone cone, const Expression& cost, double energy_bound,
                                 const BracketFamily& b0, const BracketFamily& b1)
    : system_(&system), process_(&process), cone_(std::move(cone)), energy_bound_(energy_bound) {
  const std::size_t n = system.state_dimension();
  const std::size_t m = system.control_dimension();
  const std::size_t m1 = system.m1();
  if (cone_.ambient_dimension() != n + 1)
    throw DimensionMismatch("extremal", "approximating cone must live in R^{1+n}");
  for (const BracketFamily* fam : {&b0, &b1}) {
    for (const auto& e : fam->entries)
      if (e.max_leaf_index() >= m1) throw DimensionMismatch("extremal", "bracket " + e.to_string() + " uses more than m1 fields");
  }

  const TrajectorySamples& tr = process.trajectory;
  const std::size_t nodes = tr.nodes();
  cost_gradient_ = time_state_gradient(cost, process.end_clock(), process.end_state());
  transition_ = adjoint_transition(system, process);

  drift_.reserve(nodes);
  control_.reserve(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    const Eigen::VectorXd y = tr.state(k);
    scale_ = std::max(scale_, y.norm());
    drift_.push_back(system.drift().evaluate(y));
    control_.push_back(system.control_matrix(y));
  }

  std::vector<VectorField> leaves(system.controls().begin(), system.controls().begin() + static_cast<std::ptrdiff_t>(m1));
  for (const auto& e : b0.entries) {
    const VectorField field = instantiate(e, leaves);
    std::vector<Eigen::VectorXd> vals;
    vals.reserve(nodes);
    for (std::size_t k = 0; k < nodes; ++k) vals.push_back(field.evaluate(tr.state(k)));
    b0_.push_back(std::move(vals));
  }
  for (const auto& e : b1.entries) {
    const VectorField field = instantiate(e, leaves);
    const VectorField fb = lie_bracket(system.drift(), field);
    std::vector<Eigen::VectorXd> vals;
    for (std::size_t k = 0; k < nodes; ++k) vals.push_back(fb.evaluate(tr.state(k)));
    b1_drift_.push_back(std::move(vals));
    std::vector<std::vector<Eigen::VectorXd>> per_j;
    for (std::size_t j = m1; j < m; ++j) {
      const VectorField gb = lie_bracket(system.controls()[j], field);
      std::vector<Eigen::VectorXd> gv;
      for (std::size_t k = 0; k < nodes; ++k) gv.push_back(gb.evaluate(tr.state(k)));
      per_j.push_back(std::move(gv));
    }
    b1_controls_.push_back(std::move(per_j));
  }

  for (std::size_t i = 0; i < process.control.intervals(); ++i) {
    IntervalData d;
    d.first = tr.offsets[i];
    d.last = tr.offsets[i + 1];
    const double rate = process.control.rate(i);
    if (rate > 0.0) {
      d.w0 = process.control.w0(i) / rate;
      d.w = process.control.w(i) / rate;
    } else {
      d.w = process.control.w(i);
    }
    d.norm_w = d.w.norm();
    intervals_.push_back(std::move(d));
  }
}

bool ExtremalContext::energy_active(double tolerance) const {
  if (!std::isfinite(energy_bound_)) return false;
  return process_->end_energy() >= energy_bound_ - tolerance;
}

ConditionReport ExtremalContext::check(const MultiplierCertificate& cert_in, const ConditionOptions& options) const {
  const ControlAffineSystem& sys = *system_;
  const TrajectorySamples& tr = process_->trajectory;
  const std::size_t n = sys.state_dimension();
  const std::size_t m1 = sys.m1();
  const std::size_t nodes = tr.nodes();
  if (static_cast<std::size_t>(cert_in.p_end.size()) != n)
    throw DimensionMismatch("extremal", "certificate covector has the wrong dimension");

  ConditionReport report;
  report.tolerance = options.tolerance * (1.0 + scale_);
  const double tau = report.tolerance;
  const double norm = std::sqrt(cert_in.p0 * cert_in.p0 + cert_in.p_end.squaredNorm() + cert_in.pi * cert_in.pi +
                                cert_in.lambda * cert_in.lambda);
  report.certificate_norm = norm;
  const double inv = norm > 0.0 ? 1.0 / norm : 0.0;
  const double p0 = cert_in.p0 * inv;
  const double pi = cert_in.pi * inv;
  const double lambda = cert_in.lambda * inv;
  const Eigen::VectorXd p_end = cert_in.p_end * inv;
  Eigen::MatrixXd path;
  if (cert_in.path.rows() == static_cast<Eigen::Index>(nodes) && cert_in.path.cols() == static_cast<Eigen::Index>(n))
    path = cert_in.path * inv;
  else
    path = Eigen::MatrixXd::Zero(0, 0);
  auto p_at = [&](std::size_t k) -> Eigen::VectorXd {
    if (path.rows() > 0) return path.row(static_cast<Eigen::Index>(k)).transpose();
    return transition_[k] * p_end;
  };

  auto finish = [&](Tracker& t, double tol) {
    t.r.tolerance = tol;
    t.r.pass = t.r.max_residual <= tol;
    t.r.ratio = tol > 0.0 ? t.r.max_residual / tol : (t.r.max_residual > 0.0 ? kInf : 0.0);
    report.conditions.push_back(t.r);
  };
  auto floor_check = [&](const char* name, double value, bool applies) {
    ConditionResult r;
    r.name = name;
    r.tolerance = options.nontrivial_floor;
    r.max_residual = value;
    r.worst_s = process_->horizon();
    r.pass = !applies || value >= options.nontrivial_floor;
    r.ratio = r.pass ? 0.0 : kInf;
    report.conditions.push_back(r);
  };

  // (i)
  floor_check("nontriviality", std::sqrt(p0 * p0 + p_end.squaredNorm() + lambda * lambda), true);
  floor_check("strong_nontriviality", std::sqrt(p_end.squaredNorm() + lambda * lambda), process_->end_clock() > 0.0);

  Tracker signs{{"multiplier_signs"}};
  signs.see(std::max({0.0, pi, -lambda}), process_->horizon());
  finish(signs, tau);

  // (ii)
  const bool active = energy_active(options.energy_tolerance);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n + 1));
  v[0] = p0;
  v.tail(static_cast<Eigen::Index>(n)) = p_end;
  v += lambda * cost_gradient_;
  Tracker trans{{"transversality"}};
  trans.see(cone_.basis.cols() > 0 ? (cone_.basis.transpose() * v).norm() : 0.0, process_->horizon());
  finish(trans, tau);
  Tracker energy{{"energy_multiplier"}};
  energy.see(active ? std::max(0.0, pi) : std::abs(pi), process_->horizon());
  finish(energy, tau);

  // (iii)
  Tracker adj{{"adjoint"}};
  if (path.rows() > 0) {
    for (std::size_t k = 0; k < nodes; ++k)
      adj.see((p_at(k) - transition_[k] * p_end).norm(), tr.grid[k]);
  }
  finish(adj, tau);

  // (iv), (v)
  std::vector<double> max_h(nodes);
  Tracker vanish{{"vanishing"}};
  for (std::size_t k = 0; k < nodes; ++k) {
    const Eigen::VectorXd p = p_at(k);
    double value = p0 + p.dot(drift_[k]);
    if (sys.control_dimension() > 0) value = std::max(value, sys.cone().unit_sup(control_[k].transpose() * p) + pi);
    max_h[k] = value;
    vanish.see(std::abs(value), tr.grid[k]);
  }
  Tracker maxim{{"maximization"}};
  for (const auto& iv : intervals_) {
    for (std::size_t k = iv.first; k <= iv.last; ++k) {
      const Eigen::VectorXd p = p_at(k);
      const double h = p0 * iv.w0 + p.dot(drift_[k] * iv.w0 + control_[k] * iv.w) + pi * iv.norm_w;
      maxim.see(std::abs(max_h[k] - h), tr.grid[k]);
    }
  }
  finish(maxim, tau);
  finish(vanish, tau);

  Tracker orth{{"control_orthogonality"}};
  Tracker hb0{{"brackets_b0"}};
  Tracker hb1{{"brackets_b1"}};
  if (!active) {
    for (std::size_t k = 0; k < nodes; ++k) {
      const Eigen::VectorXd p = p_at(k);
      for (std::size_t i = 0; i < m1; ++i) orth.see(std::abs(p.dot(control_[k].col(static_cast<Eigen::Index>(i)))), tr.grid[k]);
      for (const auto& e : b0_) hb0.see(std::abs(p.dot(e[k])), tr.grid[k]);
    }
    for (std::size_t i = 0; i < intervals_.size(); ++i) {
      const double w0 = process_->control.w0(i);
      const Eigen::VectorXd w = process_->control.w(i);
      for (std::size_t k = intervals_[i].first; k <= intervals_[i].last; ++k) {
        const Eigen::VectorXd p = p_at(k);
        for (std::size_t e = 0; e < b1_drift_.size(); ++e) {
          Eigen::VectorXd val = b1_drift_[e][k] * w0;
          for (std::size_t j = 0; j < b1_controls_[e].size(); ++j) val += b1_controls_[e][j][k] * w[static_cast<Eigen::Index>(m1 + j)];
          hb1.see(std::abs(p.dot(val)), tr.grid[k]);
        }
      }
    }
  }
  finish(orth, tau);
  finish(hb0, tau);
  finish(hb1, tau);

  report.verdict = std::all_of(report.conditions.begin(), report.conditions.end(), [](const auto& c) { return c.pass; });
  return report;
}

namespace {

struct NormalizationOutcome {
  std::optional<MultiplierCertificate> certificate;
  std::optional<ConditionReport> report;
  std::optional<MultiplierCertificate> gray;
  std::optional<ConditionReport> gray_report;
  bool tried = false;
};

}  // namespace

AbnormalSearchResult ExtremalContext::find_abnormal(const AbnormalSearchOptions& options) const {
  const ControlAffineSystem& sys = *system_;
  const TrajectorySamples& tr = process_->trajectory;
  const std::size_t n = sys.state_dimension();
  const std::size_t m = sys.control_dimension();
  const std::size_t m1 = sys.m1();
  const std::size_t nodes = tr.nodes();
  const auto d = static_cast<Eigen::Index>(n + 2);  // (p0, p_T, pi)
  const bool active = energy_active(options.conditions.energy_tolerance);

  // Equality constraints E v = 0.
  std::vector<Eigen::VectorXd> eq;
  auto push_eq = [&](Eigen::VectorXd row) {
    const double r = row.norm();
    if (r > 1e-12) eq.push_back(row / r);
  };
  auto covector_row = [&](std::size_t k, const Eigen::VectorXd& a) {
    // p(s_k) . a  =  p_T . (P_k^T a)
    return Eigen::VectorXd(transition_[k].transpose() * a);
  };
  // lambda = 0: (p0, p_T) in K-perp, i.e. orthogonal to K.
  for (Eigen::Index j = 0; j < cone_.basis.cols(); ++j) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(d);
    row.head(n + 1) = cone_.basis.col(j);
    push_eq(row);
  }
  if (!active) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(d);
    row[d - 1] = 1.0;
    push_eq(row);
  }
  for (const auto& iv : intervals_) {
    for (std::size_t k = iv.first; k <= iv.last; ++k) {
      Eigen::VectorXd row(d);
      row[0] = iv.w0;
      row.segment(1, static_cast<Eigen::Index>(n)) = covector_row(k, drift_[k] * iv.w0 + control_[k] * iv.w);
      row[d - 1] = iv.norm_w;
      push_eq(row);
    }
  }
  if (!active) {
    for (std::size_t k = 0; k < nodes; ++k) {
      auto state_row = [&](const Eigen::VectorXd& a) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(d);
        row.segment(1, static_cast<Eigen::Index>(n)) = covector_row(k, a);
        push_eq(row);
      };
      for (std::size_t i = 0; i < m1; ++i) state_row(control_[k].col(static_cast<Eigen::Index>(i)));
      for (const auto& e : b0_) state_row(e[k]);
    }
    for (std::size_t i = 0; i < intervals_.size(); ++i) {
      const double w0 = process_->control.w0(i);
      const Eigen::VectorXd w = process_->control.w(i);
      for (std::size_t k = intervals_[i].first; k <= intervals_[i].last; ++k) {
        for (std::size_t e = 0; e < b1_drift_.size(); ++e) {
          Eigen::VectorXd val = b1_drift_[e][k] * w0;
          for (std::size_t j = 0; j < b1_controls_[e].size(); ++j) val += b1_controls_[e][j][k] * w[static_cast<Eigen::Index>(m1 + j)];
          Eigen::VectorXd row = Eigen::VectorXd::Zero(d);
          row.segment(1, static_cast<Eigen::Index>(n)) = covector_row(k, val);
          push_eq(row);
        }
      }
    }
  }

  // Nullspace of E from the Gram matrix.
  Eigen::MatrixXd null_basis;
  if (eq.empty()) {
    null_basis = Eigen::MatrixXd::Identity(d, d);
  } else {
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
    for (const auto& r : eq) gram.noalias() += r * r.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const double band = options.gray_factor * options.conditions.tolerance;
    const double threshold = static_cast<double>(eq.size()) * band * band;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < d; ++j)
      if (es.eigenvalues()[j] <= threshold) keep.push_back(j);
    null_basis.resize(d, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) null_basis.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]);
  }
  const Eigen::Index q = null_basis.cols();

  AbnormalSearchResult result;
  result.nullspace_dimension = static_cast<std::size_t>(q);
  if (q == 0) return result;

  // Sampled unit directions in C.
  std::vector<Eigen::VectorXd> directions;
  if (m > 0) {
    const Eigen::MatrixXd& gens = sys.cone().generators();
    for (Eigen::Index j = 0; j < gens.cols(); ++j) directions.push_back(gens.col(j).normalized());
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t s = 0; s < options.sampled_directions && gens.cols() > 0; ++s) {
      Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
      for (Eigen::Index j = 0; j < gens.cols(); ++j) c += unit(rng) * gens.col(j).normalized();
      if (c.norm() > 1e-9) directions.push_back(c.normalized());
    }
  }

  // Inequality rows a . v <= 0, mapped into nullspace coordinates.
  auto build_rows = [&](const std::vector<Eigen::VectorXd>& dirs) {
    std::vector<Eigen::VectorXd> rows;
    auto push = [&](const Eigen::VectorXd& a) {
      Eigen::VectorXd r = null_basis.transpose() * a;
      const double len = r.norm();
      if (len > 1e-12) rows.push_back(r / len);
    };
    for (std::size_t k = 0; k < nodes; ++k) {
      Eigen::VectorXd a = Eigen::VectorXd::Zero(d);
      a[0] = 1.0;
      a.segment(1, static_cast<Eigen::Index>(n)) = covector_row(k, drift_[k]);
      push(a);
      for (const auto& c : dirs) {
        Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
        b.segment(1, static_cast<Eigen::Index>(n)) = covector_row(k, control_[k] * c);
        b[d - 1] = 1.0;
        push(b);
      }
    }
    Eigen::VectorXd a = Eigen::VectorXd::Zero(d);
    a[d - 1] = 1.0;
    push(a);
    Eigen::MatrixXd out(q, static_cast<Eigen::Index>(rows.size()));
    for (std::size_t j = 0; j < rows.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = rows[j];
    return out;
  };

  auto make_cert = [&](const Eigen::VectorXd& v) {
    MultiplierCertificate c;
    c.p0 = v[0];
    c.p_end = v.segment(1, static_cast<Eigen::Index>(n));
    c.pi = v[d - 1];
    c.lambda = 0.0;
    Eigen::MatrixXd path(static_cast<Eigen::Index>(nodes), static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < nodes; ++k) path.row(static_cast<Eigen::Index>(k)) = (transition_[k] * c.p_end).transpose();
    c.path = std::move(path);
    return c;
  };

  const Eigen::MatrixXd base_rows = build_rows(directions);

  // One normalization: sign * e_k . v = 1 in nullspace coordinates.
  auto attempt = [&](Eigen::Index coord, double sign) {
    NormalizationOutcome out;
    const Eigen::VectorXd c = sign * null_basis.row(coord).transpose();
    if (c.norm() < 1e-9) return out;
    out.tried = true;
    std::vector<Eigen::VectorXd> dirs = directions;
    Eigen::MatrixXd rows = base_rows;
    for (std::size_t round = 0; round <= options.max_cuts; ++round) {
      // Farkas: {z : A^T z <= 0, c . z = 1} is empty iff c lies in cone(A).
      const NnlsResult fit = nnls(rows, c);
      const Eigen::VectorXd r = c - fit.fitted;
      if (r.norm() <= options.lp_slack * c.norm()) return out;
      const double cr = c.dot(r);
      if (cr <= 0.0) return out;
      const Eigen::VectorXd v = null_basis * (r / cr);
      MultiplierCertificate cert = make_cert(v);
      ConditionReport rep = check(cert, options.conditions);
      const Normality g = grade_candidate(rep, options.gray_factor);
      if (g == Normality::Abnormal) {
        out.certificate = std::move(cert);
        out.report = std::move(rep);
        return out;
      }
      if (g == Normality::Inconclusive && !out.gray) {
        out.gray = cert;
        out.gray_report = rep;
      }
      const ConditionResult* mx = rep.find("maximization");
      const ConditionResult* vn = rep.find("vanishing");
      if ((mx && !mx->pass) || (vn && !vn->pass)) {
        // Cut: add the exact maximizing direction at the worst node.
        const double norm = rep.certificate_norm;
        std::size_t worst = 0;
        double worst_val = -kInf;
        for (std::size_t k = 0; k < nodes; ++k) {
          const Eigen::VectorXd p = cert.path.row(static_cast<Eigen::Index>(k)).transpose() / norm;
          const double val = m > 0 ? sys.cone().unit_sup(control_[k].transpose() * p) : -kInf;
          if (val > worst_val) {
            worst_val = val;
            worst = k;
          }
        }
        if (m == 0) return out;
        Eigen::VectorXd dir;
        sys.cone().unit_sup(control_[worst].transpose() * cert.path.row(static_cast<Eigen::Index>(worst)).transpose(), &dir);
        bool known = false;
        for (const auto& e : dirs) known = known || (e - dir).norm() < 1e-12;
        if (known) return out;
        dirs.push_back(dir);
        rows = build_rows(dirs);
        continue;
      }
      return out;
    }
    return out;
  };

  std::vector<std::pair<Eigen::Index, double>> order;
  for (Eigen::Index k = 0; k < d; ++k) {
    order.emplace_back(k, 1.0);
    order.emplace_back(k, -1.0);
  }

  std::vector<NormalizationOutcome> outcomes(order.size());
  if (options.jobs > 1) {
    for (std::size_t start = 0; start < order.size(); start += options.jobs) {
      std::vector<std::future<NormalizationOutcome>> futs;
      const std::size_t end = std::min(order.size(), start + options.jobs);
      for (std::size_t i = start; i < end; ++i)
        futs.push_back(std::async(std::launch::async, attempt, order[i].first, order[i].second));
      bool found = false;
      for (std::size_t i = start; i < end; ++i) {
        outcomes[i] = futs[i - start].get();
        found = found || outcomes[i].certificate.has_value();
      }
      if (found) break;
    }
  } else {
    for (std::size_t i = 0; i < order.size(); ++i) {
      outcomes[i] = attempt(order[i].first, order[i].second);
      if (outcomes[i].certificate) break;
    }
  }

  for (auto& o : outcomes) {
    if (o.tried) ++result.normalizations_tried;
    if (o.certificate) {
      result.certificate = std::move(o.certificate);
      result.report = std::move(o.report);
      result.gray_candidate.reset();
      return result;
    }
    if (o.gray && !result.gray_candidate) {
      result.gray_candidate = std::move(o.gray);
      result.report = std::move(o.gray_report);
    }
  }
  return result;
}

ConditionReport check_conditions(const ControlAffineSystem& system, const ExtendedProcess& process,
                                 const ApproximatingCone& cone, const Expression& cost, double energy_bound,
                                 const MultiplierCertificate& cert, const BracketFamily& b0, const BracketFamily& b1,
                                 const ConditionOptions& options) {
  const ExtremalContext ctx(system, process, cone, cost, energy_bound, b0, b1);
  return ctx.check(cert, options);
}

std::optional<MultiplierCertificate> find_abnormal(const ControlAffineSystem& system, const ExtendedProcess& process,
                                                   const TargetSpec& target, const Expression& cost,
                                                   double energy_bound, const BracketFamily& b0,
                                                   const BracketFamily& b1, const AbnormalSearchOptions& options) {
  const ExtremalContext ctx(system, process, target.approximating_cone(process.end_clock(), process.end_state()), cost,
                            energy_bound, b0, b1);
  return ctx.find_abnormal(options).certificate;
}

Normality grade_candidate(const ConditionReport& report, double gray_factor) {
  if (report.verdict) return Normality::Abnormal;
  for (const auto& c : report.conditions) {
    if (c.name == "nontriviality" || c.name == "strong_nontriviality") {
      if (!c.pass) return Normality::Normal;
    }
  }
  const double worst = report.worst_ratio();
  return worst > 1.0 && worst <= gray_factor ? Normality::Inconclusive : Normality::Normal;
}

Classification classify_normality(const ControlAffineSystem& system, const ExtendedProcess& process,
                                  const TargetSpec& target, const Expression& cost, double energy_bound,
                                  const BracketFamily& b0, const BracketFamily& b1,
                                  const AbnormalSearchOptions& options) {
  const ExtremalContext ctx(system, process, target.approximating_cone(process.end_clock(), process.end_state()), cost,
                            energy_bound, b0, b1);
  AbnormalSearchResult r = ctx.find_abnormal(options);
  Classification out;
  out.nullspace_dimension = r.nullspace_dimension;
  out.report = r.report;
  if (r.certificate) {
    out.verdict = Normality::Abnormal;
    out.certificate = std::move(r.certificate);
  } else if (r.gray_candidate) {
    out.verdict = Normality::Inconclusive;
    out.certificate = std::move(r.gray_candidate);
  }
  return out;
}

}  // namespace impulse
