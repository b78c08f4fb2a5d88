#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "impulse/fields.hpp"
#include "impulse/process.hpp"
#include "impulse/target.hpp"

namespace impulse {

/// H = p0 w0 + p . (f(x) w0 + G(x) w) + pi |w|.
double hamiltonian(const ControlAffineSystem& system, const Eigen::VectorXd& x, const Eigen::VectorXd& p, double p0,
                   double pi, double w0, const Eigen::VectorXd& w);

struct HamiltonianMax {
  double value = 0.0;
  double w0 = 0.0;  ///< maximizing point of the slice w0 + |w| = 1
  Eigen::VectorXd w;
};

/// Maximum of H over the closed slice {(w0, w) : w0 >= 0, w in C, w0 + |w| = 1}.
/// H is affine along each segment from (1, 0) to (0, c), |c| = 1, so the
/// maximum is max(p0 + p.f, sup_c p.G c + pi); the sup comes from the cone
/// projection of G^T p.
HamiltonianMax max_hamiltonian(const ControlAffineSystem& system, const Eigen::VectorXd& x, const Eigen::VectorXd& p,
                               double p0, double pi);

/// Backward RK4 for dp/ds = -p (Df w0 + sum Dg_i w^i) along the frozen
/// trajectory, p(S) = p_end. Returns nodes x n on the process grid.
Eigen::MatrixXd integrate_adjoint(const ControlAffineSystem& system, const ExtendedProcess& process,
                                  const Eigen::VectorXd& p_end);

/// Transition matrices P_k with p(s_k) = P_k p(S), same scheme as above.
std::vector<Eigen::MatrixXd> adjoint_transition(const ControlAffineSystem& system, const ExtendedProcess& process);

/// Multipliers (p0, p, pi, lambda) with the adjoint path on the process grid.
struct MultiplierCertificate {
  double p0 = 0.0;
  Eigen::VectorXd p_end;
  double pi = 0.0;
  double lambda = 0.0;
  Eigen::MatrixXd path;  ///< nodes x n

  /// Builds the certificate and integrates its adjoint path.
  static MultiplierCertificate with_path(const ControlAffineSystem& system, const ExtendedProcess& process, double p0,
                                         const Eigen::VectorXd& p_end, double pi, double lambda);
};

struct ConditionResult {
  std::string name;
  bool pass = true;
  double max_residual = 0.0;
  double worst_s = 0.0;
  double tolerance = 0.0;
  /// max_residual / tolerance for equality-type checks; infinity for a
  /// failed nontriviality check.
  double ratio = 0.0;
};

struct ConditionReport {
  std::vector<ConditionResult> conditions;
  bool verdict = false;  ///< AND of all pass flags
  double tolerance = 0.0;
  double certificate_norm = 0.0;

  const ConditionResult* find(const std::string& name) const;
  double worst_ratio() const;
};

struct ConditionOptions {
  /// Base residual tolerance, scaled by (1 + sup |y|).
  double tolerance = 1e-6;
  /// beta(S) within this of K counts as an active energy constraint.
  double energy_tolerance = 1e-9;
  /// Lower bound on the normalized multiplier norm for nontriviality.
  double nontrivial_floor = 1e-6;
};

enum class Normality { Normal, Abnormal, Inconclusive };
const char* to_string(Normality n);

struct AbnormalSearchOptions {
  ConditionOptions conditions;
  std::size_t sampled_directions = 64;
  std::uint64_t seed = 0x5eedULL;
  double lp_slack = 1e-8;
  std::size_t max_cuts = 20;
  double gray_factor = 10.0;  ///< residual ratios in (1, gray_factor] are inconclusive
  std::size_t jobs = 1;
};

struct AbnormalSearchResult {
  std::optional<MultiplierCertificate> certificate;
  std::optional<ConditionReport> report;  ///< report of the certificate, or of the best gray candidate
  std::optional<MultiplierCertificate> gray_candidate;
  std::size_t nullspace_dimension = 0;
  std::size_t normalizations_tried = 0;
};

/// Everything derived from a reference process that the condition checks
/// need: adjoint transition, field values, bracket values at every node.
class ExtremalContext {
public:
  ExtremalContext(const ControlAffineSystem& system, const ExtendedProcess& process, ApproximatingCone cone,
                  const Expression& cost, double energy_bound, const BracketFamily& b0, const BracketFamily& b1);

  const ExtendedProcess& process() const { return *process_; }
  std::size_t nodes() const { return process_->trajectory.nodes(); }
  bool energy_active(double tolerance) const;
  double trajectory_scale() const { return scale_; }

  ConditionReport check(const MultiplierCertificate& cert, const ConditionOptions& options = {}) const;
  AbnormalSearchResult find_abnormal(const AbnormalSearchOptions& options = {}) const;

private:
  struct IntervalData {
    std::size_t first = 0;
    std::size_t last = 0;
    double w0 = 0.0;  ///< control scaled onto the slice w0 + |w| = 1
    Eigen::VectorXd w;
    double norm_w = 0.0;
  };

  const ControlAffineSystem* system_;
  const ExtendedProcess* process_;
  ApproximatingCone cone_;
  double energy_bound_;
  Eigen::VectorXd cost_gradient_;
  std::vector<Eigen::MatrixXd> transition_;
  std::vector<Eigen::VectorXd> drift_;
  std::vector<Eigen::MatrixXd> control_;
  std::vector<std::vector<Eigen::VectorXd>> b0_;                     ///< [entry][node]
  std::vector<std::vector<Eigen::VectorXd>> b1_drift_;               ///< [f, B]: [entry][node]
  std::vector<std::vector<std::vector<Eigen::VectorXd>>> b1_controls_;  ///< [g_j, B], j > m1: [entry][j][node]
  std::vector<IntervalData> intervals_;
  double scale_ = 0.0;
};

/// Evaluates conditions (i)-(vi) for `cert` along `process`.
ConditionReport check_conditions(const ControlAffineSystem& system, const ExtendedProcess& process,
                                 const ApproximatingCone& cone, const Expression& cost, double energy_bound,
                                 const MultiplierCertificate& cert, const BracketFamily& b0, const BracketFamily& b1,
                                 const ConditionOptions& options = {});

/// Searches for a certificate with lambda = 0 that passes every condition.
std::optional<MultiplierCertificate> find_abnormal(const ControlAffineSystem& system, const ExtendedProcess& process,
                                                   const TargetSpec& target, const Expression& cost,
                                                   double energy_bound, const BracketFamily& b0,
                                                   const BracketFamily& b1, const AbnormalSearchOptions& options = {});

/// Grades one candidate report: Abnormal if it passes, Inconclusive if the
/// worst residual ratio lies in (1, gray_factor] with nontriviality intact,
/// Normal otherwise.
Normality grade_candidate(const ConditionReport& report, double gray_factor);

struct Classification {
  Normality verdict = Normality::Normal;
  std::optional<MultiplierCertificate> certificate;
  std::optional<ConditionReport> report;
  std::size_t nullspace_dimension = 0;
};

Classification classify_normality(const ControlAffineSystem& system, const ExtendedProcess& process,
                                  const TargetSpec& target, const Expression& cost, double energy_bound,
                                  const BracketFamily& b0, const BracketFamily& b1,
                                  const AbnormalSearchOptions& options = {});

}  // namespace impulse
