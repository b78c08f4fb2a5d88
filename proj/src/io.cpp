#include "impulse/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "impulse/error.hpp"

namespace impulse {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  return out;
}

}  // namespace

json number_json(double v) {
  if (std::isfinite(v)) return v;
  if (v > 0) return "inf";
  if (v < 0) return "-inf";
  return nullptr;
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_json(v[i]));
  return a;
}

json to_json(const DistanceReport& r) {
  return {{"total", r.total}, {"horizon_gap", r.horizon_gap}, {"integral", r.integral},
          {"w0_part", r.w0_part}, {"w_part", r.w_part}};
}

json to_json(const CertificateReport& r) {
  return {{"d_tilde", r.d_tilde},
          {"M", r.m_bound},
          {"L", r.lipschitz},
          {"R", r.reference_length},
          {"clock", {{"gap", r.clock_gap}, {"bound", r.clock_bound}, {"ok", r.clock_ok}}},
          {"state", {{"gap", r.state_gap}, {"bound", number_json(r.state_bound)}, {"ok", r.state_ok}}},
          {"energy", {{"gap", r.energy_gap}, {"bound", r.energy_bound}, {"ok", r.energy_ok}}},
          {"pass", r.pass}};
}

json to_json(const FeasibilityReport& r) {
  return {{"endpoint_distance", r.endpoint_distance}, {"within_target", r.within_target},
          {"energy", r.energy},                       {"energy_bound", number_json(r.energy_bound)},
          {"within_energy", r.within_energy},         {"feasible", r.feasible}};
}

json to_json(const ConditionReport& r) {
  json conds = json::array();
  for (const auto& c : r.conditions) {
    conds.push_back({{"name", c.name},
                     {"pass", c.pass},
                     {"max_residual", number_json(c.max_residual)},
                     {"worst_s", c.worst_s},
                     {"tolerance", c.tolerance},
                     {"ratio", number_json(c.ratio)}});
  }
  return {{"verdict", r.verdict}, {"tolerance", r.tolerance}, {"certificate_norm", r.certificate_norm},
          {"conditions", conds}};
}

json to_json(const MultiplierCertificate& c) {
  return {{"p0", c.p0}, {"pT", vector_json(c.p_end)}, {"pi", c.pi}, {"lambda", c.lambda}};
}

json to_json(const GapReport& r) {
  json recs = json::array();
  for (const auto& g : r.records) {
    recs.push_back({{"r", g.radius},
                    {"eta", g.eta},
                    {"samples", g.samples},
                    {"feasible", g.feasible},
                    {"best_cost", number_json(g.best_cost)},
                    {"best_distance", number_json(g.best_distance)}});
  }
  return {{"reference_cost", r.reference_cost}, {"margin", r.margin}, {"total_samples", r.total_samples},
          {"records", recs}, {"verdict", to_string(r.verdict)}};
}

void write_extended_csv(const std::string& path, const ExtendedProcess& z) {
  auto out = open_csv(path);
  const auto& tr = z.trajectory;
  out << "s,y0";
  for (Eigen::Index i = 0; i < tr.states.cols(); ++i) out << ",y" << i + 1;
  out << ",beta\n";
  for (std::size_t k = 0; k < tr.nodes(); ++k) {
    out << fmt(tr.grid[k]) << ',' << fmt(tr.clock[k]);
    for (Eigen::Index i = 0; i < tr.states.cols(); ++i) out << ',' << fmt(tr.states(static_cast<Eigen::Index>(k), i));
    out << ',' << fmt(tr.energy[k]) << '\n';
  }
}

void write_strict_csv(const std::string& path, const StrictProcess& p) {
  auto out = open_csv(path);
  const auto& tr = p.trajectory;
  out << "t";
  for (Eigen::Index i = 0; i < tr.states.cols(); ++i) out << ",x" << i + 1;
  out << ",v\n";
  for (std::size_t k = 0; k < tr.nodes(); ++k) {
    out << fmt(tr.grid[k]);
    for (Eigen::Index i = 0; i < tr.states.cols(); ++i) out << ',' << fmt(tr.states(static_cast<Eigen::Index>(k), i));
    out << ',' << fmt(tr.energy[k]) << '\n';
  }
}

void write_adjoint_csv(const std::string& path, const std::vector<double>& grid, const Eigen::MatrixXd& values) {
  auto out = open_csv(path);
  out << "s";
  for (Eigen::Index i = 0; i < values.cols(); ++i) out << ",p" << i + 1;
  out << '\n';
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out << fmt(grid[k]);
    for (Eigen::Index i = 0; i < values.cols(); ++i) out << ',' << fmt(values(static_cast<Eigen::Index>(k), i));
    out << '\n';
  }
}

void write_gap_csv(const std::string& path, const GapReport& r) {
  auto out = open_csv(path);
  out << "r,eta,best_cost,feasible_count\n";
  for (const auto& g : r.records)
    out << fmt(g.radius) << ',' << fmt(g.eta) << ',' << fmt(g.best_cost) << ',' << g.feasible << '\n';
}

}  // namespace impulse
