#pragma once

#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "impulse/extremal.hpp"
#include "impulse/gap.hpp"
#include "impulse/metric.hpp"
#include "impulse/process.hpp"

namespace impulse {

/// Non-finite values become null (or "inf" for +infinity) so reports stay
/// valid JSON.
nlohmann::json number_json(double v);
nlohmann::json vector_json(const Eigen::VectorXd& v);

nlohmann::json to_json(const DistanceReport& r);
nlohmann::json to_json(const CertificateReport& r);
nlohmann::json to_json(const FeasibilityReport& r);
nlohmann::json to_json(const ConditionReport& r);
nlohmann::json to_json(const MultiplierCertificate& c);
nlohmann::json to_json(const GapReport& r);

/// Header `s,y0,y1..yn,beta`.
void write_extended_csv(const std::string& path, const ExtendedProcess& z);
/// Header `t,x1..xn,v`.
void write_strict_csv(const std::string& path, const StrictProcess& p);
/// Header `s,p1..pn`.
void write_adjoint_csv(const std::string& path, const std::vector<double>& grid, const Eigen::MatrixXd& path_values);
/// Header `r,eta,best_cost,feasible_count`.
void write_gap_csv(const std::string& path, const GapReport& r);

}  // namespace impulse
