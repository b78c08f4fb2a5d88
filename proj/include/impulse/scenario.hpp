#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "impulse/metric.hpp"
#include "impulse/process.hpp"
#include "impulse/system.hpp"
#include "impulse/target.hpp"

namespace impulse {

struct MultiplierSpec {
  double p0 = 0.0;
  Eigen::VectorXd p_end;
  double pi = 0.0;
  double lambda = 0.0;
};

/// A validated scenario file. Controls are stored as interval records
/// {s, w0, w} (extended) or {t, u} (strict); each record starts an interval
/// that ends at the next record or at the horizon.
struct Scenario {
  std::string name;
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t m1 = 0;
  std::size_t m2 = 0;
  std::vector<std::string> drift;
  std::vector<std::vector<std::string>> controls;
  Eigen::MatrixXd c2_generators;  ///< m2 x k
  Eigen::MatrixXd c1_extra;       ///< m1 x k
  ControlAffineSystem system;
  TargetSpec target;
  std::string cost_text;
  Expression cost;
  double energy_bound = kInfiniteEnergy;
  Eigen::VectorXd initial_state;
  double step = 0.0;  ///< absolute step; 0 uses 1e-3 of the horizon
  std::optional<StateBox> box;
  std::optional<ControlSignal> reference;
  std::optional<ControlSignal> comparison;
  std::optional<StrictControl> strict_control;
  std::optional<MultiplierSpec> multipliers;
  std::size_t max_degree = 3;
  std::vector<std::string> warnings;

  IntegrationOptions integration() const {
    IntegrationOptions o;
    o.step = step;
    return o;
  }
};

/// Throws SchemaError (with a JSON pointer) on malformed input and
/// ValidationError on violated problem hypotheses.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::string& path);

ControlSignal parse_control(const nlohmann::json& j, std::size_t m, const std::string& pointer);
nlohmann::json control_to_json(const ControlSignal& c);

}  // namespace impulse
