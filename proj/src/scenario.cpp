#include "impulse/scenario.hpp"

#include <cmath>
#include <fstream>

#include "impulse/error.hpp"

namespace impulse {

using nlohmann::json;

namespace {

const json& member(const json& j, const std::string& key, const std::string& ptr) {
  if (!j.is_object()) throw SchemaError(ptr, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(ptr + "/" + key, "missing required field");
  return *it;
}

double number(const json& j, const std::string& ptr) {
  if (!j.is_number()) throw SchemaError(ptr, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(ptr, "expected a finite number");
  return v;
}

std::size_t count(const json& j, const std::string& ptr) {
  if (!j.is_number_integer() || j.get<long long>() < 0) throw SchemaError(ptr, "expected a nonnegative integer");
  return j.get<std::size_t>();
}

std::string text(const json& j, const std::string& ptr) {
  if (!j.is_string()) throw SchemaError(ptr, "expected a string");
  return j.get<std::string>();
}

Eigen::VectorXd vec(const json& j, std::size_t expected, const std::string& ptr) {
  if (!j.is_array()) throw SchemaError(ptr, "expected an array");
  if (j.size() != expected)
    throw SchemaError(ptr, "expected " + std::to_string(expected) + " entries, found " + std::to_string(j.size()));
  Eigen::VectorXd v(static_cast<Eigen::Index>(expected));
  for (std::size_t i = 0; i < expected; ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], ptr + "/" + std::to_string(i));
  return v;
}

std::vector<std::string> strings(const json& j, std::size_t expected, const std::string& ptr) {
  if (!j.is_array()) throw SchemaError(ptr, "expected an array of strings");
  if (j.size() != expected)
    throw SchemaError(ptr, "expected " + std::to_string(expected) + " entries, found " + std::to_string(j.size()));
  std::vector<std::string> out;
  for (std::size_t i = 0; i < expected; ++i) out.push_back(text(j[i], ptr + "/" + std::to_string(i)));
  return out;
}

// Generators are listed as vectors of length `rows`.
Eigen::MatrixXd generators(const json& j, std::size_t rows, const std::string& ptr) {
  if (!j.is_array()) throw SchemaError(ptr, "expected an array of generator vectors");
  Eigen::MatrixXd g(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) g.col(static_cast<Eigen::Index>(k)) = vec(j[k], rows, ptr + "/" + std::to_string(k));
  return g;
}

template <class F>
auto at(const std::string& ptr, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(ptr, e.name() + ": " + e.what());
  }
}

StrictControl parse_strict(const json& j, std::size_t m, const std::string& ptr) {
  const double horizon = number(member(j, "horizon", ptr), ptr + "/horizon");
  const json& recs = member(j, "records", ptr);
  if (!recs.is_array() || recs.empty()) throw SchemaError(ptr + "/records", "expected a nonempty array");
  std::vector<double> bp;
  Eigen::MatrixXd u(static_cast<Eigen::Index>(recs.size()), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const std::string rp = ptr + "/records/" + std::to_string(i);
    bp.push_back(number(member(recs[i], "t", rp), rp + "/t"));
    u.row(static_cast<Eigen::Index>(i)) = vec(member(recs[i], "u", rp), m, rp + "/u").transpose();
  }
  bp.push_back(horizon);
  return at(ptr, [&] { return StrictControl(std::move(bp), std::move(u)); });
}

}  // namespace

ControlSignal parse_control(const json& j, std::size_t m, const std::string& ptr) {
  const double horizon = number(member(j, "horizon", ptr), ptr + "/horizon");
  const json& recs = member(j, "records", ptr);
  if (!recs.is_array() || recs.empty()) throw SchemaError(ptr + "/records", "expected a nonempty array");
  std::vector<double> bp;
  std::vector<double> w0;
  Eigen::MatrixXd w(static_cast<Eigen::Index>(recs.size()), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const std::string rp = ptr + "/records/" + std::to_string(i);
    bp.push_back(number(member(recs[i], "s", rp), rp + "/s"));
    w0.push_back(number(member(recs[i], "w0", rp), rp + "/w0"));
    w.row(static_cast<Eigen::Index>(i)) = vec(member(recs[i], "w", rp), m, rp + "/w").transpose();
  }
  bp.push_back(horizon);
  return at(ptr, [&] { return ControlSignal(std::move(bp), std::move(w0), std::move(w)); });
}

json control_to_json(const ControlSignal& c) {
  json recs = json::array();
  for (std::size_t i = 0; i < c.intervals(); ++i) {
    const Eigen::VectorXd w = c.w(i);
    recs.push_back({{"s", c.start(i)}, {"w0", c.w0(i)}, {"w", std::vector<double>(w.data(), w.data() + w.size())}});
  }
  return {{"horizon", c.horizon()}, {"records", recs}};
}

Scenario parse_scenario(const json& doc) {
  Scenario sc;
  if (!doc.is_object()) throw SchemaError("", "scenario must be a JSON object");
  if (auto it = doc.find("name"); it != doc.end()) sc.name = text(*it, "/name");
  sc.n = count(member(doc, "n", ""), "/n");
  sc.m = count(member(doc, "m", ""), "/m");
  sc.m1 = count(member(doc, "m1", ""), "/m1");
  sc.m2 = count(member(doc, "m2", ""), "/m2");
  if (sc.n == 0) throw ValidationError("state dimension n must be positive");
  if (sc.m1 + sc.m2 != sc.m)
    throw ValidationError("cone hypothesis violated: C = C1 x C2 needs m1 + m2 = m, got " + std::to_string(sc.m1) +
                          " + " + std::to_string(sc.m2) + " != " + std::to_string(sc.m));

  sc.drift = strings(member(doc, "drift", ""), sc.n, "/drift");
  const json& controls = member(doc, "controls", "");
  if (!controls.is_array() || controls.size() != sc.m)
    throw SchemaError("/controls", "expected " + std::to_string(sc.m) + " control fields");
  for (std::size_t i = 0; i < sc.m; ++i)
    sc.controls.push_back(strings(controls[i], sc.n, "/controls/" + std::to_string(i)));

  sc.c2_generators = Eigen::MatrixXd(static_cast<Eigen::Index>(sc.m2), 0);
  sc.c1_extra = Eigen::MatrixXd(static_cast<Eigen::Index>(sc.m1), 0);
  if (auto it = doc.find("cone"); it != doc.end()) {
    if (auto g = it->find("c2_generators"); g != it->end()) sc.c2_generators = generators(*g, sc.m2, "/cone/c2_generators");
    if (auto g = it->find("c1_extra_generators"); g != it->end())
      sc.c1_extra = generators(*g, sc.m1, "/cone/c1_extra_generators");
  } else if (sc.m2 > 0) {
    throw SchemaError("/cone", "missing required field (m2 > 0)");
  }
  if (sc.m2 > 0) {
    const PolyhedralCone c2(sc.c2_generators);
    if (c2.generators().cols() == 0) throw ValidationError("cone hypothesis violated: C2 has no nonzero generators");
    if (!c2.is_pointed()) throw ValidationError("cone hypothesis violated: C2 must be pointed (contains no lines)");
  }

  std::vector<VectorField> gs;
  VectorField f = at("/drift", [&] { return VectorField::parse(sc.drift, sc.n); });
  for (std::size_t i = 0; i < sc.m; ++i)
    gs.push_back(at("/controls/" + std::to_string(i), [&] { return VectorField::parse(sc.controls[i], sc.n); }));
  sc.system = ControlAffineSystem(std::move(f), std::move(gs), PolyhedralCone::product(sc.m1, sc.c2_generators, sc.c1_extra),
                                  sc.m1);

  const json& target = member(doc, "target", "");
  const std::string type = text(member(target, "type", "/target"), "/target/type");
  if (type == "point") {
    const double t = number(member(target, "t", "/target"), "/target/t");
    sc.target = TargetSpec::point(t, vec(member(target, "x", "/target"), sc.n, "/target/x"));
  } else if (type == "level_set") {
    const json& cons = member(target, "constraints", "/target");
    if (!cons.is_array()) throw SchemaError("/target/constraints", "expected an array of strings");
    const auto list = strings(cons, cons.size(), "/target/constraints");
    sc.target = at("/target/constraints", [&] { return TargetSpec::level_set(list, sc.n); });
  } else {
    throw SchemaError("/target/type", "expected \"point\" or \"level_set\"");
  }

  sc.cost_text = text(member(doc, "cost", ""), "/cost");
  sc.cost = at("/cost", [&] { return parse(sc.cost_text, ParseOptions{sc.n, true}); });

  if (auto it = doc.find("energy_bound"); it != doc.end()) {
    if (it->is_string()) {
      if (it->get<std::string>() != "inf") throw SchemaError("/energy_bound", "expected a number or \"inf\"");
      sc.energy_bound = kInfiniteEnergy;
    } else {
      sc.energy_bound = number(*it, "/energy_bound");
      if (sc.energy_bound <= 0.0) throw ValidationError("energy bound K must be positive");
    }
  }
  sc.initial_state = vec(member(doc, "initial_state", ""), sc.n, "/initial_state");
  if (auto it = doc.find("step"); it != doc.end()) {
    sc.step = number(*it, "/step");
    if (sc.step <= 0.0) throw SchemaError("/step", "expected a positive step");
  }
  if (auto it = doc.find("max_degree"); it != doc.end()) sc.max_degree = count(*it, "/max_degree");
  if (auto it = doc.find("box"); it != doc.end()) {
    StateBox box;
    box.lower = vec(member(*it, "lower", "/box"), sc.n, "/box/lower");
    box.upper = vec(member(*it, "upper", "/box"), sc.n, "/box/upper");
    for (Eigen::Index i = 0; i < box.lower.size(); ++i)
      if (!(box.lower[i] < box.upper[i])) throw SchemaError("/box", "lower must be below upper in every coordinate");
    sc.box = box;
  }
  if (auto it = doc.find("reference"); it != doc.end()) sc.reference = parse_control(*it, sc.m, "/reference");
  if (auto it = doc.find("comparison"); it != doc.end()) sc.comparison = parse_control(*it, sc.m, "/comparison");
  if (auto it = doc.find("strict_control"); it != doc.end()) sc.strict_control = parse_strict(*it, sc.m, "/strict_control");
  if (auto it = doc.find("multipliers"); it != doc.end()) {
    MultiplierSpec ms;
    ms.p0 = number(member(*it, "p0", "/multipliers"), "/multipliers/p0");
    ms.p_end = vec(member(*it, "pT", "/multipliers"), sc.n, "/multipliers/pT");
    ms.pi = number(member(*it, "pi", "/multipliers"), "/multipliers/pi");
    ms.lambda = number(member(*it, "lambda", "/multipliers"), "/multipliers/lambda");
    sc.multipliers = ms;
  }
  for (const auto* c : {&sc.reference, &sc.comparison}) {
    if (*c && !(*c)->in_cone(sc.system.cone()))
      throw ValidationError("control values must lie in the cone C");
  }

  // Boundedness of the fields is only sampled, never proven.
  if (!sc.box) {
    sc.warnings.push_back("no state box declared; field bounds are unchecked");
  } else {
    try {
      const FieldBounds b = estimate_field_bounds(sc.system, *sc.box, {}, 1024);
      if (!std::isfinite(b.m_bound) || !std::isfinite(b.lipschitz) || b.m_bound > 1e8 || b.lipschitz > 1e8)
        sc.warnings.push_back("fields look unbounded over the declared box (M = " + std::to_string(b.m_bound) +
                              ", L = " + std::to_string(b.lipschitz) + ")");
    } catch (const Error& e) {
      sc.warnings.push_back(std::string("field sampling failed over the declared box: ") + e.what());
    }
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

}  // namespace impulse
