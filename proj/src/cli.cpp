#include "impulse/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "impulse/error.hpp"
#include "impulse/extremal.hpp"
#include "impulse/fields.hpp"
#include "impulse/gap.hpp"
#include "impulse/io.hpp"
#include "impulse/metric.hpp"
#include "impulse/scenario.hpp"

namespace impulse::cli {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open scenario file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string csv_path(const RunArgs& args, const std::string& name) {
  std::filesystem::create_directories(args.traj_dir);
  return (std::filesystem::path(args.traj_dir) / name).string();
}

const ControlSignal& need_reference(const Scenario& sc) {
  if (!sc.reference) throw ValidationError("scenario has no reference control");
  return *sc.reference;
}

json process_summary(const ExtendedProcess& z) {
  return {{"horizon", z.horizon()},
          {"nodes", z.trajectory.nodes()},
          {"end_clock", z.end_clock()},
          {"end_state", vector_json(z.end_state())},
          {"end_energy", z.end_energy()},
          {"canonical", z.control.is_canonical()},
          {"strict_positive", z.control.is_strict_positive()}};
}

std::size_t degree_of(const Scenario& sc, const RunArgs& args) { return args.max_degree > 0 ? args.max_degree : sc.max_degree; }

json cmd_simulate(const Scenario& sc, const RunArgs& args) {
  json result = json::object();
  if (!sc.reference && !sc.strict_control) throw ValidationError("scenario has neither a reference nor a strict control");
  if (sc.reference) {
    const ExtendedProcess z = simulate_extended(sc.system, *sc.reference, sc.initial_state, sc.integration());
    json e = process_summary(z);
    e["feasibility"] = to_json(check_feasible(z, sc.target, sc.energy_bound, 1e-3));
    result["extended"] = e;
    if (!args.traj_dir.empty()) write_extended_csv(csv_path(args, "extended.csv"), z);
  }
  if (sc.strict_control) {
    const StrictProcess p = simulate_strict(sc.system, *sc.strict_control, sc.initial_state, sc.integration());
    result["strict"] = {{"horizon", p.horizon()},
                        {"nodes", p.trajectory.nodes()},
                        {"end_state", vector_json(p.end_state())},
                        {"end_energy", p.end_energy()}};
    if (!args.traj_dir.empty()) write_strict_csv(csv_path(args, "strict.csv"), p);
  }
  return result;
}

json cmd_embed(const Scenario& sc, const RunArgs& args) {
  if (!sc.strict_control) throw ValidationError("scenario has no strict_control to embed");
  const StrictProcess p = simulate_strict(sc.system, *sc.strict_control, sc.initial_state, sc.integration());
  const ExtendedProcess z = embed(sc.system, p);
  const StrictProcess back = restrict_process(sc.system, z);
  json result = process_summary(z);
  result["control"] = control_to_json(z.control);
  result["roundtrip"] = {{"horizon_error", std::abs(back.horizon() - p.horizon())},
                         {"state_error", (back.end_state() - p.end_state()).norm()},
                         {"energy_error", std::abs(back.end_energy() - p.end_energy())}};
  if (!args.traj_dir.empty()) write_extended_csv(csv_path(args, "embedded.csv"), z);
  return result;
}

json cmd_canonicalize(const Scenario& sc, const RunArgs& args) {
  const ExtendedProcess z = simulate_extended(sc.system, need_reference(sc), sc.initial_state, sc.integration());
  const ExtendedProcess c = canonicalize(sc.system, z);
  json result = process_summary(c);
  result["control"] = control_to_json(c.control);
  result["endpoint_shift"] = {{"clock", std::abs(c.end_clock() - z.end_clock())},
                              {"state", (c.end_state() - z.end_state()).norm()},
                              {"energy", std::abs(c.end_energy() - z.end_energy())}};
  if (!args.traj_dir.empty()) write_extended_csv(csv_path(args, "canonical.csv"), c);
  return result;
}

json cmd_distance(const Scenario& sc, const RunArgs& args) {
  const ControlSignal& ref = need_reference(sc);
  const ControlSignal& other = sc.comparison ? *sc.comparison : ref;
  json result = {{"d", to_json(dist_d(other, ref))}, {"d_tilde", to_json(dist_dtilde(other, ref))}};
  if (sc.box) {
    const ExtendedProcess zr = simulate_extended(sc.system, ref, sc.initial_state, sc.integration());
    const ExtendedProcess zc = simulate_extended(sc.system, other, sc.initial_state, sc.integration());
    result["certificate"] = to_json(gronwall_certificate(sc.system, zc, zr, *sc.box));
    if (!args.traj_dir.empty()) {
      write_extended_csv(csv_path(args, "reference.csv"), zr);
      write_extended_csv(csv_path(args, "comparison.csv"), zc);
    }
  }
  return result;
}

json cmd_brackets(const Scenario& sc, const RunArgs& args) {
  const std::size_t degree = degree_of(sc, args);
  const BracketFamily fam = enumerate_family(sc.m1, degree, FamilyTag::B0);
  json list = json::array();
  json values = json::array();
  std::vector<VectorField> leaves(sc.system.controls().begin(),
                                  sc.system.controls().begin() + static_cast<std::ptrdiff_t>(sc.m1));
  for (const auto& b : fam.entries) {
    list.push_back(b.to_string());
    values.push_back({{"bracket", b.to_string()},
                      {"degree", b.degree()},
                      {"field", instantiate(b, leaves).to_strings()},
                      {"at_initial_state", vector_json(eval_formal(b, leaves, sc.initial_state))}});
  }
  return {{"m1", sc.m1}, {"max_degree", degree}, {"count", fam.entries.size()}, {"family", list}, {"entries", values}};
}

struct Families {
  BracketFamily b0;
  BracketFamily b1;
};

Families families(const Scenario& sc, const RunArgs& args) {
  const std::size_t degree = degree_of(sc, args);
  return {enumerate_family(sc.m1, degree, FamilyTag::B0), enumerate_family(sc.m1, degree, FamilyTag::B1)};
}

json cmd_check(const Scenario& sc, const RunArgs& args) {
  if (!sc.multipliers) throw ValidationError("scenario has no multipliers to check");
  const ExtendedProcess z = simulate_extended(sc.system, need_reference(sc), sc.initial_state, sc.integration());
  const Families fam = families(sc, args);
  const MultiplierCertificate cert = MultiplierCertificate::with_path(
      sc.system, z, sc.multipliers->p0, sc.multipliers->p_end, sc.multipliers->pi, sc.multipliers->lambda);
  const ExtremalContext ctx(sc.system, z, sc.target.approximating_cone(z.end_clock(), z.end_state()), sc.cost,
                            sc.energy_bound, fam.b0, fam.b1);
  const ConditionReport report = ctx.check(cert);
  if (!args.traj_dir.empty()) write_adjoint_csv(csv_path(args, "adjoint.csv"), z.trajectory.grid, cert.path);
  return {{"certificate", to_json(cert)},
          {"energy_active", ctx.energy_active(ConditionOptions{}.energy_tolerance)},
          {"report", to_json(report)},
          {"verdict", report.verdict}};
}

json cmd_classify(const Scenario& sc, const RunArgs& args) {
  const ExtendedProcess z = simulate_extended(sc.system, need_reference(sc), sc.initial_state, sc.integration());
  const Families fam = families(sc, args);
  AbnormalSearchOptions opts;
  opts.seed = args.seed;
  opts.jobs = args.jobs;
  const Classification c = classify_normality(sc.system, z, sc.target, sc.cost, sc.energy_bound, fam.b0, fam.b1, opts);
  json result = {{"verdict", to_string(c.verdict)}, {"nullspace_dimension", c.nullspace_dimension}};
  result["certificate"] = c.certificate ? to_json(*c.certificate) : json(nullptr);
  result["report"] = c.report ? to_json(*c.report) : json(nullptr);
  if (c.certificate && !args.traj_dir.empty())
    write_adjoint_csv(csv_path(args, "adjoint.csv"), z.trajectory.grid, c.certificate->path);
  return result;
}

json cmd_probe(const Scenario& sc, const RunArgs& args) {
  const ExtendedProcess z = simulate_extended(sc.system, need_reference(sc), sc.initial_state, sc.integration());
  GapOptions opts;
  opts.radii = args.radii;
  opts.eta = args.eta;
  opts.budget = args.budget;
  opts.seed = args.seed;
  opts.sampling.jobs = args.jobs;
  const GapReport r = probe_gap(sc.system, z, sc.target, sc.cost, sc.energy_bound, opts);
  if (!args.traj_dir.empty()) write_gap_csv(csv_path(args, "gap.csv"), r);
  return to_json(r);
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> list{"simulate", "embed",    "canonicalize", "distance",
                                             "brackets", "check-extremal", "classify", "probe-gap"};
  return list;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json run(const std::string& command, const RunArgs& args) {
  const std::string bytes = read_file(args.scenario);
  Scenario sc = load_scenario(args.scenario);
  if (args.h > 0.0) sc.step = args.h;
  for (const auto& w : sc.warnings) spdlog::warn("{}", w);
  spdlog::info("running {} on {}", command, args.scenario);

  json result;
  if (command == "simulate") result = cmd_simulate(sc, args);
  else if (command == "embed") result = cmd_embed(sc, args);
  else if (command == "canonicalize") result = cmd_canonicalize(sc, args);
  else if (command == "distance") result = cmd_distance(sc, args);
  else if (command == "brackets") result = cmd_brackets(sc, args);
  else if (command == "check-extremal") result = cmd_check(sc, args);
  else if (command == "classify") result = cmd_classify(sc, args);
  else if (command == "probe-gap") result = cmd_probe(sc, args);
  else throw ValidationError("unknown command '" + command + "'");

  json report;
  report["header"] = {{"timestamp", utc_timestamp()}};
  report["tool_version"] = kToolVersion;
  report["command"] = command;
  report["scenario_hash"] = fnv1a_hex(bytes);
  report["seed"] = args.seed;
  report["warnings"] = sc.warnings;
  report["result"] = result;

  if (!args.out.empty()) {
    std::ofstream out(args.out);
    if (!out) throw ValidationError("cannot write report to " + args.out);
    out << report.dump(2) << '\n';
  }
  return report;
}

std::string stable_text(const json& report) {
  json copy = report;
  copy.erase("header");
  return copy.dump(2);
}

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("impulse-gap");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("IMPULSE_GAP_LOG");
  spdlog::level::level_enum level = spdlog::level::warn;
  if (env) {
    const std::string v = env;
    if (v == "error") level = spdlog::level::err;
    else if (v == "warn") level = spdlog::level::warn;
    else if (v == "info") level = spdlog::level::info;
    else if (v == "debug") level = spdlog::level::debug;
  }
  spdlog::set_level(level);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Impulsive extension toolkit: simulation, extremality checks, gap probing", "impulse-gap"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);
  RunArgs args;
  for (const auto& name : commands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->set_help_flag("--help", "print help");
    sub->add_option("--scenario", args.scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", args.out, "report JSON path");
    sub->add_option("--traj-dir", args.traj_dir, "directory for CSV output");
    sub->add_option("--seed", args.seed, "random seed");
    sub->add_option("--h", args.h, "integration step")->check(CLI::PositiveNumber);
    sub->add_option("--max-degree", args.max_degree, "bracket degree bound")->check(CLI::PositiveNumber);
    sub->add_option("--radii", args.radii, "ball radii")->delimiter(',');
    sub->add_option("--eta", args.eta, "feasibility tolerances")->delimiter(',');
    sub->add_option("--budget", args.budget, "samples per radius");
    sub->add_option("--jobs", args.jobs, "worker threads")->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const json report = run(command, args);
    if (args.out.empty()) std::cout << report.dump(2) << '\n';
    return 0;
  } catch (const Error& e) {
    spdlog::error("{}: {}", e.name(), e.what());
    return e.kind() == ErrorKind::Numerical ? 3 : 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}

}  // namespace impulse::cli
