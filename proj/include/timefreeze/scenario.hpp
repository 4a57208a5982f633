#pragma once

#include <optional>
#include <string>
#include <vector>

#include "timefreeze/config.hpp"
#include "timefreeze/dynamics.hpp"
#include "timefreeze/ocp.hpp"
#include "timefreeze/simulate.hpp"

namespace timefreeze {

enum class ScenarioKind { Simulate, AuxCheck, Converge, Ocp };

/// Validated scenario description: one kind, a system (named builtin or
/// custom field expressions), the run/ocp parameters and the output sinks.
struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::Simulate;

  // system
  std::string builtin;  // "bouncing-ball", "particle-3d" or empty for custom
  int n_x = 0;
  int n_u = 0;
  std::vector<std::string> field_exprs;
  std::vector<std::pair<Vec, double>> constraint_rows;  // normal, offset
  double gamma = 0.9;
  Vec stiffness;  // one entry, or one per constraint
  double mass = 1.0;
  double gravity = 9.81;
  StepMode step_mode = StepMode::Sign;
  double smoothing_eps = 1e-3;

  // run (simulate / converge)
  Vec y0;
  std::optional<double> tau_f;
  double t_f = 1.0;
  int n_jumps = 0;
  double h = 1e-3;
  Scheme scheme = Scheme::ExplicitEuler;

  // aux-check
  int aux_constraint = 0;
  Vec aux_x0;
  double fine_dt = 1e-6;

  // converge
  std::vector<long> m_values;
  std::vector<Scheme> converge_schemes;

  // ocp
  Vec q_target;
  double rho = 100.0;
  Vec u_lower, u_upper;
  double w_max = 20.0;
  int n_elements = 50;
  int n_ctrl = 0;
  HomotopySchedule schedule;
  bool rollout_guess = true;  // seed states by rolling out the dynamics at the w guess

  // output
  std::string out_dir = "out";
  bool write_csv = true;
  bool write_json = true;
  bool verbose = false;

  TimeFrozenSystem build_system() const;
  double resolved_tau_f(const TimeFrozenSystem& sys) const;
};

/// Parses and validates a scenario; throws ConfigError naming the offending
/// key on schema violations.
ScenarioConfig load_scenario(const ConfigNode& root);
ScenarioConfig load_scenario_file(const std::string& path);

struct BuiltinScenario {
  std::string name;
  std::string description;
  std::string config_text;
};

/// Shipped reproductions: bouncing-ball-sim, bouncing-ball-converge,
/// particle-3d-sim, particle-3d-ocp, aux-check.
const std::vector<BuiltinScenario>& builtin_scenarios();

/// Resolves a CLI argument: an existing config file path or a builtin name.
ScenarioConfig resolve_scenario(const std::string& path_or_name);

/// Executes one scenario, writes the artifact files into cfg.out_dir and
/// prints a one-line summary. Returns 0 on success, 2 on validation errors,
/// 3 on numerical failures.
int run_scenario(const ScenarioConfig& cfg);

/// Convenience wrapper: resolve + optional output-directory override.
int run_scenario(const std::string& path_or_name, const std::string& out_dir_override, bool verbose);

}  // namespace timefreeze
