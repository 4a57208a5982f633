#include "timefreeze/scenario.hpp"
#include <fstream>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "timefreeze/expr.hpp"
#include "timefreeze/io.hpp"
#include "timefreeze/systems.hpp"

namespace timefreeze {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

StepMode step_mode_from(const std::string& name, const ConfigView& where) {
  if (name == "sign") return StepMode::Sign;
  if (name == "midpoint") return StepMode::SetValuedMidpoint;
  if (name == "smoothed") return StepMode::Smoothed;
  if (name == "lp-kkt") return StepMode::LpKkt;
  throw ConfigError("config key '" + where.path() + ".step_mode': unknown step mode \"" + name +
                    "\" (expected sign | midpoint | smoothed | lp-kkt)");
}

Scheme scheme_from(const std::string& name, const std::string& key) {
  const auto s = scheme_from_name(name);
  if (!s)
    throw ConfigError("config key '" + key + "': unknown scheme \"" + name +
                      "\" (expected explicit-euler | rk4 | implicit-euler)");
  return *s;
}

void parse_system_block(const ConfigView& system, ScenarioConfig& cfg) {
  system.allow_only({"builtin", "dimension", "controls", "fields", "constraints", "gamma", "k", "mass", "gravity",
                     "step_mode", "smoothing_eps"});
  cfg.builtin = system.str_or("builtin", "");
  cfg.gamma = system.number_or("gamma", 0.9);
  cfg.mass = system.number_or("mass", 1.0);
  cfg.gravity = system.number_or("gravity", 9.81);
  cfg.step_mode = step_mode_from(system.str_or("step_mode", "sign"), system);
  cfg.smoothing_eps = system.number_or("smoothing_eps", 1e-3);
  if (system.has("k")) {
    const ConfigNode* k = system.node().find("k");
    cfg.stiffness = k->is_array() ? system.numbers("k") : Vec{system.number("k")};
  }

  if (!cfg.builtin.empty()) {
    if (cfg.builtin != "bouncing-ball" && cfg.builtin != "particle-3d")
      throw ConfigError("config key '" + system.path() + ".builtin': unknown builtin system \"" + cfg.builtin +
                        "\"");
    for (const char* key : {"dimension", "controls", "fields", "constraints"})
      if (system.has(key))
        throw ConfigError("config key '" + system.path() + "." + key + "': conflicts with builtin = \"" +
                          cfg.builtin + "\"");
    cfg.n_x = cfg.builtin == "bouncing-ball" ? 2 : 6;
    cfg.n_u = cfg.builtin == "bouncing-ball" ? 0 : 3;
    return;
  }

  cfg.n_x = static_cast<int>(system.integer("dimension"));
  cfg.n_u = static_cast<int>(system.integer_or("controls", 0));
  cfg.field_exprs = system.strings("fields");
  if (system.has("constraints")) {
    for (const auto& row : system.number_rows("constraints")) {
      if (row.size() != static_cast<size_t>(cfg.n_x) / 2 + 1)
        throw ConfigError("config key '" + system.path() +
                          ".constraints': each row is [normal..., offset] with n_x/2 normal entries");
      Vec normal(row.begin(), row.end() - 1);
      cfg.constraint_rows.emplace_back(std::move(normal), row.back());
    }
  }
}

}  // namespace

TimeFrozenSystem ScenarioConfig::build_system() const {
  Vec ks = stiffness;
  auto spread = [&](size_t n_constraints) {
    if (ks.empty()) throw ConfigError("config key 'system.k': missing required stiffness");
    if (ks.size() == 1) ks.assign(n_constraints, ks[0]);
    if (ks.size() != n_constraints)
      throw ConfigError("config key 'system.k': need one stiffness or one per constraint");
  };

  if (builtin == "bouncing-ball") {
    spread(1);
    return make_bouncing_ball(gamma, ks[0], gravity, step_mode);
  }
  if (builtin == "particle-3d") {
    spread(3);
    return assemble_time_frozen(
        make_state_jump_system(6, 3,
                               FieldFunc::make(6, 3,
                                               [m = mass, g = gravity](auto x, auto u, auto out) {
                                                 out[0] = x[3];
                                                 out[1] = x[4];
                                                 out[2] = x[5];
                                                 out[3] = u[0] / m;
                                                 out[4] = u[1] / m;
                                                 out[5] = u[2] / m - g;
                                               }),
                               {make_constraint({1.0, 0.0, 0.0}, 0.0), make_constraint({0.0, 1.0, 0.0}, 0.0),
                                make_constraint({0.0, 0.0, 1.0}, 0.0)},
                               gamma),
        ks, step_mode);
  }

  FieldFunc f = make_expression_field(field_exprs, n_x, n_u);
  std::vector<AffineConstraint> constraints;
  for (const auto& [normal, offset] : constraint_rows) constraints.push_back(make_constraint(normal, offset));
  auto sys = make_state_jump_system(n_x, n_u, std::move(f), std::move(constraints), gamma);
  if (sys.constraints.empty()) {
    TimeFrozenSystem tf = assemble_time_frozen(std::move(sys), Vec{}, step_mode);
    tf.smoothing_eps = smoothing_eps;
    return tf;
  }
  spread(sys.constraints.size());
  TimeFrozenSystem tf = assemble_time_frozen(std::move(sys), ks, step_mode);
  tf.smoothing_eps = smoothing_eps;
  return tf;
}

double ScenarioConfig::resolved_tau_f(const TimeFrozenSystem& sys) const {
  if (tau_f) return *tau_f;
  double tj = 0.0;
  for (const auto& p : sys.aux_params) tj = std::max(tj, p.tau_jump);
  return required_pseudo_time(t_f, n_jumps, tj);
}

ScenarioConfig load_scenario(const ConfigNode& root) {
  ConfigView top(root, "");
  top.allow_only({"kind", "system", "run", "aux", "converge", "ocp", "output"});
  ScenarioConfig cfg;

  const std::string kind = top.str("kind");
  if (kind == "simulate")
    cfg.kind = ScenarioKind::Simulate;
  else if (kind == "aux-check")
    cfg.kind = ScenarioKind::AuxCheck;
  else if (kind == "converge")
    cfg.kind = ScenarioKind::Converge;
  else if (kind == "ocp")
    cfg.kind = ScenarioKind::Ocp;
  else
    throw ConfigError("config key 'kind': unknown scenario kind \"" + kind +
                      "\" (expected simulate | aux-check | converge | ocp)");

  parse_system_block(top.child("system"), cfg);

  if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0))
    throw ConfigError("config key 'system.gamma': restitution coefficient must lie in (0, 1] "
                      "(gamma = 0 persistent contact is outside this toolkit's scope)");

  if (cfg.kind == ScenarioKind::Simulate || cfg.kind == ScenarioKind::Converge) {
    const ConfigView run = top.child("run");
    run.allow_only({"y0", "tau_f", "t_f", "n_jumps", "h", "scheme"});
    if (run.has("y0")) cfg.y0 = run.numbers("y0");
    if (run.has("tau_f")) cfg.tau_f = run.number("tau_f");
    cfg.t_f = run.number_or("t_f", 1.0);
    cfg.n_jumps = static_cast<int>(run.integer_or("n_jumps", 0));
    cfg.h = run.number_or("h", 1e-3);
    cfg.scheme = scheme_from(run.str_or("scheme", "explicit-euler"), run.path() + ".scheme");
    if (!(cfg.h > 0.0)) throw ConfigError("config key 'run.h': step size must be positive");
  }

  if (cfg.kind == ScenarioKind::Converge) {
    const ConfigView conv = top.child("converge");
    conv.allow_only({"m_values", "schemes"});
    for (double m : conv.numbers("m_values")) cfg.m_values.push_back(static_cast<long>(m));
    for (const auto& s : conv.strings("schemes"))
      cfg.converge_schemes.push_back(scheme_from(s, conv.path() + ".schemes"));
    if (cfg.m_values.empty() || cfg.converge_schemes.empty())
      throw ConfigError("config key 'converge': m_values and schemes must be nonempty");
  }

  if (cfg.kind == ScenarioKind::AuxCheck) {
    const ConfigView aux = top.child("aux");
    aux.allow_only({"constraint", "x0", "fine_dt"});
    cfg.aux_constraint = static_cast<int>(aux.integer_or("constraint", 0));
    cfg.aux_x0 = aux.numbers("x0");
    cfg.fine_dt = aux.number_or("fine_dt", 1e-6);
    if (!(cfg.fine_dt > 0.0)) throw ConfigError("config key 'aux.fine_dt': must be positive");
  }

  if (cfg.kind == ScenarioKind::Ocp) {
    const ConfigView ocp = top.child("ocp");
    ocp.allow_only({"y0", "target", "rho", "u_lower", "u_upper", "w_max", "n_elements", "n_ctrl", "mu0",
                    "mu_factor", "stages", "guess"});
    if (ocp.has("y0")) cfg.y0 = ocp.numbers("y0");
    cfg.q_target = ocp.numbers("target");
    cfg.rho = ocp.number_or("rho", 100.0);
    if (ocp.has("u_lower")) cfg.u_lower = ocp.numbers("u_lower");
    if (ocp.has("u_upper")) cfg.u_upper = ocp.numbers("u_upper");
    cfg.w_max = ocp.number_or("w_max", 20.0);
    cfg.n_elements = static_cast<int>(ocp.integer_or("n_elements", 50));
    cfg.n_ctrl = static_cast<int>(ocp.integer_or("n_ctrl", 0));
    cfg.schedule.mu0 = ocp.number_or("mu0", 1e-3);
    cfg.schedule.factor = ocp.number_or("mu_factor", 10.0);
    cfg.schedule.count = static_cast<int>(ocp.integer_or("stages", 7));
    const std::string guess = ocp.str_or("guess", "rollout");
    if (guess == "rollout")
      cfg.rollout_guess = true;
    else if (guess == "hold")
      cfg.rollout_guess = false;
    else
      throw ConfigError("config key 'ocp.guess': expected rollout | hold");
  }

  if (const auto out = top.maybe_child("output")) {
    out->allow_only({"directory", "csv", "json"});
    cfg.out_dir = out->str_or("directory", "out");
    cfg.write_csv = out->boolean_or("csv", true);
    cfg.write_json = out->boolean_or("json", true);
  }

  // Default initial states for the builtins.
  if (cfg.y0.empty()) {
    if (cfg.builtin == "bouncing-ball") cfg.y0 = {0.5, 0.0, 0.0};
    if (cfg.builtin == "particle-3d") cfg.y0 = {4.0, 4.0, 1.0, -3.0, -3.5, 0.0, 0.0};
  }
  return cfg;
}

ScenarioConfig load_scenario_file(const std::string& path) { return load_scenario(parse_config_file(path)); }

const std::vector<BuiltinScenario>& builtin_scenarios() {
  static const std::vector<BuiltinScenario> scenarios = {
      {"bouncing-ball-sim", "drop from 0.5 m with two impacts, explicit Euler",
       R"(kind = "simulate"

[system]
builtin = "bouncing-ball"
gamma = 0.9
k = 5.0

[run]
y0 = [0.5, 0.0, 0.0]
t_f = 1.0
n_jumps = 2
h = 1e-4
scheme = "explicit-euler"

[output]
directory = "out/bouncing-ball-sim"
)"},
      {"bouncing-ball-converge", "terminal-error study over the evaluation budget",
       R"(kind = "converge"

[system]
builtin = "bouncing-ball"
gamma = 0.9
k = 5.0

[run]
y0 = [0.5, 0.0, 0.0]
t_f = 1.0
n_jumps = 2

[converge]
m_values = [100, 400, 1600, 6400, 25600, 102400]
schemes = ["explicit-euler", "rk4"]

[output]
directory = "out/bouncing-ball-converge"
)"},
      {"particle-3d-sim", "unactuated particle between two walls and a floor",
       R"(kind = "simulate"

[system]
builtin = "particle-3d"
gamma = 0.9
k = 12.0

[run]
y0 = [4.0, 4.0, 1.0, -3.0, -3.5, 0.0, 0.0]
t_f = 1.5
n_jumps = 4
h = 2.5e-4
scheme = "rk4"

[output]
directory = "out/particle-3d-sim"
)"},
      {"particle-3d-ocp", "time-optimal steering to (5, 5, 1) with wall impacts",
       R"(kind = "ocp"

[system]
builtin = "particle-3d"
gamma = 0.9
k = 12.0
step_mode = "lp-kkt"

[ocp]
y0 = [4.0, 4.0, 1.0, -3.0, -3.5, 0.0, 0.0]
target = [5.0, 5.0, 1.0]
rho = 100.0
u_lower = [-9.81, -9.81, -9.81]
u_upper = [9.81, 9.81, 9.81]
w_max = 20.0
n_elements = 50
mu0 = 1e-3
mu_factor = 10.0
stages = 7
guess = "rollout"

[output]
directory = "out/particle-3d-ocp"
)"},
      {"aux-check", "restitution fidelity of the bouncing-ball auxiliary system",
       R"(kind = "aux-check"

[system]
builtin = "bouncing-ball"
gamma = 0.9
k = 5.0

[aux]
constraint = 0
x0 = [0.0, -1.0]
fine_dt = 1e-6

[output]
directory = "out/aux-check"
)"},
  };
  return scenarios;
}

ScenarioConfig resolve_scenario(const std::string& path_or_name) {
  if (std::filesystem::exists(path_or_name)) return load_scenario_file(path_or_name);
  for (const auto& builtin : builtin_scenarios())
    if (builtin.name == path_or_name) return load_scenario(parse_config_text(builtin.config_text));
  throw ConfigError("no such config file or builtin scenario: " + path_or_name);
}

namespace {

int run_simulate(const ScenarioConfig& cfg) {
  const TimeFrozenSystem sys = cfg.build_system();
  if (static_cast<int>(cfg.y0.size()) != sys.n_y())
    throw ConfigError("config key 'run.y0': expected " + std::to_string(sys.n_y()) + " entries");
  const double tau_f = cfg.resolved_tau_f(sys);
  const Trajectory traj = integrate(sys, cfg.y0, tau_f, cfg.h, cfg.scheme);
  const PhysicalTrajectory phys = recover_physical(traj);

  std::filesystem::create_directories(cfg.out_dir);
  if (cfg.write_csv) {
    write_trajectory_csv(cfg.out_dir + "/trajectory.csv", traj, phys);
    write_physical_csv(cfg.out_dir + "/physical.csv", phys);
  }
  std::ostringstream summary;
  const int last = static_cast<int>(phys.t_grid.size()) - 1;
  summary << "{\"kind\":\"simulate\",\"scheme\":\"" << scheme_name(cfg.scheme) << "\",\"h\":" << num(cfg.h)
          << ",\"tau_f\":" << num(tau_f) << ",\"n_jumps\":" << phys.n_jumps << ",\"jump_times\":[";
  for (size_t i = 0; i < phys.jump_times.size(); ++i) summary << (i ? "," : "") << num(phys.jump_times[i]);
  summary << "],\"t_final\":" << num(last >= 0 ? phys.t_grid[last] : 0.0) << ",\"terminal_state\":[";
  for (int i = 0; i < phys.states.cols(); ++i) summary << (i ? "," : "") << num(phys.states(last, i));
  summary << "]}";
  if (cfg.write_json) {
    write_text_file(cfg.out_dir + "/summary.json", summary.str() + "\n");
    write_text_file(cfg.out_dir + "/trajectory.json", trajectory_json(traj, phys) + "\n");
    write_text_file(cfg.out_dir + "/physical.json", physical_json(phys) + "\n");
  }
  std::cout << "simulate: " << phys.n_jumps << " jumps detected, t_final = "
            << (last >= 0 ? phys.t_grid[last] : 0.0) << ", artifacts in " << cfg.out_dir << "\n";
  return 0;
}

int run_aux_check(const ScenarioConfig& cfg) {
  const TimeFrozenSystem sys = cfg.build_system();
  if (cfg.aux_constraint < 0 || cfg.aux_constraint >= sys.n_constraints())
    throw ConfigError("config key 'aux.constraint': index out of range");
  const AuxiliaryField field = sys.auxiliary(cfg.aux_constraint);
  if (static_cast<int>(cfg.aux_x0.size()) != sys.n_x())
    throw ConfigError("config key 'aux.x0': expected " + std::to_string(sys.n_x()) + " entries");
  const Assumption1Report report = verify_assumption1(field, cfg.aux_x0, cfg.fine_dt);
  const double tau_formula = field.params.tau_jump;

  std::filesystem::create_directories(cfg.out_dir);
  std::ostringstream summary;
  summary << "{\"kind\":\"aux-check\",\"constraint\":" << cfg.aux_constraint << ",\"k\":" << num(field.params.k)
          << ",\"c\":" << num(field.params.c) << ",\"gamma\":" << num(field.params.gamma)
          << ",\"tau_jump_formula\":" << num(tau_formula) << ",\"tau_return\":" << num(report.tau_return)
          << ",\"restitution_ratio\":" << num(report.restitution_ratio)
          << ",\"stayed_in_vminus\":" << (report.stayed_in_vminus ? "true" : "false") << ",\"x_return\":[";
  for (size_t i = 0; i < report.x_return.size(); ++i) summary << (i ? "," : "") << num(report.x_return[i]);
  summary << "]}";
  if (cfg.write_json) write_text_file(cfg.out_dir + "/summary.json", summary.str() + "\n");
  std::cout << "aux-check: tau_return = " << report.tau_return << " (formula " << tau_formula
            << "), restitution ratio = " << report.restitution_ratio << "\n";
  return 0;
}

int run_converge(const ScenarioConfig& cfg) {
  const TimeFrozenSystem sys = cfg.build_system();
  if (static_cast<int>(cfg.y0.size()) != sys.n_y())
    throw ConfigError("config key 'run.y0': expected " + std::to_string(sys.n_y()) + " entries");
  if (cfg.builtin != "bouncing-ball")
    throw ConfigError("config key 'converge': the terminal-error oracle is available for the bouncing-ball "
                      "builtin only");
  const double tau_f = cfg.resolved_tau_f(sys);
  const double g = cfg.gravity;
  const Vec y0 = cfg.y0;
  const double gamma = cfg.gamma;
  Oracle oracle = [y0, gamma, g](double t) {
    const auto [q, v] = analytic_bouncing_ball(y0[0], y0[1], gamma, g, t);
    return Vec{q, v};
  };
  const ConvergenceStudy study =
      convergence_study(sys, cfg.y0, oracle, cfg.t_f, tau_f, cfg.converge_schemes, cfg.m_values);

  std::filesystem::create_directories(cfg.out_dir);
  if (cfg.write_csv) write_convergence_csv(cfg.out_dir + "/convergence.csv", study);
  std::ostringstream summary;
  summary << "{\"kind\":\"converge\",\"tau_f\":" << num(tau_f) << ",\"orders\":{";
  for (size_t i = 0; i < study.fitted_orders.size(); ++i)
    summary << (i ? "," : "") << "\"" << scheme_name(study.fitted_orders[i].first)
            << "\":" << num(study.fitted_orders[i].second);
  summary << "}}";
  if (cfg.write_json) write_text_file(cfg.out_dir + "/summary.json", summary.str() + "\n");
  std::cout << "converge: fitted orders";
  for (const auto& [scheme, order] : study.fitted_orders) std::cout << " " << scheme_name(scheme) << "=" << order;
  std::cout << ", table in " << cfg.out_dir << "/convergence.csv\n";
  return 0;
}

int run_ocp(const ScenarioConfig& cfg) {
  TimeFrozenSystem sys = cfg.build_system();
  if (sys.step_mode != StepMode::LpKkt) sys.step_mode = StepMode::LpKkt;  // transcription uses the LP algebra

  OcpDefinition def;
  def.y0 = cfg.y0;
  def.q_target = cfg.q_target;
  def.rho = cfg.rho;
  def.u_lower = cfg.u_lower;
  def.u_upper = cfg.u_upper;
  def.w_max = cfg.w_max;
  def.n_elements = cfg.n_elements;
  def.n_ctrl = cfg.n_ctrl;
  def.sys = std::move(sys);
  if (static_cast<int>(def.y0.size()) != def.sys.n_y())
    throw ConfigError("config key 'ocp.y0': expected " + std::to_string(def.sys.n_y()) + " entries");
  if (def.sys.n_u() > 0 && (def.u_lower.empty() || def.u_upper.empty()))
    throw ConfigError("config key 'ocp.u_lower/u_upper': control bounds are required for controlled systems");

  const TranscribedNlp nlp = transcribe(def);
  Vec guess = initial_guess(nlp);
  if (cfg.rollout_guess) {
    // Keep the w guess, but seed the states from the unactuated rollout so
    // the first relaxed NLP starts from a dynamically consistent trajectory.
    const double w_guess = guess[nlp.layout.w_index()];
    const Trajectory roll =
        integrate(def.sys, def.y0, w_guess, w_guess / def.n_elements, Scheme::ImplicitEuler);
    const NlpLayout& L = nlp.layout;
    const int n_pos = def.sys.n_x() / 2;
    for (int n = 0; n < L.n_nodes; ++n) {
      for (int i = 0; i < L.n_y; ++i) guess[L.y_start(n) + i] = roll.states(n, i);
      for (int c = 0; c < L.n_c; ++c) {
        const double psi =
            def.sys.base.constraints[c].psi(std::span<const double>(roll.states.row(n)).first(n_pos));
        const StepValue s = step(psi, StepMode::LpKkt);
        guess[L.alpha_index(n, c)] = s.value;
        guess[L.lambda0_index(n, c)] = s.multipliers->first;
        guess[L.lambda1_index(n, c)] = s.multipliers->second;
      }
    }
  }

  SolveOptions opts;
  opts.max_iter = 6000;
  std::ofstream log_stream;
  if (cfg.verbose) {
    std::filesystem::create_directories(cfg.out_dir);
    log_stream.open(cfg.out_dir + "/nlp_iterations.jsonl");
    opts.log = &log_stream;
  }
  const HomotopyResult res = solve_homotopy(nlp, cfg.schedule, std::move(guess), opts);
  const OcpSolution sol = extract_solution(nlp, res.x);

  std::filesystem::create_directories(cfg.out_dir);
  if (cfg.write_csv) {
    write_ocp_solution_csv(cfg.out_dir + "/ocp_solution.csv", nlp, res.x);
    write_physical_csv(cfg.out_dir + "/physical.csv", sol.trajectory);
    write_trajectory_csv(cfg.out_dir + "/trajectory.csv", sol.pseudo, sol.trajectory);
  }
  std::ostringstream summary;
  summary << "{\"kind\":\"ocp\",\"layout\":" << nlp.describe() << ",\"t_final\":" << num(sol.t_final)
          << ",\"w\":" << num(sol.w) << ",\"objective\":" << num(sol.objective)
          << ",\"comp_residual\":" << num(res.comp_residual) << ",\"n_jumps\":" << sol.trajectory.n_jumps
          << ",\"kkt\":{\"stationarity\":" << num(res.kkt.stationarity)
          << ",\"feasibility\":" << num(res.kkt.feasibility)
          << ",\"complementarity\":" << num(res.kkt.complementarity) << "},\"terminal_position\":[";
  const int last = nlp.layout.n_nodes - 1;
  for (size_t i = 0; i < def.q_target.size(); ++i)
    summary << (i ? "," : "") << num(res.x[nlp.layout.y_start(last) + static_cast<int>(i)]);
  summary << "],\"stages\":[";
  for (size_t i = 0; i < res.stages.size(); ++i) {
    const auto& s = res.stages[i];
    summary << (i ? "," : "") << "{\"mu\":" << num(s.mu) << ",\"objective\":" << num(s.objective)
            << ",\"comp_residual\":" << num(s.comp_residual) << ",\"iterations\":" << s.iterations
            << ",\"converged\":" << (s.converged ? "true" : "false") << "}";
  }
  summary << "]}";
  if (cfg.write_json) write_text_file(cfg.out_dir + "/summary.json", summary.str() + "\n");
  std::cout << "ocp: t(1) = " << sol.t_final << ", w = " << sol.w << ", " << res.stages.size()
            << " homotopy stages, complementarity residual = " << res.comp_residual << ", artifacts in "
            << cfg.out_dir << "\n";
  return 0;
}

}  // namespace

int run_scenario(const ScenarioConfig& cfg) {
  try {
    switch (cfg.kind) {
      case ScenarioKind::Simulate: return run_simulate(cfg);
      case ScenarioKind::AuxCheck: return run_aux_check(cfg);
      case ScenarioKind::Converge: return run_converge(cfg);
      case ScenarioKind::Ocp: return run_ocp(cfg);
    }
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}

int run_scenario(const std::string& path_or_name, const std::string& out_dir_override, bool verbose) {
  ScenarioConfig cfg;
  try {
    cfg = resolve_scenario(path_or_name);
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  }
  if (!out_dir_override.empty()) cfg.out_dir = out_dir_override;
  cfg.verbose = verbose;
  return run_scenario(cfg);
}

}  // namespace timefreeze
