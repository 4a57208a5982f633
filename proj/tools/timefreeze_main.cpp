#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "timefreeze/io.hpp"
#include "timefreeze/scenario.hpp"

namespace {

struct SubArgs {
  std::string config;
  std::string out_dir;
  bool verbose = false;
};

void add_run_subcommand(CLI::App& app, const std::string& name, const std::string& help, SubArgs& args,
                        timefreeze::ScenarioKind kind, int& exit_code, bool& ran) {
  CLI::App* sub = app.add_subcommand(name, help);
  sub->add_option("config", args.config, "config file path or builtin scenario name")->required();
  sub->add_option("--out", args.out_dir, "output directory override");
  sub->add_flag("--verbose", args.verbose, "write an NLP iteration log and extra diagnostics");
  sub->callback([&args, kind, &exit_code, &ran, name] {
    ran = true;
    timefreeze::ScenarioConfig cfg;
    try {
      cfg = timefreeze::resolve_scenario(args.config);
    } catch (const std::exception& e) {
      std::cerr << "configuration error: " << e.what() << "\n";
      exit_code = 2;
      return;
    }
    if (cfg.kind != kind) {
      std::cerr << "configuration error: config key 'kind': config " << args.config << " is not a \"" << name
                << "\" scenario\n";
      exit_code = 2;
      return;
    }
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    cfg.verbose = args.verbose;
    exit_code = timefreeze::run_scenario(cfg);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"timefreeze: simulation and time-optimal control of dynamics with state jumps\n"
               "via the time-freezing reformulation"};
  app.require_subcommand(1);

  SubArgs sim_args, aux_args, conv_args, ocp_args;
  int exit_code = 0;
  bool ran = false;
  add_run_subcommand(app, "simulate", "integrate a time-frozen system and recover the physical solution", sim_args,
                     timefreeze::ScenarioKind::Simulate, exit_code, ran);
  add_run_subcommand(app, "aux-check", "verify that an auxiliary system realizes the restitution law", aux_args,
                     timefreeze::ScenarioKind::AuxCheck, exit_code, ran);
  add_run_subcommand(app, "converge", "terminal-error convergence study over the evaluation budget", conv_args,
                     timefreeze::ScenarioKind::Converge, exit_code, ran);
  add_run_subcommand(app, "ocp", "transcribe and solve a time-optimal control problem by penalty homotopy",
                     ocp_args, timefreeze::ScenarioKind::Ocp, exit_code, ran);

  std::string write_dir;
  CLI::App* scen = app.add_subcommand("scenarios", "list the shipped scenario configs");
  scen->add_option("--write", write_dir, "write the shipped configs into a directory");
  scen->callback([&write_dir, &ran] {
    ran = true;
    for (const auto& builtin : timefreeze::builtin_scenarios()) {
      std::cout << builtin.name << "  -  " << builtin.description << "\n";
      if (!write_dir.empty()) {
        std::filesystem::create_directories(write_dir);
        timefreeze::write_text_file(write_dir + "/" + builtin.name + ".toml", builtin.config_text);
      }
    }
    if (!write_dir.empty()) std::cout << "configs written to " << write_dir << "\n";
  });

  CLI11_PARSE(app, argc, argv);
  return ran ? exit_code : 2;
}
