#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <filesystem>

#include "timefreeze/config.hpp"
#include "timefreeze/expr.hpp"
#include "timefreeze/io.hpp"
#include "timefreeze/scenario.hpp"
#include "timefreeze/systems.hpp"

using namespace timefreeze;

TEST_SUITE_BEGIN("config");

TEST_CASE("key-value tree parsing") {
  const ConfigNode root = parse_config_text(R"(
# comment
kind = "simulate"
[system]
builtin = "bouncing-ball"   # trailing comment
gamma = 0.9
k = [5.0, 7.5]
flag = true
[run]
y0 = [0.5, 0, 0]
nested.h = 1e-4
)");
  ConfigView top(root, "");
  CHECK(top.str("kind") == "simulate");
  const ConfigView system = top.child("system");
  CHECK(system.str("builtin") == "bouncing-ball");
  CHECK(system.number("gamma") == 0.9);
  CHECK(system.numbers("k") == Vec{5.0, 7.5});
  CHECK(system.boolean_or("flag", false));
  CHECK(top.child("run").child("nested").number("h") == 1e-4);
}

TEST_CASE("JSON is accepted as an alternative encoding") {
  const ConfigNode root = parse_config_text(R"({
    "kind": "simulate",
    "system": {"builtin": "bouncing-ball", "gamma": 0.9, "k": 5.0},
    "run": {"y0": [0.5, 0, 0], "t_f": 1.0, "n_jumps": 2, "h": 0.001}
  })");
  const ScenarioConfig cfg = load_scenario(root);
  CHECK(cfg.kind == ScenarioKind::Simulate);
  CHECK(cfg.builtin == "bouncing-ball");
  CHECK(cfg.h == 0.001);
}

TEST_CASE("validation errors name the offending key") {
  auto text_with = [](const std::string& body) {
    return parse_config_text("kind = \"simulate\"\n" + body);
  };
  SUBCASE("gamma outside (0, 1]") {
    const ConfigNode root = text_with("[system]\nbuiltin = \"bouncing-ball\"\ngamma = 0.0\nk = 5.0\n[run]\nh = 0.01");
    try {
      load_scenario(root);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("system.gamma") != std::string::npos);
      CHECK(std::string(e.what()).find("(0, 1]") != std::string::npos);
    }
  }
  SUBCASE("unknown keys are rejected") {
    const ConfigNode root =
        text_with("[system]\nbuiltin = \"bouncing-ball\"\nk = 5.0\nbogus = 1\n[run]\nh = 0.01");
    CHECK_THROWS_WITH_AS(load_scenario(root), doctest::Contains("bogus"), ConfigError);
  }
  SUBCASE("builtin rejects structural overrides") {
    const ConfigNode root =
        text_with("[system]\nbuiltin = \"bouncing-ball\"\nk = 5.0\ndimension = 4\n[run]\nh = 0.01");
    CHECK_THROWS_WITH_AS(load_scenario(root), doctest::Contains("dimension"), ConfigError);
  }
  SUBCASE("unknown scenario kind") {
    const ConfigNode root = parse_config_text("kind = \"dance\"\n[system]\nbuiltin = \"bouncing-ball\"\nk = 5");
    CHECK_THROWS_WITH_AS(load_scenario(root), doctest::Contains("kind"), ConfigError);
  }
}

TEST_CASE("custom systems from field expressions") {
  const ConfigNode root = parse_config_text(R"(
kind = "simulate"
[system]
dimension = 2
fields = ["v0", "-9.81"]
constraints = [[1.0, 0.0]]
gamma = 0.9
k = 5.0
[run]
y0 = [0.5, 0.0, 0.0]
t_f = 0.2
h = 1e-3
)");
  const ScenarioConfig cfg = load_scenario(root);
  const TimeFrozenSystem sys = cfg.build_system();
  CHECK(sys.n_y() == 3);
  // Same free-flight field as the builtin ball.
  const Vec ydot = eval_rhs(sys, Vec{0.5, -1.0, 0.0}, {});
  CHECK(ydot[0] == -1.0);
  CHECK(ydot[1] == doctest::Approx(-9.81));
  CHECK(ydot[2] == 1.0);
}

TEST_CASE("expression parser") {
  SUBCASE("arithmetic and functions") {
    auto e = parse_expression("2 * sin(pi / 2) + x0^2 - u0 / 4", 2, 1);
    const Vec x = {3.0, 0.0}, u = {8.0};
    CHECK(e.eval<double>(x, u) == doctest::Approx(2.0 + 9.0 - 2.0));
  }
  SUBCASE("q and v aliases address the position and velocity halves") {
    auto e = parse_expression("q0 * v0", 2, 0);
    const Vec x = {3.0, -2.0};
    CHECK(e.eval<double>(x, {}) == -6.0);
  }
  SUBCASE("derivatives flow through parsed expressions") {
    auto e = parse_expression("x0 * x0 * x1", 2, 0);
    std::vector<ad::Dual> x = {ad::Dual::seed(2.0, 2, 0), ad::Dual::seed(3.0, 2, 1)};
    const ad::Dual out = e.eval<ad::Dual>(x, {});
    CHECK(out.v == 12.0);
    CHECK(out.d[0] == 12.0);
    CHECK(out.d[1] == 4.0);
  }
  SUBCASE("errors carry positions and names") {
    CHECK_THROWS_WITH_AS(parse_expression("x0 +", 2, 0), doctest::Contains("position"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_expression("x7", 2, 0), doctest::Contains("x7"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_expression("u0", 2, 0), doctest::Contains("u0"), std::invalid_argument);
    CHECK_THROWS_AS(parse_expression("x0 ^ x1", 2, 0), std::invalid_argument);
  }
}

TEST_CASE("per-constraint stiffness reaches the auxiliary parameters") {
  const ConfigNode root = parse_config_text(R"(
kind = "simulate"
[system]
builtin = "particle-3d"
gamma = 0.9
k = [10.0, 12.0, 14.0]
[run]
h = 1e-3
)");
  const ScenarioConfig cfg = load_scenario(root);
  const TimeFrozenSystem sys = cfg.build_system();
  REQUIRE(sys.aux_params.size() == 3);
  CHECK(sys.aux_params[0].k == 10.0);
  CHECK(sys.aux_params[1].k == 12.0);
  CHECK(sys.aux_params[2].k == 14.0);
  CHECK(sys.aux_params[0].tau_jump > sys.aux_params[2].tau_jump);
}

TEST_CASE("shipped scenarios validate") {
  for (const auto& builtin : builtin_scenarios()) {
    CAPTURE(builtin.name);
    CHECK_NOTHROW(load_scenario(parse_config_text(builtin.config_text)));
  }
  CHECK(builtin_scenarios().size() == 5);
  const char* expected[] = {"bouncing-ball-sim", "bouncing-ball-converge", "particle-3d-sim", "particle-3d-ocp",
                            "aux-check"};
  for (const char* name : expected) {
    bool found = false;
    for (const auto& builtin : builtin_scenarios()) found = found || builtin.name == name;
    CHECK_MESSAGE(found, name);
  }
}

TEST_CASE("shipped scenario files match the embedded configs") {
  const std::filesystem::path dir = std::filesystem::path(TIMEFREEZE_SCENARIO_DIR);
  for (const auto& builtin : builtin_scenarios()) {
    const auto path = dir / (builtin.name + ".toml");
    CAPTURE(builtin.name);
    REQUIRE(std::filesystem::exists(path));
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(content == builtin.config_text);
  }
}

TEST_CASE("trajectory CSV round-trips at emitted precision") {
  auto ball = make_bouncing_ball(0.9, 5.0);
  const Trajectory traj = integrate(ball, {0.5, 0.0, 0.0}, 1.2, 1e-2, Scheme::Rk4);
  const PhysicalTrajectory phys = recover_physical(traj);
  const std::string dir = (std::filesystem::temp_directory_path() / "timefreeze_io_test").string();
  std::filesystem::create_directories(dir);

  write_trajectory_csv(dir + "/trajectory.csv", traj, phys);
  const ParsedTrajectoryCsv parsed = read_trajectory_csv(dir + "/trajectory.csv");
  REQUIRE(parsed.trajectory.n_samples() == traj.n_samples());
  for (int r = 0; r < traj.n_samples(); ++r) {
    CHECK(parsed.trajectory.tau_grid[r] == traj.tau_grid[r]);
    for (int c = 0; c < traj.n_y(); ++c) CHECK(parsed.trajectory.states(r, c) == traj.states(r, c));
    CHECK(parsed.frozen_mask[r] == phys.frozen_mask[r]);
  }

  write_physical_csv(dir + "/physical.csv", phys);
  const PhysicalTrajectory parsed_phys = read_physical_csv(dir + "/physical.csv");
  REQUIRE(parsed_phys.t_grid.size() == phys.t_grid.size());
  for (size_t r = 0; r < phys.t_grid.size(); ++r) {
    CHECK(parsed_phys.t_grid[r] == phys.t_grid[r]);
    for (int c = 0; c < phys.states.cols(); ++c)
      CHECK(parsed_phys.states(static_cast<int>(r), c) == phys.states(static_cast<int>(r), c));
  }
}

TEST_SUITE_END();
