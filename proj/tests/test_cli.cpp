#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "timefreeze/io.hpp"

namespace {

namespace fs = std::filesystem;

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TIMEFREEZE_BIN) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path temp_dir(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / "timefreeze_cli_test" / leaf;
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("shipped simulate scenario completes with exit 0 and artifacts") {
  const fs::path out = temp_dir("sim");
  REQUIRE(run_cli("simulate bouncing-ball-sim --out " + out.string()) == 0);
  CHECK(fs::exists(out / "trajectory.csv"));
  CHECK(fs::exists(out / "physical.csv"));
  CHECK(fs::exists(out / "summary.json"));
  // Two jumps in the summary, per the reference drop.
  std::ifstream in(out / "summary.json");
  std::string summary((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(summary.find("\"n_jumps\":2") != std::string::npos);
}

TEST_CASE("shipped aux-check and converge scenarios complete with exit 0") {
  const fs::path out_aux = temp_dir("aux");
  CHECK(run_cli("aux-check aux-check --out " + out_aux.string()) == 0);
  CHECK(fs::exists(out_aux / "summary.json"));

  const fs::path out_conv = temp_dir("conv");
  CHECK(run_cli("converge bouncing-ball-converge --out " + out_conv.string()) == 0);
  CHECK(fs::exists(out_conv / "convergence.csv"));
}

TEST_CASE("particle simulation scenario reports the wall impacts") {
  const fs::path out = temp_dir("psim");
  REQUIRE(run_cli("simulate particle-3d-sim --out " + out.string()) == 0);
  std::ifstream in(out / "summary.json");
  std::string summary((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(summary.find("\"n_jumps\":4") != std::string::npos);
}

TEST_CASE("gamma = 0 is rejected with exit 2") {
  const fs::path dir = temp_dir("badcfg");
  const fs::path cfg = dir / "bad.toml";
  timefreeze::write_text_file(cfg.string(),
                              "kind = \"simulate\"\n[system]\nbuiltin = \"bouncing-ball\"\ngamma = 0.0\nk = 5.0\n"
                              "[run]\nh = 0.01\n");
  CHECK(run_cli("simulate " + cfg.string()) == 2);
}

TEST_CASE("missing config and kind mismatch exit 2") {
  CHECK(run_cli("simulate /nonexistent/nowhere.toml") == 2);
  CHECK(run_cli("ocp bouncing-ball-sim") == 2);
}

TEST_CASE("numerical failures exit 3") {
  // The implicit step equation Y = 3 + Y^2 has no real solution, so Newton
  // cannot converge and the run must fail numerically.
  const fs::path dir = temp_dir("numfail");
  const fs::path cfg = dir / "hard.toml";
  timefreeze::write_text_file(cfg.string(),
                              "kind = \"simulate\"\n[system]\ndimension = 1\nfields = [\"x0*x0\"]\n"
                              "[run]\ny0 = [3.0, 0.0]\nt_f = 2.0\nh = 1.0\nscheme = \"implicit-euler\"\n");
  const int code = run_cli("simulate " + cfg.string() + " --out " + (dir / "out").string());
  CHECK(code == 3);
}

TEST_CASE("scenarios subcommand lists the shipped configs") {
  CHECK(run_cli("scenarios") == 0);
}

TEST_CASE("shipped ocp scenario completes with exit 0") {
  const fs::path out = temp_dir("ocp");
  REQUIRE(run_cli("ocp particle-3d-ocp --out " + out.string()) == 0);
  CHECK(fs::exists(out / "ocp_solution.csv"));
  CHECK(fs::exists(out / "summary.json"));
  std::ifstream in(out / "summary.json");
  std::string summary((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(summary.find("\"stages\":[") != std::string::npos);
}

TEST_SUITE_END();
