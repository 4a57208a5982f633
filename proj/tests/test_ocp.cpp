#include <doctest.h>

#include <cmath>
#include <random>

#include "timefreeze/ocp.hpp"
#include "timefreeze/systems.hpp"

using namespace timefreeze;

namespace {

OcpDefinition particle_ocp(int n_elements) {
  OcpDefinition ocp;
  ocp.sys = make_particle_3d(0.9, 10.0, 1.0, 9.81, StepMode::LpKkt);
  ocp.y0 = {4.0, 4.0, 1.0, -3.0, -3.5, 0.0, 0.0};
  ocp.q_target = {5.0, 5.0, 1.0};
  ocp.rho = 100.0;
  const double mg = 9.81;
  ocp.u_lower = {-mg, -mg, -mg};
  ocp.u_upper = {mg, mg, mg};
  ocp.w_max = 20.0;
  ocp.n_elements = n_elements;
  return ocp;
}

// Unactuated drop of the ball steered only through the time-scaling w.
OcpDefinition ball_drop_ocp(Vec y0, double q_target, int n_elements) {
  OcpDefinition ocp;
  ocp.sys = make_bouncing_ball(0.9, 5.0, 9.81, StepMode::LpKkt);
  ocp.y0 = std::move(y0);
  ocp.q_target = {q_target};
  ocp.rho = 100.0;
  ocp.w_max = 20.0;
  ocp.n_elements = n_elements;
  return ocp;
}

OcpDefinition smooth_ocp(int n_elements) {
  // Double integrator with no unilateral constraints: reach position 1.
  FieldFunc f = FieldFunc::make(2, 1, [](auto x, auto u, auto out) {
    out[0] = x[1];
    out[1] = u[0];
  });
  OcpDefinition ocp;
  ocp.sys = assemble_time_frozen(make_state_jump_system(2, 1, std::move(f), {}, 1.0), Vec{});
  ocp.y0 = {0.0, 0.0, 0.0};
  ocp.q_target = {1.0};
  ocp.rho = 100.0;
  ocp.u_lower = {-2.0};
  ocp.u_upper = {2.0};
  ocp.w_max = 20.0;
  ocp.n_elements = n_elements;
  return ocp;
}

}  // namespace

TEST_SUITE_BEGIN("ocp");

TEST_CASE("transcription layout and counts") {
  SUBCASE("3-D particle at N = 50") {
    const TranscribedNlp nlp = transcribe(particle_ocp(50));
    CHECK(nlp.layout.num_vars() == 51 * 7 + 51 * 9 + 50 * 3 + 1);
    CHECK(nlp.h == doctest::Approx(0.02));
    CHECK(nlp.pairs.size() == 51u * 3u * 2u);
    int m = 0;
    for (const auto& b : nlp.structure.equality_rows) m += b.fn.n_out();
    CHECK(m == 7 + 50 * 7 + 51 * 3);
    CHECK(nlp.describe().find("\"num_vars\":967") != std::string::npos);
  }
  SUBCASE("smallest instance: one element, no constraints, no controls") {
    FieldFunc f = FieldFunc::make(2, 0, [](auto x, auto, auto out) {
      out[0] = x[1];
      out[1] = 0.0 * x[0];
    });
    OcpDefinition ocp;
    ocp.sys = assemble_time_frozen(make_state_jump_system(2, 0, std::move(f), {}, 1.0), Vec{});
    ocp.y0 = {0.0, 1.0, 0.0};
    ocp.q_target = {1.0};
    ocp.u_lower = {};
    ocp.u_upper = {};
    ocp.n_elements = 1;
    const TranscribedNlp nlp = transcribe(ocp);
    CHECK(nlp.layout.num_vars() == 2 * 3 + 1);
    int defects = 0;
    for (const auto& b : nlp.structure.equality_rows) defects += b.fn.n_out();
    CHECK(defects == 6);  // initial condition + one defect
    CHECK(nlp.pairs.empty());
  }
  SUBCASE("bouncing-ball variant carries three algebraic variables per node") {
    OcpDefinition ocp = ball_drop_ocp({0.5, 0.0, 0.0}, 0.3, 4);
    const TranscribedNlp nlp = transcribe(ocp);
    CHECK(nlp.layout.num_vars() == 5 * 3 + 5 * 3 + 1);
    CHECK(nlp.layout.alpha_index(1, 0) == nlp.layout.y_start(1) + 3);
  }
  SUBCASE("rejects hand-assembled systems with inconsistent auxiliaries") {
    OcpDefinition ocp = ball_drop_ocp({0.5, 0.0, 0.0}, 0.3, 4);
    ocp.sys.aux_params[0].c = 0.0;  // breaks the damping formula for gamma = 0.9
    CHECK_THROWS_AS(transcribe(ocp), std::invalid_argument);
  }
  SUBCASE("rejects invalid definitions") {
    OcpDefinition ocp = particle_ocp(50);
    ocp.n_ctrl = 7;  // does not divide 50
    CHECK_THROWS_AS(transcribe(ocp), std::invalid_argument);
    ocp = particle_ocp(50);
    ocp.u_upper[1] = kInf;
    CHECK_THROWS_AS(transcribe(ocp), std::invalid_argument);
    ocp = particle_ocp(50);
    ocp.rho = -1.0;
    CHECK_THROWS_AS(transcribe(ocp), std::invalid_argument);
  }
}

TEST_CASE("penalization") {
  const TranscribedNlp nlp = transcribe(ball_drop_ocp({0.5, 0.0, 0.0}, 0.3, 6));
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> gen(-0.5, 1.5);

  SUBCASE("objective equals the independent recomputation") {
    const double mu = 1e-3;
    SmoothNlp smooth = penalize(nlp, mu);
    Vec x(nlp.layout.num_vars());
    for (double& v : x) v = gen(rng);
    double reported = 0.0;
    smooth.objective(std::span<const double>(x), std::span<double>(&reported, 1));
    // Recompute from the layout directly.
    const NlpLayout& L = nlp.layout;
    const int last = L.n_nodes - 1;
    double expected = x[L.clock_index(last)];
    const double dq = x[L.y_start(last)] - 0.3;
    expected += 100.0 * dq * dq;
    for (int n = 0; n < L.n_nodes; ++n) {
      const double a = x[L.alpha_index(n, 0)];
      expected += mu * (a * x[L.lambda0_index(n, 0)] + (1.0 - a) * x[L.lambda1_index(n, 0)]);
    }
    CHECK(reported == doctest::Approx(expected).epsilon(1e-10));
  }
  SUBCASE("no complementarity pairs leaves the objective untouched") {
    const TranscribedNlp smooth_nlp = transcribe(smooth_ocp(5));
    SmoothNlp base = make_smooth_nlp(smooth_nlp.layout.num_vars(), smooth_nlp.structure, smooth_nlp.bounds);
    SmoothNlp pen = penalize(smooth_nlp, 10.0);
    Vec x(smooth_nlp.layout.num_vars());
    for (double& v : x) v = gen(rng);
    double f0 = 0.0, f1 = 0.0;
    base.objective(std::span<const double>(x), std::span<double>(&f0, 1));
    pen.objective(std::span<const double>(x), std::span<double>(&f1, 1));
    CHECK(f0 == f1);
  }
  SUBCASE("requires a positive penalty") { CHECK_THROWS_AS(penalize(nlp, 0.0), std::invalid_argument); }
}

TEST_CASE("initial guess") {
  SUBCASE("speed of time starts at twice the horizon") {
    const TranscribedNlp nlp = transcribe(ball_drop_ocp({0.5, 0.0, 0.0}, 0.3, 6));
    const Vec x = initial_guess(nlp);
    CHECK(x[nlp.layout.w_index()] == 2.0);
    CHECK(x[nlp.layout.lambda1_index(3, 0)] == doctest::Approx(0.5));
    CHECK(x[nlp.layout.alpha_index(3, 0)] == 1.0);
    // Clock grows linearly at rate w/2.
    CHECK(x[nlp.layout.clock_index(6)] == doctest::Approx(6.0 * nlp.h));
  }
  SUBCASE("start on the constraint boundary zeroes lambda1") {
    const TranscribedNlp nlp = transcribe(ball_drop_ocp({0.0, 1.0, 0.0}, 0.3, 6));
    const Vec x = initial_guess(nlp);
    CHECK(x[nlp.layout.lambda1_index(0, 0)] == 0.0);
  }
  SUBCASE("stationarity residual vanishes at node zero") {
    const TranscribedNlp nlp = transcribe(ball_drop_ocp({0.5, 0.0, 0.0}, 0.3, 6));
    SmoothNlp smooth = penalize(nlp, 1e-3);
    const Vec x = initial_guess(nlp);
    Vec g(smooth.m);
    smooth.equalities(std::span<const double>(x), std::span<double>(g));
    // Stationarity rows follow the initial-condition and defect rows; node 0
    // is the first of them.
    const int first_stationarity = 3 + 6 * 3;
    CHECK(g[first_stationarity] == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  }
}

TEST_CASE("complementarity residual") {
  const TranscribedNlp nlp = transcribe(ball_drop_ocp({0.5, 0.0, 0.0}, 0.3, 6));
  SUBCASE("exact LP-KKT values give zero") {
    const Vec x = initial_guess(nlp);
    CHECK(complementarity_residual(nlp, x) == 0.0);
  }
  SUBCASE("violations are measured") {
    Vec x = initial_guess(nlp);
    x[nlp.layout.alpha_index(2, 0)] = 0.5;
    x[nlp.layout.lambda0_index(2, 0)] = 0.5;
    CHECK(complementarity_residual(nlp, x) >= 0.25);
  }
}

TEST_CASE("homotopy on a smooth problem needs a single solve") {
  const TranscribedNlp nlp = transcribe(smooth_ocp(8));
  const HomotopyResult res = solve_homotopy(nlp, {1e-3, 10.0, 3}, initial_guess(nlp));
  CHECK(res.stages.size() == 1);  // no complementarity pairs, schedule collapses
  CHECK(res.comp_residual == 0.0);
  const OcpSolution sol = extract_solution(nlp, res.x);
  // No frozen phases: the clock integrates w over s in [0, 1].
  CHECK(sol.t_final == doctest::Approx(sol.w).epsilon(1e-7));
  CHECK(sol.trajectory.n_jumps == 0);
}

TEST_CASE("homotopy solves the unactuated drop") {
  // The ball falls from 0.5; w stretches the horizon so the trajectory ends
  // near the target height. No bounce: psi stays positive.
  const TranscribedNlp nlp = transcribe(ball_drop_ocp({0.5, 0.0, 0.0}, 0.3, 8));
  const HomotopySchedule sched{1e-3, 10.0, 5};
  const HomotopyResult res = solve_homotopy(nlp, sched, initial_guess(nlp));
  REQUIRE(res.stages.size() == 5);

  SUBCASE("stage statistics and solution quality") {
    for (const auto& s : res.stages) CHECK(s.converged);
    CHECK(res.comp_residual <= 1e-6);
    // Defect feasibility at the final point.
    SmoothNlp smooth = penalize(nlp, sched.mu0 * std::pow(sched.factor, sched.count - 1));
    Vec g(smooth.m);
    smooth.equalities(std::span<const double>(res.x), std::span<double>(g));
    CHECK(norm_inf(g) <= 1e-8);
    // Complementarity residual is non-increasing along the stages.
    for (size_t i = 1; i < res.stages.size(); ++i)
      CHECK(res.stages[i].comp_residual <= res.stages[i - 1].comp_residual + 1e-12);
  }
  SUBCASE("bounds and clock invariants at the solution") {
    const NlpLayout& L = nlp.layout;
    for (int n = 0; n < L.n_nodes; ++n) {
      const double a = res.x[L.alpha_index(n, 0)];
      CHECK(a >= -1e-8);
      CHECK(a <= 1.0 + 1e-8);
      CHECK(res.x[L.lambda0_index(n, 0)] >= -1e-8);
      CHECK(res.x[L.lambda1_index(n, 0)] >= -1e-8);
    }
    const OcpSolution sol = extract_solution(nlp, res.x);
    CHECK(sol.t_final <= sol.w + 1e-9);
    // The drop reaches 0.3 after sqrt(2*0.2/9.81) = 0.202 s.
    CHECK(sol.t_final == doctest::Approx(0.2019).epsilon(0.1));
    CHECK(sol.objective == doctest::Approx(res.kkt.objective).epsilon(1e-4));
  }
  SUBCASE("a single huge-penalty solve from the solution reproduces it") {
    const HomotopyResult again = solve_homotopy(nlp, {1e3, 10.0, 1}, res.x);
    for (size_t i = 0; i < again.x.size(); ++i)
      CHECK(again.x[i] == doctest::Approx(res.x[i]).scale(1.0).epsilon(5e-6));
  }
}

TEST_CASE("homotopy rides through an active bounce") {
  // Thrust-limited ball released moving down: gravity beats the strongest
  // upward thrust, so every useful trajectory bounces before climbing to the
  // target above the release height. Stages are seeded from a rolled-out
  // unactuated trajectory so the contact structure is present in the guess.
  const int n_el = 25;
  FieldFunc f = FieldFunc::make(2, 1, [](auto x, auto u, auto out) {
    out[0] = x[1];
    out[1] = u[0] - 9.81;
  });
  OcpDefinition ocp;
  ocp.sys = assemble_time_frozen(
      make_state_jump_system(2, 1, std::move(f), {make_constraint({1.0}, 0.0)}, 0.9), 5.0, StepMode::LpKkt);
  ocp.y0 = {0.3, -3.0, 0.0};
  ocp.q_target = {0.55};
  ocp.rho = 100.0;
  ocp.u_lower = {-5.0};
  ocp.u_upper = {5.0};
  ocp.w_max = 20.0;
  ocp.n_elements = n_el;
  const TranscribedNlp nlp = transcribe(ocp);

  const double w_seed = 0.45 + compute_tau_jump(5.0, 0.9);
  Vec seed = initial_guess(nlp);
  {
    auto ball = make_bouncing_ball(0.9, 5.0);
    const Trajectory roll = integrate(ball, {0.3, -3.0, 0.0}, w_seed, w_seed / n_el, Scheme::ImplicitEuler);
    const NlpLayout& L = nlp.layout;
    for (int n = 0; n <= n_el; ++n) {
      for (int i = 0; i < 3; ++i) seed[L.y_start(n) + i] = roll.states(n, i);
      const StepValue s = step(roll.states(n, 0), StepMode::LpKkt);
      seed[L.alpha_index(n, 0)] = s.value;
      seed[L.lambda0_index(n, 0)] = s.multipliers->first;
      seed[L.lambda1_index(n, 0)] = s.multipliers->second;
    }
    seed[L.w_index()] = w_seed;
  }
  const HomotopyResult res = solve_homotopy(nlp, {1e-3, 10.0, 7}, seed);
  CHECK(res.comp_residual <= 1e-6);
  const OcpSolution sol = extract_solution(nlp, res.x);
  CHECK(sol.trajectory.n_jumps == 1);
  CHECK(sol.t_final == doctest::Approx(0.435).epsilon(0.5));
  CHECK(std::abs(sol.trajectory.states(sol.trajectory.states.rows() - 1, 0) - 0.55) < 0.05);
}

TEST_CASE("solver stationarity verified through the dense derivative path") {
  // The interior point differentiates through the block structure; recompute
  // its KKT stationarity with the whole-vector forward pass instead.
  const TranscribedNlp nlp = transcribe(ball_drop_ocp({0.5, 0.0, 0.0}, 0.3, 8));
  SmoothNlp smooth = penalize(nlp, 10.0);
  const KktPoint p = solve(smooth, initial_guess(nlp));
  REQUIRE(p.converged);
  const AdEval fe = ad_eval(smooth.objective, p.x);
  const AdEval ge = ad_eval(smooth.equalities, p.x);
  double worst = 0.0;
  for (int i = 0; i < smooth.n; ++i) {
    double r = fe.jacobian(0, i) - p.z_lower[i] + p.z_upper[i];
    for (int k = 0; k < smooth.m; ++k) r += ge.jacobian(k, i) * p.nu[k];
    worst = std::max(worst, std::abs(r));
  }
  // Same scaling slack the solver's convergence test allows itself.
  double mult = 0.0;
  for (double v : p.nu) mult += std::abs(v);
  for (int i = 0; i < smooth.n; ++i) mult += p.z_lower[i] + p.z_upper[i];
  const double sd = std::max(100.0, mult / std::max(1, smooth.m + smooth.n)) / 100.0;
  CHECK(worst / sd <= 1e-6);
}

TEST_CASE("relaxation scheme is a deliberate stub") {
  const TranscribedNlp nlp = transcribe(ball_drop_ocp({0.5, 0.0, 0.0}, 0.3, 4));
  CHECK_THROWS_AS(relax(nlp, 1e-3), std::logic_error);
}

TEST_CASE("homotopy accepts an injected solver") {
  struct Counting final : NlpSolver {
    mutable int calls = 0;
    KktPoint solve(const SmoothNlp& nlp, Vec x0, const SolveOptions& opts) const override {
      ++calls;
      return timefreeze::solve(nlp, std::move(x0), opts);
    }
  } counting;
  const TranscribedNlp nlp = transcribe(ball_drop_ocp({0.5, 0.0, 0.0}, 0.3, 4));
  const HomotopyResult res = solve_homotopy(nlp, {1e-2, 10.0, 2}, initial_guess(nlp), {}, &counting);
  CHECK(counting.calls == 2);
  CHECK(res.stages.size() == 2);
}

TEST_CASE("jacobian pattern follows the block structure") {
  const TranscribedNlp nlp = transcribe(ball_drop_ocp({0.5, 0.0, 0.0}, 0.3, 3));
  SmoothNlp smooth = penalize(nlp, 1.0);
  const auto pattern = jacobian_pattern(smooth);
  CHECK(!pattern.empty());
  // Far sparser than dense.
  CHECK(pattern.size() < static_cast<size_t>(smooth.n) * smooth.m / 2);
  for (const auto& [r, c] : pattern) {
    CHECK(r >= 0);
    CHECK(r < smooth.m);
    CHECK(c >= 0);
    CHECK(c < smooth.n);
  }
}

TEST_CASE("derivatives of the transcribed problem check out") {
  const TranscribedNlp nlp = transcribe(ball_drop_ocp({0.5, -3.0, 0.0}, 0.2, 6));
  SmoothNlp smooth = penalize(nlp, 1e-3);
  const Vec x = initial_guess(nlp);
  const auto report = check_derivatives(smooth, x, 1e-6);
  CHECK(report.max_rel_gradient <= 1e-6);
  CHECK(report.max_rel_jacobian <= 1e-5);
  CHECK(report.flagged.empty());
}

TEST_SUITE_END();
