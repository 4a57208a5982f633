// Acceptance suite: one checkable criterion per function, each printing a
// single PASS/FAIL line with the measured quantities. Run all or a subset:
//   acceptance            runs 1..9
//   acceptance 3 7        runs the listed criteria

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <cstdarg>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "timefreeze/dynamics.hpp"
#include "timefreeze/io.hpp"
#include "timefreeze/nlp.hpp"
#include "timefreeze/ocp.hpp"
#include "timefreeze/scenario.hpp"
#include "timefreeze/simulate.hpp"
#include "timefreeze/systems.hpp"

using namespace timefreeze;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

bool report(int criterion, bool pass, const std::string& detail, double seconds) {
  std::printf("criterion %d %s: %s (%.1f s)\n", criterion, pass ? "PASS" : "FAIL", detail.c_str(), seconds);
  std::fflush(stdout);
  return pass;
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

Vec ball_oracle_state(double t) {
  const auto [q, v] = analytic_bouncing_ball(0.5, 0.0, 0.9, 9.81, t);
  return {q, v};
}

// Restitution-law exactness of the auxiliary system (reference values
// tau_jump = 1.4058, c = 0.1499 for k = 5, gamma = 0.9).
bool criterion_1() {
  Timer timer;
  auto field = build_auxiliary(make_constraint({1.0}, 0.0), make_auxiliary_params(5.0, 0.9), 2);
  const Assumption1Report rep = verify_assumption1(field, Vec{0.0, -1.0}, 1e-6);
  const double tau_err = std::abs(rep.tau_return - 1.4058);
  const double ratio_err = std::abs(rep.restitution_ratio - 0.9);
  const double sec = timer.seconds();
  const bool pass = tau_err <= 1e-3 && ratio_err <= 1e-5 && rep.stayed_in_vminus && sec < 5.0;
  return report(1, pass,
                fmt("tau_return = %.6f (|err| %.2e <= 1e-3), ratio = %.9f (|err| %.2e <= 1e-5), stayed in V-: %s",
                    rep.tau_return, tau_err, rep.restitution_ratio, ratio_err,
                    rep.stayed_in_vminus ? "yes" : "no"),
                sec);
}

// Damping formula regression against the reference values.
bool criterion_2() {
  Timer timer;
  const double c20 = compute_damping(20.0, 0.9);
  const double c5 = compute_damping(5.0, 0.9);
  const bool pass = std::abs(c20 - 0.2998) <= 5e-5 && std::abs(c5 - 0.1499) <= 5e-5;
  return report(2, pass,
                fmt("c(20, 0.9) = %.7f (|err| %.2e <= 5e-5), c(5, 0.9) = %.7f (|err| %.2e <= 5e-5)", c20,
                    std::abs(c20 - 0.2998), c5, std::abs(c5 - 0.1499)),
                timer.seconds());
}

// Solution recovery: explicit Euler at h = 1e-4 against the analytic oracle.
bool criterion_3() {
  Timer timer;
  auto ball = make_bouncing_ball(0.9, 5.0);
  const double tau_f = 1.0 + 2.0 * 1.4058;
  const Trajectory traj = integrate(ball, {0.5, 0.0, 0.0}, tau_f, 1e-4, Scheme::ExplicitEuler);
  const PhysicalTrajectory phys = recover_physical(traj);
  const Vec x = sample_at_time(phys, 1.0);
  const Vec ref = ball_oracle_state(1.0);
  const double err = std::hypot(x[0] - ref[0], x[1] - ref[1]);
  const double sec = timer.seconds();
  const bool pass = err <= 5e-3 && phys.n_jumps == 2 && sec < 10.0;
  return report(3, pass,
                fmt("|x(1) - oracle|_2 = %.4e (tolerance 5e-3), jumps detected = %d (expected 2)", err,
                    phys.n_jumps),
                sec);
}

// Convergence order over three decades of function evaluations.
bool criterion_4() {
  Timer timer;
  auto ball = make_bouncing_ball(0.9, 5.0);
  const double tau_f = required_pseudo_time(1.0, 2, ball.aux_params[0].tau_jump);
  const std::vector<long> m_list = {128, 512, 2048, 8192, 32768, 131072};
  const auto study = convergence_study(ball, {0.5, 0.0, 0.0}, ball_oracle_state, 1.0, tau_f,
                                       {Scheme::ExplicitEuler, Scheme::Rk4}, m_list);
  const double p_euler = study.order_of(Scheme::ExplicitEuler);
  const double p_rk4 = study.order_of(Scheme::Rk4);
  int worst_inversions = 0;
  for (Scheme s : {Scheme::ExplicitEuler, Scheme::Rk4}) {
    int inversions = 0;
    double prev = -1.0;
    for (const auto& cell : study.cells) {
      if (cell.scheme != s) continue;
      if (prev >= 0.0 && cell.error > prev) ++inversions;
      prev = cell.error;
    }
    worst_inversions = std::max(worst_inversions, inversions);
  }
  const double sec = timer.seconds();
  const bool orders_ok = p_euler >= 0.7 && p_euler <= 1.3 && p_rk4 >= 0.7 && p_rk4 <= 1.3;
  const bool pass = orders_ok && worst_inversions <= 1 && sec < 120.0;
  return report(4, pass,
                fmt("fitted orders: euler %.3f, rk4 %.3f (both in [0.7, 1.3]); monotonicity inversions: %d (<= 1)",
                    p_euler, p_rk4, worst_inversions),
                sec);
}

// Terminal state does not depend on the auxiliary stiffness.
bool criterion_5() {
  Timer timer;
  const double ks[3] = {5.0, 20.0, 100.0};
  Vec terminal[3];
  for (int i = 0; i < 3; ++i) {
    auto ball = make_bouncing_ball(0.9, ks[i]);
    const double tau_f = required_pseudo_time(1.0, 2, ball.aux_params[0].tau_jump);
    const Trajectory traj = integrate(ball, {0.5, 0.0, 0.0}, tau_f, 1e-4, Scheme::Rk4);
    terminal[i] = sample_at_time(recover_physical(traj), 1.0);
  }
  double worst = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b)
      worst = std::max(worst, std::hypot(terminal[a][0] - terminal[b][0], terminal[a][1] - terminal[b][1]));
  const double sec = timer.seconds();
  const bool pass = worst <= 1e-2 && sec < 60.0;
  return report(5, pass, fmt("max pairwise terminal difference over k in {5, 20, 100}: %.2e (<= 1e-2, rk4)", worst),
                sec);
}

// Unactuated particle: wall impact order and restitution ratios.
bool criterion_6() {
  Timer timer;
  auto particle = make_particle_3d(0.9, 12.0);
  const double tau_f = required_pseudo_time(1.5, 4, particle.aux_params[0].tau_jump);
  const Trajectory traj = integrate(particle, {4.0, 4.0, 1.0, -3.0, -3.5, 0.0, 0.0}, tau_f, 2.5e-4, Scheme::Rk4);
  const PhysicalTrajectory phys = recover_physical(traj);

  // Wall impacts show up as sign flips of the normal velocity between
  // consecutive retained samples.
  double t_x = -1.0, ratio_x = 0.0, t_y = -1.0, ratio_y = 0.0;
  for (size_t r = 1; r < phys.t_grid.size(); ++r) {
    const double vx0 = phys.states(static_cast<int>(r - 1), 3), vx1 = phys.states(static_cast<int>(r), 3);
    const double vy0 = phys.states(static_cast<int>(r - 1), 4), vy1 = phys.states(static_cast<int>(r), 4);
    if (t_x < 0.0 && vx0 < 0.0 && vx1 > 0.0) {
      t_x = phys.t_grid[r];
      ratio_x = -vx1 / vx0;
    }
    if (t_y < 0.0 && vy0 < 0.0 && vy1 > 0.0) {
      t_y = phys.t_grid[r];
      ratio_y = -vy1 / vy0;
    }
  }
  const double sec = timer.seconds();
  const bool order_ok = t_y > 0.0 && t_x > 0.0 && t_y < t_x;
  const bool ratios_ok = std::abs(ratio_y - 0.9) <= 1e-2 && std::abs(ratio_x - 0.9) <= 1e-2;
  const bool pass = order_ok && ratios_ok && sec < 30.0;
  return report(6, pass,
                fmt("q_y wall at t = %.4f before q_x wall at t = %.4f; ratios %.5f / %.5f (gamma 0.9 +- 1e-2)",
                    t_y, t_x, ratio_y, ratio_x),
                sec);
}

// Time-optimal particle OCP at desk scale.
bool criterion_7() {
  Timer timer;
  OcpDefinition def;
  def.sys = make_particle_3d(0.9, 12.0, 1.0, 9.81, StepMode::LpKkt);
  def.y0 = {4.0, 4.0, 1.0, -3.0, -3.5, 0.0, 0.0};
  def.q_target = {5.0, 5.0, 1.0};
  def.rho = 100.0;
  def.u_lower = {-9.81, -9.81, -9.81};
  def.u_upper = {9.81, 9.81, 9.81};
  def.w_max = 20.0;
  def.n_elements = 50;
  const TranscribedNlp nlp = transcribe(def);

  // w guess 2; states seeded from the unactuated rollout over tau = w s.
  Vec guess = initial_guess(nlp);
  const NlpLayout& L = nlp.layout;
  const double w_guess = guess[L.w_index()];
  const Trajectory roll = integrate(def.sys, def.y0, w_guess, w_guess / def.n_elements, Scheme::ImplicitEuler);
  for (int n = 0; n < L.n_nodes; ++n) {
    for (int i = 0; i < L.n_y; ++i) guess[L.y_start(n) + i] = roll.states(n, i);
    for (int c = 0; c < L.n_c; ++c) {
      const double psi = roll.states(n, c);
      const StepValue s = step(psi, StepMode::LpKkt);
      guess[L.alpha_index(n, c)] = s.value;
      guess[L.lambda0_index(n, c)] = s.multipliers->first;
      guess[L.lambda1_index(n, c)] = s.multipliers->second;
    }
  }

  SolveOptions opts;
  opts.max_iter = 6000;
  const HomotopyResult res = solve_homotopy(nlp, {1e-3, 10.0, 7}, std::move(guess), opts);
  const OcpSolution sol = extract_solution(nlp, res.x);
  double miss = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double d = res.x[L.y_start(L.n_nodes - 1) + i] - def.q_target[i];
    miss += d * d;
  }
  miss = std::sqrt(miss);
  const double sec = timer.seconds();
  const bool pass = std::abs(sol.t_final - 0.87) <= 0.05 && miss <= 0.05 && res.comp_residual <= 1e-6 &&
                    sec < 900.0;
  return report(7, pass,
                fmt("t(1) = %.4f (0.87 +- 0.05), terminal miss = %.2e (<= 0.05), complementarity residual = %.2e "
                    "(<= 1e-6), %zu stages",
                    sol.t_final, miss, res.comp_residual, res.stages.size()),
                sec);
}

// NLP solver soundness: random convex QPs and the step-function LP.
bool criterion_8() {
  Timer timer;
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> ns(2, 20);
  double worst = 0.0;
  bool solved_all = true;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = ns(rng);
    std::uniform_int_distribution<int> ms(1, n - 1);
    const int m = ms(rng);
    std::uniform_real_distribution<double> gen(-1.0, 1.0);
    Mat r(n, n), q(n, n), a(m, n);
    Vec c(n), b(m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r(i, j) = gen(rng);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += r(k, i) * r(k, j);
        q(i, j) = s + (i == j ? double(n) : 0.0);
      }
    for (double& v : c) v = gen(rng);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = gen(rng);
    for (double& v : b) v = gen(rng);

    Mat kkt(n + m, n + m);
    Vec rhs(n + m);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) kkt(i, j) = q(i, j);
      for (int r2 = 0; r2 < m; ++r2) kkt(i, n + r2) = a(r2, i);
      rhs[i] = -c[i];
    }
    for (int r2 = 0; r2 < m; ++r2) {
      for (int j = 0; j < n; ++j) kkt(n + r2, j) = a(r2, j);
      rhs[n + r2] = b[r2];
    }
    const Vec closed_form = lu_solve(std::move(kkt), std::move(rhs));

    auto obj = VectorFunc::make(n, 1, [q, c, n](auto x, auto out) {
      using T = std::remove_cvref_t<decltype(out[0])>;
      T acc = 0.0;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) acc += 0.5 * q(i, j) * x[i] * x[j];
        acc += c[i] * x[i];
      }
      out[0] = acc;
    });
    auto eqs = VectorFunc::make(n, m, [a, b, n, m](auto x, auto out) {
      using T = std::remove_cvref_t<decltype(out[0])>;
      for (int r2 = 0; r2 < m; ++r2) {
        T acc = -b[r2];
        for (int j = 0; j < n; ++j) acc += a(r2, j) * x[j];
        out[r2] = acc;
      }
    });
    try {
      const KktPoint p = solve(make_smooth_nlp(n, std::move(obj), std::move(eqs), {}), Vec(n, 0.0));
      for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(p.x[i] - closed_form[i]));
    } catch (const NlpError&) {
      solved_all = false;
    }
  }

  auto lp_obj = VectorFunc::make(1, 1, [](auto x, auto out) { out[0] = -2.0 * x[0]; });
  const KktPoint lp = solve(make_smooth_nlp(1, std::move(lp_obj), {}, {{0.0}, {1.0}}), {0.3});
  const double lp_err = std::abs(lp.x[0] - 1.0);
  const double sec = timer.seconds();
  const bool pass = solved_all && worst <= 1e-8 && lp_err <= 1e-8 && sec < 30.0;
  return report(8, pass,
                fmt("50 random QPs: max deviation from closed-form KKT = %.2e (<= 1e-8); LP(z=2) -> w = 1 %s %.1e",
                    worst, lp_err <= 1e-8 ? "within" : "off by", lp_err),
                sec);
}

// Property suites: clock monotonicity, Filippov weights, LP-KKT residuals,
// AD vs finite differences on the transcribed NLP.
bool criterion_9() {
  Timer timer;
  std::string detail;
  bool pass = true;

  {  // clock monotonicity and increment bound on the reference bounce
    auto ball = make_bouncing_ball(0.9, 5.0);
    const double tau_f = required_pseudo_time(1.0, 2, ball.aux_params[0].tau_jump);
    const Trajectory traj = integrate(ball, {0.5, 0.0, 0.0}, tau_f, 1e-3, Scheme::ExplicitEuler);
    double min_inc = 1.0, max_over = 0.0;
    for (int i = 1; i < traj.n_samples(); ++i) {
      const double inc = traj.clock(i) - traj.clock(i - 1);
      min_inc = std::min(min_inc, inc);
      max_over = std::max(max_over, inc - (traj.tau_grid[i] - traj.tau_grid[i - 1]));
    }
    const bool ok = min_inc >= -1e-12 && max_over <= 1e-12;
    pass = pass && ok;
    detail += fmt("clock monotone (min increment %.1e): %s; ", min_inc, ok ? "ok" : "VIOLATED");
  }

  {  // Filippov weights stay in [0, 1]; clock rate equals the product
    auto particle = make_particle_3d(0.9, 12.0);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> gen(-2.0, 2.0);
    bool ok = true;
    const Vec u = {0.0, 0.0, 0.0};
    for (int trial = 0; trial < 200; ++trial) {
      Vec y(7);
      for (double& v : y) v = gen(rng);
      const Vec alpha = eval_step_values(particle, y);
      double prod = 1.0;
      for (double a : alpha) {
        if (a < 0.0 || a > 1.0) ok = false;
        prod *= a;
      }
      const Vec ydot = eval_rhs(particle, y, u);
      if (ydot[6] != prod) ok = false;
    }
    pass = pass && ok;
    detail += fmt("Filippov weights in [0,1] and clock rate = prod(alpha): %s; ", ok ? "ok" : "VIOLATED");
  }

  {  // LP-KKT residuals vanish at step-function outputs
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> gen(-5.0, 5.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const double z = trial == 0 ? 0.0 : gen(rng);
      const StepValue s = step(z, StepMode::LpKkt);
      for (double r : lp_kkt_residual(z, s.value, s.multipliers->first, s.multipliers->second))
        worst = std::max(worst, std::abs(r));
    }
    pass = pass && worst == 0.0;
    detail += fmt("LP-KKT residual at step outputs: max %.1e; ", worst);
  }

  {  // AD vs central differences on the penalized transcription
    OcpDefinition def;
    def.sys = make_particle_3d(0.9, 12.0, 1.0, 9.81, StepMode::LpKkt);
    def.y0 = {4.0, 4.0, 1.0, -3.0, -3.5, 0.0, 0.0};
    def.q_target = {5.0, 5.0, 1.0};
    def.u_lower = {-9.81, -9.81, -9.81};
    def.u_upper = {9.81, 9.81, 9.81};
    def.n_elements = 50;
    const TranscribedNlp nlp = transcribe(def);
    SmoothNlp smooth = penalize(nlp, 1e-3);
    const Vec x = initial_guess(nlp);
    const DerivativeCheck check = check_derivatives(smooth, x, 1e-6);
    const bool ok = check.flagged.empty() && check.max_rel_gradient <= 1e-5 && check.max_rel_jacobian <= 1e-5;
    pass = pass && ok;
    detail += fmt("AD vs FD on the transcribed NLP: max rel gradient %.1e, Jacobian %.1e, flagged %zu",
                  check.max_rel_gradient, check.max_rel_jacobian, check.flagged.size());
  }

  const double sec = timer.seconds();
  return report(9, pass && sec < 120.0, detail, sec);
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  auto selected = [&](int c) { return wanted.empty() || wanted.count(c) > 0; };

  int failures = 0;
  using Criterion = bool (*)();
  const Criterion criteria[] = {criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
                                criterion_6, criterion_7, criterion_8, criterion_9};
  for (int c = 1; c <= 9; ++c) {
    if (!selected(c)) continue;
    bool ok = false;
    try {
      ok = criteria[c - 1]();
    } catch (const std::exception& e) {
      report(c, false, std::string("exception: ") + e.what(), 0.0);
    }
    if (!ok) ++failures;
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
