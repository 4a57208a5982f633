#include "timefreeze/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace timefreeze {

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::ExplicitEuler: return "explicit-euler";
    case Scheme::Rk4: return "rk4";
    case Scheme::ImplicitEuler: return "implicit-euler";
  }
  return "?";
}

std::optional<Scheme> scheme_from_name(const std::string& name) {
  if (name == "explicit-euler" || name == "euler") return Scheme::ExplicitEuler;
  if (name == "rk4") return Scheme::Rk4;
  if (name == "implicit-euler") return Scheme::ImplicitEuler;
  return std::nullopt;
}

int evals_per_step(Scheme s) { return s == Scheme::Rk4 ? 4 : 1; }

namespace {

Vec rhs(const TimeFrozenSystem& sys, const Vec& y, const Vec& u) { return eval_rhs(sys, y, u); }

Vec explicit_euler_step(const TimeFrozenSystem& sys, const Vec& y, const Vec& u, double h) {
  Vec f = rhs(sys, y, u);
  Vec out(y.size());
  for (size_t i = 0; i < y.size(); ++i) out[i] = y[i] + h * f[i];
  return out;
}

Vec rk4_step(const TimeFrozenSystem& sys, const Vec& y, const Vec& u, double h) {
  const size_t n = y.size();
  Vec k1 = rhs(sys, y, u), s(n);
  for (size_t i = 0; i < n; ++i) s[i] = y[i] + 0.5 * h * k1[i];
  Vec k2 = rhs(sys, s, u);
  for (size_t i = 0; i < n; ++i) s[i] = y[i] + 0.5 * h * k2[i];
  Vec k3 = rhs(sys, s, u);
  for (size_t i = 0; i < n; ++i) s[i] = y[i] + h * k3[i];
  Vec k4 = rhs(sys, s, u);
  Vec out(n);
  for (size_t i = 0; i < n; ++i) out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

// Jacobian of the combined field at y with given (frozen) step values.
Mat rhs_jacobian_fixed_alpha(const TimeFrozenSystem& sys, const Vec& y, const Vec& u, const Vec& alpha) {
  const int ny = sys.n_y();
  if (ny > ad::kBlockCap) throw std::invalid_argument("state dimension exceeds AD block capacity");
  std::vector<ad::Grad> ys(ny), us(u.size()), as(alpha.size()), out(ny);
  for (int i = 0; i < ny; ++i) ys[i] = ad::Grad::seed(y[i], ny, i);
  for (size_t i = 0; i < u.size(); ++i) us[i] = ad::Grad(u[i]);
  for (size_t i = 0; i < alpha.size(); ++i) as[i] = ad::Grad(alpha[i]);
  eval_rhs_with_alpha<ad::Grad>(sys, ys, us, as, out);
  Mat j(ny, ny);
  for (int r = 0; r < ny; ++r)
    for (int c = 0; c < out[r].n; ++c) j(r, c) = out[r].d[c];
  return j;
}

// Implicit-Euler step by damped Newton. The Sign-mode field is only piecewise
// smooth, so Newton runs with the step-value pattern frozen and the pattern is
// re-read at the candidate solution until the two agree. When a crossing
// admits no pure pattern (the free branch stays inside, the auxiliary branch
// exits), the set-valued case of the step function applies: the flipping
// constraint's alpha is bisected to put the solution on psi = 0.
Vec implicit_euler_step(const TimeFrozenSystem& sys, const Vec& y, const Vec& u, double h, int step_index) {
  const int ny = sys.n_y();
  const int n_pos = sys.n_x() / 2;

  auto fail = [&](const char* what) -> IntegrationError {
    return IntegrationError(std::string(what) + " at step " + std::to_string(step_index), step_index);
  };

  auto solve_fixed = [&](const Vec& alpha, Vec start) {
    Vec yn = std::move(start);
    int newton_budget = 50;
    auto residual_fixed = [&](const Vec& cand) {
      Vec f(ny);
      eval_rhs_with_alpha<double>(sys, cand, u, alpha, f);
      Vec r(ny);
      for (int i = 0; i < ny; ++i) r[i] = cand[i] - y[i] - h * f[i];
      return r;
    };
    Vec r = residual_fixed(yn);
    while (norm_inf(r) > 1e-10) {
      if (--newton_budget < 0) throw fail("implicit Euler Newton did not converge");
      Mat j = rhs_jacobian_fixed_alpha(sys, yn, u, alpha);
      Mat newton(ny, ny);
      for (int a = 0; a < ny; ++a)
        for (int b = 0; b < ny; ++b) newton(a, b) = (a == b ? 1.0 : 0.0) - h * j(a, b);
      Vec neg_r(ny);
      for (int i = 0; i < ny; ++i) neg_r[i] = -r[i];
      Vec dy = lu_solve(std::move(newton), std::move(neg_r));
      const double r0 = norm2(r);
      double t = 1.0;
      bool improved = false;
      for (int ls = 0; ls < 30; ++ls) {
        Vec cand(ny);
        for (int i = 0; i < ny; ++i) cand[i] = yn[i] + t * dy[i];
        Vec rc = residual_fixed(cand);
        if (norm2(rc) < r0 || norm_inf(rc) <= 1e-10) {
          yn = std::move(cand);
          r = std::move(rc);
          improved = true;
          break;
        }
        t *= 0.5;
      }
      if (!improved) throw fail("implicit Euler line search failed");
    }
    return yn;
  };

  Vec pattern = eval_step_values(sys, y);
  std::vector<Vec> seen;
  Vec yn = y;
  for (int sweep = 0; sweep < 8; ++sweep) {
    yn = solve_fixed(pattern, yn);
    const Vec pattern_at = eval_step_values(sys, yn);
    if (pattern_at == pattern) return yn;
    const bool cycled =
        std::find(seen.begin(), seen.end(), pattern_at) != seen.end() || pattern_at == pattern;
    if (cycled) {
      int flip = -1;
      for (size_t c = 0; c < pattern.size(); ++c) {
        if (pattern_at[c] != pattern[c]) {
          if (flip >= 0) throw fail("implicit Euler step flips several constraints at once");
          flip = static_cast<int>(c);
        }
      }
      if (flip < 0) throw fail("implicit Euler step pattern did not settle");
      const auto& con = sys.base.constraints[flip];
      auto psi_of = [&](const Vec& cand) { return con.psi(std::span<const double>(cand).first(n_pos)); };
      Vec alpha = pattern;
      alpha[flip] = 0.0;
      Vec y_aux = solve_fixed(alpha, yn);
      alpha[flip] = 1.0;
      Vec y_free = solve_fixed(alpha, yn);
      double lo = 0.0, hi = 1.0;  // psi at the aux end exits, at the free end stays inside
      if (psi_of(y_aux) < 0.0 || psi_of(y_free) > 0.0) throw fail("implicit Euler crossing is not bracketed");
      Vec y_mid = yn;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        alpha[flip] = mid;
        y_mid = solve_fixed(alpha, y_mid);
        if (psi_of(y_mid) > 0.0)
          lo = mid;  // too frozen, still exiting: weight the free field more
        else
          hi = mid;
        if (hi - lo < 1e-15) break;
      }
      return y_mid;
    }
    seen.push_back(pattern);
    pattern = pattern_at;
  }
  throw fail("implicit Euler step pattern did not settle");
}

}  // namespace

Trajectory integrate(const TimeFrozenSystem& sys, Vec y0, const ControlSchedule& u_fn, double tau_f, double h,
                     Scheme scheme) {
  if (!(h > 0.0)) throw std::invalid_argument("step size must be positive");
  if (!(tau_f > 0.0)) throw std::invalid_argument("integration horizon must be positive");
  if (static_cast<int>(y0.size()) != sys.n_y()) throw std::invalid_argument("initial state dimension mismatch");

  const int n_steps = static_cast<int>(std::ceil(tau_f / h - 1e-12));
  Trajectory traj;
  traj.scheme = scheme;
  traj.h = h;
  traj.tau_grid.resize(n_steps + 1);
  traj.states = Mat(n_steps + 1, sys.n_y());
  if (sys.n_u() > 0) traj.controls = Mat(n_steps, sys.n_u());

  Vec y = std::move(y0);
  std::copy(y.begin(), y.end(), traj.states.row(0).begin());
  traj.tau_grid[0] = 0.0;

  const Vec u_zero(sys.n_u(), 0.0);
  double tau = 0.0;
  for (int n = 0; n < n_steps; ++n) {
    const double step_len = std::min(h, tau_f - tau);
    Vec u = u_fn ? u_fn(tau) : u_zero;
    if (static_cast<int>(u.size()) != sys.n_u()) throw std::invalid_argument("control dimension mismatch");
    switch (scheme) {
      case Scheme::ExplicitEuler: y = explicit_euler_step(sys, y, u, step_len); break;
      case Scheme::Rk4: y = rk4_step(sys, y, u, step_len); break;
      case Scheme::ImplicitEuler: y = implicit_euler_step(sys, y, u, step_len, n); break;
    }
    tau = std::min(tau + h, tau_f);
    traj.tau_grid[n + 1] = tau;
    std::copy(y.begin(), y.end(), traj.states.row(n + 1).begin());
    if (traj.controls) std::copy(u.begin(), u.end(), traj.controls->row(n).begin());
  }
  return traj;
}

Trajectory integrate(const TimeFrozenSystem& sys, Vec y0, double tau_f, double h, Scheme scheme) {
  return integrate(sys, std::move(y0), ControlSchedule(), tau_f, h, scheme);
}

PhysicalTrajectory recover_physical(const Trajectory& traj, double theta) {
  const int n = traj.n_samples();
  const int ny = traj.n_y();
  const int nx = ny - 1;

  PhysicalTrajectory out;
  out.frozen_mask.assign(n, 0);
  std::vector<std::uint8_t> frozen_step(n, 0);  // step i-1 -> i
  for (int i = 1; i < n; ++i) {
    const double dtau = traj.tau_grid[i] - traj.tau_grid[i - 1];
    const double dclock = traj.clock(i) - traj.clock(i - 1);
    frozen_step[i] = dclock < theta * dtau ? 1 : 0;
  }
  // A sample is dropped when it sits strictly inside a frozen phase. The
  // last sample of a phase is the post-jump state and is kept, so the jump
  // instant appears twice: pre-jump then post-jump at the same t.
  int kept = 0;
  for (int i = 0; i < n; ++i) {
    const bool incoming_frozen = i > 0 && frozen_step[i];
    const bool outgoing_frozen = i + 1 < n ? frozen_step[i + 1] : incoming_frozen;
    out.frozen_mask[i] = incoming_frozen && outgoing_frozen ? 1 : 0;
    if (!out.frozen_mask[i]) ++kept;
  }

  out.t_grid.resize(kept);
  out.states = Mat(kept, nx);
  int r = 0;
  for (int i = 0; i < n; ++i) {
    if (out.frozen_mask[i]) continue;
    out.t_grid[r] = traj.clock(i);
    for (int c = 0; c < nx; ++c) out.states(r, c) = traj.states(i, c);
    ++r;
  }

  bool in_run = false;
  for (int i = 0; i < n; ++i) {
    if (out.frozen_mask[i] && !in_run) {
      in_run = true;
      ++out.n_jumps;
      out.jump_times.push_back(traj.clock(i));
    } else if (!out.frozen_mask[i]) {
      in_run = false;
    }
  }
  return out;
}

Vec sample_at_time(const PhysicalTrajectory& traj, double t) {
  const int n = static_cast<int>(traj.t_grid.size());
  if (n == 0) throw std::invalid_argument("empty physical trajectory");
  auto row = [&](int i) {
    auto s = traj.states.row(i);
    return Vec(s.begin(), s.end());
  };
  if (t <= traj.t_grid.front()) return row(0);
  if (t >= traj.t_grid.back()) return row(n - 1);
  // Last retained sample at or before t.
  int lo = 0;
  for (int i = 1; i < n; ++i) {
    if (traj.t_grid[i] <= t)
      lo = i;
    else
      break;
  }
  const int hi = std::min(lo + 1, n - 1);
  const double t0 = traj.t_grid[lo], t1 = traj.t_grid[hi];
  if (t1 <= t0) return row(lo);
  const double w = (t - t0) / (t1 - t0);
  Vec a = row(lo), b = row(hi);
  for (size_t i = 0; i < a.size(); ++i) a[i] = (1.0 - w) * a[i] + w * b[i];
  return a;
}

std::pair<double, double> analytic_bouncing_ball(double q0, double v0, double gamma, double g, double t) {
  if (q0 < 0.0) throw std::invalid_argument("ball must start at or above the table");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
  if (!(g > 0.0)) throw std::invalid_argument("gravity must be positive");
  if (t < 0.0) throw std::invalid_argument("time must be nonnegative");

  double q = q0, v = v0, now = 0.0;
  for (int impacts = 0; impacts <= 10000; ++impacts) {
    // Impact time from the current flight arc: q + v s - g/2 s^2 = 0.
    const double disc = v * v + 2.0 * g * q;
    const double s_impact = (v + std::sqrt(std::max(disc, 0.0))) / g;
    if (now + s_impact > t) {
      const double dt = t - now;
      return {q + v * dt - 0.5 * g * dt * dt, v - g * dt};
    }
    now += s_impact;
    const double v_pre = v - g * s_impact;
    v = -gamma * v_pre;
    q = 0.0;
    if (v <= 1e-14) return {0.0, 0.0};  // came to rest
  }
  throw std::runtime_error("analytic bouncing ball: more than 10000 impacts before the requested time (Zeno guard)");
}

double required_pseudo_time(double t_f, int n_jumps, double tau_jump) {
  if (t_f < 0.0 || n_jumps < 0 || tau_jump < 0.0) throw std::invalid_argument("arguments must be nonnegative");
  return t_f + n_jumps * tau_jump;
}

double ConvergenceStudy::order_of(Scheme s) const {
  for (const auto& [scheme, order] : fitted_orders)
    if (scheme == s) return order;
  throw std::invalid_argument("scheme not present in study");
}

ConvergenceStudy convergence_study(const TimeFrozenSystem& sys, const Vec& y0, const Oracle& oracle, double t_f,
                                   double tau_f, const std::vector<Scheme>& schemes,
                                   const std::vector<long>& m_list) {
  ConvergenceStudy study;
  for (Scheme s : schemes)
    for (long m : m_list) {
      if (m % evals_per_step(s) != 0)
        throw std::invalid_argument("M = " + std::to_string(m) + " is not divisible by the evaluations per step of " +
                                    scheme_name(s));
      study.cells.push_back({s, m, tau_f / static_cast<double>(m / evals_per_step(s)), 0.0});
    }

  const Vec x_exact = oracle(t_f);

  auto run_cell = [&](ConvergenceCell& cell) {
    const long n_steps = cell.m_evals / evals_per_step(cell.scheme);
    const double h = tau_f / static_cast<double>(n_steps);
    Trajectory traj = integrate(sys, y0, tau_f, h, cell.scheme);
    PhysicalTrajectory phys = recover_physical(traj);
    const Vec x_num = sample_at_time(phys, t_f);
    double e2 = 0.0;
    for (size_t i = 0; i < x_exact.size(); ++i) {
      const double d = x_exact[i] - x_num[i];
      e2 += d * d;
    }
    cell.error = std::sqrt(e2);
    cell.h = h;
  };

  int threads = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("TIMEFREEZE_THREADS")) threads = std::max(1, std::atoi(env));
  threads = std::min<int>(threads, static_cast<int>(study.cells.size()));

  if (threads <= 1) {
    for (auto& cell : study.cells) run_cell(cell);
  } else {
    std::atomic<size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= study.cells.size()) return;
        run_cell(study.cells[i]);
      }
    };
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (Scheme s : schemes) {
    // Least-squares slope of log E over log M.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& cell : study.cells) {
      if (cell.scheme != s || cell.error <= 0.0) continue;
      const double x = std::log(static_cast<double>(cell.m_evals));
      const double y = std::log(cell.error);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++n;
    }
    const double denom = n * sxx - sx * sx;
    const double slope = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
    study.fitted_orders.emplace_back(s, -slope);
  }
  return study;
}

}  // namespace timefreeze
