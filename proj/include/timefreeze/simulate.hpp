#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "timefreeze/dynamics.hpp"
#include "timefreeze/linalg.hpp"

namespace timefreeze {

enum class Scheme { ExplicitEuler, Rk4, ImplicitEuler };

std::string scheme_name(Scheme s);
std::optional<Scheme> scheme_from_name(const std::string& name);

/// Pseudo-time samples of the augmented state y = (x, t); clock is the last
/// column and is non-decreasing by construction.
struct Trajectory {
  Vec tau_grid;
  Mat states;
  std::optional<Mat> controls;  // one row per step interval
  Scheme scheme = Scheme::ExplicitEuler;
  double h = 0.0;

  int n_samples() const { return static_cast<int>(tau_grid.size()); }
  int n_y() const { return states.cols(); }
  double clock(int i) const { return states(i, states.cols() - 1); }
};

/// Physical-time samples after dropping frozen phases and removing the clock.
struct PhysicalTrajectory {
  Vec t_grid;
  Mat states;                        // n_x columns
  std::vector<std::uint8_t> frozen_mask;  // per original sample: 1 = dropped
  int n_jumps = 0;
  Vec jump_times;
};

struct IntegrationError : std::runtime_error {
  IntegrationError(const std::string& what, int step) : std::runtime_error(what), step_index(step) {}
  int step_index;
};

using ControlSchedule = std::function<Vec(double tau)>;

/// Fixed-step integration over [0, tau_f]; ceil(tau_f / h) steps, the last one
/// shortened to land on tau_f. ImplicitEuler solves each step by damped
/// Newton to residual 1e-10 with Sign-mode step values inside the field,
/// failing with the step index after 50 iterations.
Trajectory integrate(const TimeFrozenSystem& sys, Vec y0, const ControlSchedule& u, double tau_f, double h,
                     Scheme scheme);
Trajectory integrate(const TimeFrozenSystem& sys, Vec y0, double tau_f, double h, Scheme scheme);

/// Solution recovery: drops samples whose clock advance over the incoming
/// step is below theta * step, removes the clock column, and reindexes by
/// physical time. Consecutive retained samples around a frozen phase share
/// (nearly) one t value: the pre- and post-jump states.
PhysicalTrajectory recover_physical(const Trajectory& traj, double theta = 0.5);

/// State at physical time t: linear interpolation between the retained
/// samples bracketing t, clamped to the ends of the grid.
Vec sample_at_time(const PhysicalTrajectory& traj, double t);

/// Exact piecewise-parabolic bouncing ball: height and velocity at time t for
/// drop height q0 >= 0, initial velocity v0, restitution gamma and gravity g.
/// Refuses horizons needing more than 10000 impacts.
std::pair<double, double> analytic_bouncing_ball(double q0, double v0, double gamma, double g, double t);

/// tau_f = t_f + n_jumps * tau_jump: pseudo-time budget covering the frozen
/// restitution phases.
double required_pseudo_time(double t_f, int n_jumps, double tau_jump);

struct ConvergenceCell {
  Scheme scheme;
  long m_evals = 0;
  double h = 0.0;
  double error = 0.0;
};

struct ConvergenceStudy {
  std::vector<ConvergenceCell> cells;
  std::vector<std::pair<Scheme, double>> fitted_orders;  // least-squares slope of log E over log M

  double order_of(Scheme s) const;
};

using Oracle = std::function<Vec(double t)>;

/// Terminal-error study E = |x_exact(t_f) - x_recovered(t_f)|_2 over the
/// number of field evaluations M (1 per Euler step, 4 per RK4 step). M must
/// be divisible by the evaluations per step. Cells may run in parallel,
/// capped by TIMEFREEZE_THREADS; results are deterministic either way.
ConvergenceStudy convergence_study(const TimeFrozenSystem& sys, const Vec& y0, const Oracle& oracle, double t_f,
                                   double tau_f, const std::vector<Scheme>& schemes, const std::vector<long>& m_list);

int evals_per_step(Scheme s);

}  // namespace timefreeze
