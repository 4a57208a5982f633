#pragma once

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "timefreeze/ad.hpp"
#include "timefreeze/functions.hpp"
#include "timefreeze/linalg.hpp"

namespace timefreeze {

/// Affine unilateral constraint psi(q) = normal . q + offset >= 0 on the
/// position half of a mechanical state. Normalized on construction so the
/// spring-damper parameters mean the same thing for every constraint.
struct AffineConstraint {
  Vec normal;
  double offset = 0.0;

  template <class T>
  T psi(std::span<const T> position) const {
    T s = offset;
    for (size_t i = 0; i < normal.size(); ++i) s += normal[i] * position[i];
    return s;
  }
};

/// Scales (normal, offset) by 1/|normal|. Throws on a zero normal.
AffineConstraint make_constraint(Vec normal, double offset);

/// Parameters of one constraint's restitution spring-damper.
struct AuxiliaryParams {
  double k = 0.0;
  double c = 0.0;
  double gamma = 1.0;
  double tau_jump = 0.0;
};

/// c = 2 |ln(gamma)| sqrt(k / (ln(gamma)^2 + pi^2)); zero for gamma = 1.
double compute_damping(double k, double gamma);

/// Duration of the restitution phase: sqrt((pi^2 + ln(gamma)^2) / k).
double compute_tau_jump(double k, double gamma);

/// Bundles k with the derived damping and phase length.
AuxiliaryParams make_auxiliary_params(double k, double gamma);

/// Original system with state jumps: smooth field on the feasible side plus
/// Newton restitution (normal velocity scaled by -gamma) at each constraint.
struct StateJumpSystem {
  int n_x = 0;
  int n_u = 0;
  FieldFunc f;
  std::vector<AffineConstraint> constraints;
  double gamma = 1.0;
};

/// Validates dimensions, gamma in (0, 1], and that constrained systems have
/// an even state dimension (positions stacked over velocities).
StateJumpSystem make_state_jump_system(int n_x, int n_u, FieldFunc f, std::vector<AffineConstraint> constraints,
                                       double gamma);

enum class StepMode { Sign, SetValuedMidpoint, Smoothed, LpKkt };

/// One evaluation of the set-valued step function; LpKkt mode also reports
/// the multipliers of the parametric LP  argmin_w -z w  s.t.  0 <= w <= 1.
struct StepValue {
  double value = 0.0;
  std::optional<std::pair<double, double>> multipliers;  // (lambda0, lambda1)
};

StepValue step(double z, StepMode mode, double smoothing_eps = 0.0);

/// Residuals of the LP KKT system: stationarity z - (lambda1 - lambda0),
/// the four nonnegativity violations of (alpha, 1-alpha, lambda0, lambda1),
/// and the two complementarity products. All zero iff (alpha, lambda0,
/// lambda1) solves the LP for this z.
std::array<double, 7> lp_kkt_residual(double z, double alpha, double lambda0, double lambda1);

/// Auxiliary spring-damper field for one constraint, acting on the normal
/// coordinates only: with eta = n.q, nu = n.v it flows (eta' , nu') =
/// (nu, -k eta - c nu) and vanishes on the orthogonal complement.
struct AuxiliaryField {
  AffineConstraint constraint;
  AuxiliaryParams params;
  int n_x = 0;

  template <class T>
  void eval(std::span<const T> x, std::span<T> out) const {
    const int m = n_x / 2;
    T eta = constraint.psi(x.first(m));
    T nu = 0.0;
    for (int i = 0; i < m; ++i) nu += constraint.normal[i] * x[m + i];
    const T spring = -params.k * eta - params.c * nu;
    for (int i = 0; i < m; ++i) {
      out[i] = constraint.normal[i] * nu;
      out[m + i] = constraint.normal[i] * spring;
    }
  }

  Vec eval(std::span<const double> x) const {
    Vec out(n_x);
    eval<double>(x, out);
    return out;
  }
};

AuxiliaryField build_auxiliary(const AffineConstraint& constraint, const AuxiliaryParams& params, int n_x);

/// Time-frozen reformulation: state y = (x, t) with the clock t running at
/// rate 1 in free flight and frozen while any auxiliary system is active.
struct TimeFrozenSystem {
  StateJumpSystem base;
  std::vector<AuxiliaryParams> aux_params;
  StepMode step_mode = StepMode::Sign;
  double smoothing_eps = 1e-3;

  int n_x() const { return base.n_x; }
  int n_u() const { return base.n_u; }
  int n_y() const { return base.n_x + 1; }
  int n_constraints() const { return static_cast<int>(base.constraints.size()); }

  AuxiliaryField auxiliary(int i) const {
    return build_auxiliary(base.constraints[i], aux_params[i], base.n_x);
  }
};

/// Builds the time-frozen system, deriving damping and phase length per
/// constraint. Constraints must be pairwise orthogonal (within 1e-10); the
/// sum-of-fields corner rule is only valid in that case.
TimeFrozenSystem assemble_time_frozen(StateJumpSystem sys, double k, StepMode mode = StepMode::Sign);
TimeFrozenSystem assemble_time_frozen(StateJumpSystem sys, const Vec& k_per_constraint,
                                      StepMode mode = StepMode::Sign);

/// Filippov combination with given step values:
///   ydot = prod_i alpha_i * (f(x,u), 1) + sum_i (1 - alpha_i) * (phi_i(x), 0).
template <class T>
void eval_rhs_with_alpha(const TimeFrozenSystem& sys, std::span<const T> y, std::span<const T> u,
                         std::span<const T> alpha, std::span<T> ydot) {
  const int nx = sys.n_x();
  const auto x = y.first(nx);

  T weight = 1.0;
  for (const T& a : alpha) weight *= a;

  std::vector<T> fx(nx);
  sys.base.f(x, u, std::span<T>(fx));
  for (int i = 0; i < nx; ++i) ydot[i] = weight * fx[i];
  ydot[nx] = weight;  // clock rate

  std::vector<T> phi(nx);
  for (int c = 0; c < sys.n_constraints(); ++c) {
    sys.auxiliary(c).eval(x, std::span<T>(phi));
    const T w = 1.0 - alpha[c];
    for (int i = 0; i < nx; ++i) ydot[i] += w * phi[i];
  }
}

/// Evaluates the step function of every constraint at the current state.
Vec eval_step_values(const TimeFrozenSystem& sys, std::span<const double> y);

/// Simulation right-hand side: alphas from the system's step mode.
Vec eval_rhs(const TimeFrozenSystem& sys, std::span<const double> y, std::span<const double> u);

/// Empirical check of the auxiliary-dynamics assumption: integrate phi from a
/// touching state with inward velocity, find the first return to psi = 0 and
/// compare against the restitution law.
struct Assumption1Report {
  double tau_return = 0.0;
  Vec x_return;
  double restitution_ratio = 0.0;
  bool stayed_in_vminus = false;
};

Assumption1Report verify_assumption1(const AuxiliaryField& field, std::span<const double> x0, double fine_dt);

}  // namespace timefreeze
