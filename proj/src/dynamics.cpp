#include "timefreeze/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace timefreeze {

namespace {
constexpr double kOrthogonalityTol = 1e-10;

void check_damping_domain(double k, double gamma) {
  if (!(k > 0.0)) throw std::domain_error("auxiliary stiffness k must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::domain_error("restitution coefficient gamma must lie in (0, 1]");
}
}  // namespace

AffineConstraint make_constraint(Vec normal, double offset) {
  const double nrm = norm2(normal);
  if (!(nrm > 0.0)) throw std::invalid_argument("constraint normal must be nonzero");
  for (double& v : normal) v /= nrm;
  return {std::move(normal), offset / nrm};
}

double compute_damping(double k, double gamma) {
  check_damping_domain(k, gamma);
  if (gamma == 1.0) return 0.0;
  const double lg = std::log(gamma);
  return 2.0 * std::abs(lg) * std::sqrt(k / (lg * lg + std::numbers::pi * std::numbers::pi));
}

double compute_tau_jump(double k, double gamma) {
  check_damping_domain(k, gamma);
  const double lg = std::log(gamma);
  return std::sqrt((std::numbers::pi * std::numbers::pi + lg * lg) / k);
}

AuxiliaryParams make_auxiliary_params(double k, double gamma) {
  return {k, compute_damping(k, gamma), gamma, compute_tau_jump(k, gamma)};
}

StateJumpSystem make_state_jump_system(int n_x, int n_u, FieldFunc f, std::vector<AffineConstraint> constraints,
                                       double gamma) {
  if (n_x <= 0) throw std::invalid_argument("state dimension must be positive");
  if (n_u < 0) throw std::invalid_argument("control dimension must be nonnegative");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw std::invalid_argument("restitution coefficient gamma must lie in (0, 1]");
  if (!constraints.empty()) {
    if (n_x % 2 != 0)
      throw std::invalid_argument("constrained systems need an even state dimension (positions over velocities)");
    for (const auto& c : constraints)
      if (static_cast<int>(c.normal.size()) != n_x / 2)
        throw std::invalid_argument("constraint normal dimension must equal n_x / 2");
  }
  return {n_x, n_u, std::move(f), std::move(constraints), gamma};
}

StepValue step(double z, StepMode mode, double smoothing_eps) {
  switch (mode) {
    case StepMode::Sign: {
      const double s = z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0);
      return {(1.0 + s) / 2.0, std::nullopt};
    }
    case StepMode::SetValuedMidpoint: {
      if (z > 0.0) return {1.0, std::nullopt};
      if (z < 0.0) return {0.0, std::nullopt};
      return {0.5, std::nullopt};  // midpoint selection from [0, 1]
    }
    case StepMode::Smoothed: {
      if (!(smoothing_eps > 0.0)) throw std::invalid_argument("smoothed step mode requires eps > 0");
      return {1.0 / (1.0 + std::exp(-z / smoothing_eps)), std::nullopt};
    }
    case StepMode::LpKkt: {
      const double alpha = z > 0.0 ? 1.0 : (z < 0.0 ? 0.0 : 0.5);
      return {alpha, std::make_pair(std::max(-z, 0.0), std::max(z, 0.0))};
    }
  }
  throw std::logic_error("unknown step mode");
}

std::array<double, 7> lp_kkt_residual(double z, double alpha, double lambda0, double lambda1) {
  return {
      z - (lambda1 - lambda0),     // stationarity of -z w over [0, 1]
      std::max(-alpha, 0.0),       // alpha >= 0
      std::max(alpha - 1.0, 0.0),  // alpha <= 1
      std::max(-lambda0, 0.0),     // lambda0 >= 0
      std::max(-lambda1, 0.0),     // lambda1 >= 0
      alpha * lambda0,
      (1.0 - alpha) * lambda1,
  };
}

AuxiliaryField build_auxiliary(const AffineConstraint& constraint, const AuxiliaryParams& params, int n_x) {
  if (n_x % 2 != 0) throw std::invalid_argument("auxiliary field needs an even state dimension");
  if (static_cast<int>(constraint.normal.size()) != n_x / 2)
    throw std::invalid_argument("constraint normal dimension must equal n_x / 2");
  return {constraint, params, n_x};
}

namespace {
TimeFrozenSystem assemble(StateJumpSystem sys, const Vec& ks, StepMode mode) {
  const size_t nc = sys.constraints.size();
  if (ks.size() != nc) throw std::invalid_argument("need one stiffness per constraint");
  for (size_t i = 0; i < nc; ++i)
    for (size_t j = i + 1; j < nc; ++j) {
      const double ip = dot(sys.constraints[i].normal, sys.constraints[j].normal);
      if (std::abs(ip) > kOrthogonalityTol)
        throw std::invalid_argument("constraints " + std::to_string(i) + " and " + std::to_string(j) +
                                    " are not orthogonal; the summed corner dynamics would be invalid");
    }
  TimeFrozenSystem tf;
  tf.aux_params.reserve(nc);
  for (size_t i = 0; i < nc; ++i) tf.aux_params.push_back(make_auxiliary_params(ks[i], sys.gamma));
  tf.base = std::move(sys);
  tf.step_mode = mode;
  return tf;
}
}  // namespace

TimeFrozenSystem assemble_time_frozen(StateJumpSystem sys, double k, StepMode mode) {
  const Vec ks(sys.constraints.size(), k);
  return assemble(std::move(sys), ks, mode);
}

TimeFrozenSystem assemble_time_frozen(StateJumpSystem sys, const Vec& k_per_constraint, StepMode mode) {
  return assemble(std::move(sys), k_per_constraint, mode);
}

Vec eval_step_values(const TimeFrozenSystem& sys, std::span<const double> y) {
  const int m = sys.n_x() / 2;
  Vec alpha(sys.n_constraints());
  for (int i = 0; i < sys.n_constraints(); ++i) {
    const double z = sys.base.constraints[i].psi(y.first(m));
    alpha[i] = step(z, sys.step_mode, sys.smoothing_eps).value;
  }
  return alpha;
}

Vec eval_rhs(const TimeFrozenSystem& sys, std::span<const double> y, std::span<const double> u) {
  if (static_cast<int>(y.size()) != sys.n_y()) throw std::invalid_argument("state dimension mismatch");
  if (static_cast<int>(u.size()) != sys.n_u()) throw std::invalid_argument("control dimension mismatch");
  const Vec alpha = eval_step_values(sys, y);
  Vec ydot(sys.n_y());
  eval_rhs_with_alpha<double>(sys, y, u, alpha, ydot);
  return ydot;
}

namespace {
// One classic RK4 step of the auxiliary field.
Vec aux_rk4_step(const AuxiliaryField& field, const Vec& x, double dt) {
  const int n = field.n_x;
  Vec k1 = field.eval(x), x2(n), k2(n), x3(n), k3(n), x4(n), k4(n), out(n);
  for (int i = 0; i < n; ++i) x2[i] = x[i] + 0.5 * dt * k1[i];
  k2 = field.eval(x2);
  for (int i = 0; i < n; ++i) x3[i] = x[i] + 0.5 * dt * k2[i];
  k3 = field.eval(x3);
  for (int i = 0; i < n; ++i) x4[i] = x[i] + dt * k3[i];
  k4 = field.eval(x4);
  for (int i = 0; i < n; ++i) out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}
}  // namespace

Assumption1Report verify_assumption1(const AuxiliaryField& field, std::span<const double> x0, double fine_dt) {
  if (!(fine_dt > 0.0)) throw std::invalid_argument("fine_dt must be positive");
  const int m = field.n_x / 2;
  if (static_cast<int>(x0.size()) != field.n_x) throw std::invalid_argument("state dimension mismatch");

  const double psi0 = field.constraint.psi(x0.first(m));
  double nu0 = 0.0;
  for (int i = 0; i < m; ++i) nu0 += field.constraint.normal[i] * x0[m + i];
  if (std::abs(psi0) > 1e-9) throw std::invalid_argument("x0 must lie on the switching manifold (psi = 0)");
  if (!(nu0 < 0.0)) throw std::invalid_argument("x0 must approach the constraint (normal velocity < 0)");

  const double tau_limit = 10.0 * field.params.tau_jump;
  Vec x(x0.begin(), x0.end());
  double tau = 0.0;
  bool went_negative = false;

  auto psi_of = [&](const Vec& s) { return field.constraint.psi(std::span<const double>(s).first(m)); };
  auto normal_velocity = [&](const Vec& s) {
    double nu = 0.0;
    for (int i = 0; i < m; ++i) nu += field.constraint.normal[i] * s[m + i];
    return nu;
  };

  while (tau < tau_limit) {
    const Vec x_next = aux_rk4_step(field, x, fine_dt);
    const double psi_next = psi_of(x_next);
    if (psi_next < 0.0) {
      went_negative = true;
      x = x_next;
      tau += fine_dt;
      continue;
    }
    // First sample at psi >= 0. If the field never entered V-, it exits on
    // the wrong side or slides; report it without pretending precision.
    if (!went_negative) return {tau + fine_dt, x_next, -normal_velocity(x_next) / nu0, false};
    // Localize the return by bisecting the substep length inside this step.
    double lo = 0.0, hi = fine_dt;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (psi_of(aux_rk4_step(field, x, mid)) < 0.0)
        lo = mid;
      else
        hi = mid;
    }
    const Vec x_ret = aux_rk4_step(field, x, hi);
    return {tau + hi, x_ret, -normal_velocity(x_ret) / nu0, true};
  }
  throw std::runtime_error("auxiliary field did not return to the switching manifold within 10 tau_jump");
}

}  // namespace timefreeze
