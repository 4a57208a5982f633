#include "timefreeze/ocp.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

namespace timefreeze {

namespace {

void validate_assembled(const TimeFrozenSystem& sys) {
  const int nc = sys.n_constraints();
  if (static_cast<int>(sys.aux_params.size()) != nc)
    throw std::invalid_argument("system is missing auxiliary parameters; build it with assemble_time_frozen");
  for (int i = 0; i < nc; ++i) {
    const auto& p = sys.aux_params[i];
    const double c_ref = compute_damping(p.k, p.gamma);
    const double tau_ref = compute_tau_jump(p.k, p.gamma);
    if (std::abs(p.c - c_ref) > 1e-12 * std::max(1.0, std::abs(c_ref)) ||
        std::abs(p.tau_jump - tau_ref) > 1e-12 * std::max(1.0, tau_ref) || p.gamma != sys.base.gamma)
      throw std::invalid_argument("auxiliary parameters are inconsistent; build the system with assemble_time_frozen");
  }
  for (int i = 0; i < nc; ++i)
    for (int j = i + 1; j < nc; ++j)
      if (std::abs(dot(sys.base.constraints[i].normal, sys.base.constraints[j].normal)) > 1e-10)
        throw std::invalid_argument("constraints are not orthogonal; build the system with assemble_time_frozen");
}

}  // namespace

TranscribedNlp transcribe(const OcpDefinition& ocp) {
  const TimeFrozenSystem& sys = ocp.sys;
  validate_assembled(sys);

  const int n_y = sys.n_y();
  const int n_c = sys.n_constraints();
  const int n_u = sys.n_u();
  const int n_pos = sys.n_x() / 2;

  if (static_cast<int>(ocp.y0.size()) != n_y) throw std::invalid_argument("y0 dimension must be n_x + 1");
  if (ocp.n_elements < 1) throw std::invalid_argument("need at least one finite element");
  const int n_ctrl = ocp.n_ctrl > 0 ? ocp.n_ctrl : ocp.n_elements;
  if (ocp.n_elements % n_ctrl != 0) throw std::invalid_argument("N_ctrl must divide N");
  if (!(ocp.rho >= 0.0)) throw std::invalid_argument("terminal penalty rho must be nonnegative");
  if (!(ocp.w_max > 1.0)) throw std::invalid_argument("w_max must exceed 1");
  if (static_cast<int>(ocp.u_lower.size()) != n_u || static_cast<int>(ocp.u_upper.size()) != n_u)
    throw std::invalid_argument("control bounds must match the control dimension");
  for (int j = 0; j < n_u; ++j)
    if (!std::isfinite(ocp.u_lower[j]) || !std::isfinite(ocp.u_upper[j]) || ocp.u_lower[j] > ocp.u_upper[j])
      throw std::invalid_argument("control bounds must be finite boxes");
  // The terminal penalty acts on the leading q_target.size() state components
  // (the position block of a mechanical state).
  const int q_dim = static_cast<int>(ocp.q_target.size());
  if (q_dim < 1 || q_dim > sys.n_x()) throw std::invalid_argument("target dimension must fit the state");

  TranscribedNlp out;
  out.ocp = ocp;
  out.ocp.n_ctrl = n_ctrl;
  out.layout = {ocp.n_elements + 1, n_ctrl, n_y, n_c, n_u};
  out.h = 1.0 / ocp.n_elements;

  const NlpLayout& L = out.layout;
  const int N = ocp.n_elements;
  const double h = out.h;

  // Bounds: states free, alpha in [0,1], lambdas >= 0, u box, w box.
  out.bounds.lower.assign(L.num_vars(), -kInf);
  out.bounds.upper.assign(L.num_vars(), kInf);
  for (int n = 0; n <= N; ++n)
    for (int c = 0; c < n_c; ++c) {
      out.bounds.lower[L.alpha_index(n, c)] = 0.0;
      out.bounds.upper[L.alpha_index(n, c)] = 1.0;
      out.bounds.lower[L.lambda0_index(n, c)] = 0.0;
      out.bounds.lower[L.lambda1_index(n, c)] = 0.0;
    }
  for (int k = 0; k < n_ctrl; ++k)
    for (int j = 0; j < n_u; ++j) {
      out.bounds.lower[L.u_start(k) + j] = ocp.u_lower[j];
      out.bounds.upper[L.u_start(k) + j] = ocp.u_upper[j];
    }
  out.bounds.lower[L.w_index()] = 1.0 / ocp.w_max;
  out.bounds.upper[L.w_index()] = ocp.w_max;

  // Initial condition block.
  {
    NlpBlock block;
    for (int i = 0; i < n_y; ++i) block.vars.push_back(L.y_start(0) + i);
    Vec y0 = ocp.y0;
    block.fn = VectorFunc::make(n_y, n_y, [y0, n_y](auto x, auto outp) {
      for (int i = 0; i < n_y; ++i) outp[i] = x[i] - y0[i];
    });
    out.structure.equality_rows.push_back(std::move(block));
  }

  // Implicit-Euler defects: y_{n+1} - y_n - h w F(y_{n+1}, u, alpha_{n+1}).
  for (int n = 0; n < N; ++n) {
    NlpBlock block;
    for (int i = 0; i < n_y; ++i) block.vars.push_back(L.y_start(n) + i);
    for (int i = 0; i < n_y; ++i) block.vars.push_back(L.y_start(n + 1) + i);
    for (int c = 0; c < n_c; ++c) block.vars.push_back(L.alpha_index(n + 1, c));
    const int interval = L.interval_of_step(n);
    for (int j = 0; j < n_u; ++j) block.vars.push_back(L.u_start(interval) + j);
    block.vars.push_back(L.w_index());
    TimeFrozenSystem sys_copy = sys;
    block.fn = VectorFunc::make(static_cast<int>(block.vars.size()), n_y,
                                [sys_copy, n_y, n_c, n_u, h](auto x, auto outp) {
                                  using T = std::remove_cvref_t<decltype(outp[0])>;
                                  const auto y_prev = x.subspan(0, n_y);
                                  const auto y_next = x.subspan(n_y, n_y);
                                  const auto alpha = x.subspan(2 * n_y, n_c);
                                  const auto u = x.subspan(2 * n_y + n_c, n_u);
                                  const T w = x[2 * n_y + n_c + n_u];
                                  std::vector<T> f(n_y);
                                  eval_rhs_with_alpha<T>(sys_copy, y_next, u, alpha, f);
                                  for (int i = 0; i < n_y; ++i)
                                    outp[i] = y_next[i] - y_prev[i] - h * w * f[i];
                                });
    out.structure.equality_rows.push_back(std::move(block));
  }

  // LP stationarity per node and constraint: psi_i(q_n) - lambda1 + lambda0.
  for (int n = 0; n <= N; ++n)
    for (int c = 0; c < n_c; ++c) {
      NlpBlock block;
      for (int i = 0; i < n_pos; ++i) block.vars.push_back(L.y_start(n) + i);
      block.vars.push_back(L.lambda0_index(n, c));
      block.vars.push_back(L.lambda1_index(n, c));
      AffineConstraint con = sys.base.constraints[c];
      block.fn = VectorFunc::make(n_pos + 2, 1, [con, n_pos](auto x, auto outp) {
        outp[0] = con.psi(x.subspan(0, n_pos)) - x[n_pos + 1] + x[n_pos];
      });
      out.structure.equality_rows.push_back(std::move(block));
    }

  // Objective: t(1) + rho |q(1) - q_target|^2.
  {
    NlpBlock block;
    for (int i = 0; i < q_dim; ++i) block.vars.push_back(L.y_start(N) + i);
    block.vars.push_back(L.clock_index(N));
    Vec target = ocp.q_target;
    const double rho = ocp.rho;
    block.fn = VectorFunc::make(q_dim + 1, 1, [target, rho, q_dim](auto x, auto outp) {
      using T = std::remove_cvref_t<decltype(outp[0])>;
      T dist = 0.0;
      for (int i = 0; i < q_dim; ++i) {
        const T d = x[i] - target[i];
        dist += d * d;
      }
      outp[0] = x[q_dim] + rho * dist;
    });
    out.structure.objective_terms.push_back(std::move(block));
  }

  // Complementarity pairs (alpha, lambda0) and (1 - alpha, lambda1).
  for (int n = 0; n <= N; ++n)
    for (int c = 0; c < n_c; ++c) {
      out.pairs.push_back({L.alpha_index(n, c), L.lambda0_index(n, c), false});
      out.pairs.push_back({L.alpha_index(n, c), L.lambda1_index(n, c), true});
    }

  return out;
}

std::string TranscribedNlp::describe() const {
  const NlpLayout& L = layout;
  std::ostringstream os;
  os << "{\"nodes\":" << L.n_nodes << ",\"n_y\":" << L.n_y << ",\"n_c\":" << L.n_c << ",\"n_u\":" << L.n_u
     << ",\"n_ctrl\":" << L.n_ctrl << ",\"h\":" << h << ",\"num_vars\":" << L.num_vars()
     << ",\"layout\":\"per node [y(" << L.n_y << ") then (alpha,lambda0,lambda1) x " << L.n_c
     << "], controls u(" << L.n_u << ") x " << L.n_ctrl << ", w last\""
     << ",\"w_index\":" << L.w_index() << ",\"pairs\":" << pairs.size() << "}";
  return os.str();
}

SmoothNlp penalize(const TranscribedNlp& nlp, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("penalty parameter mu must be positive");
  NlpStructure st = nlp.structure;
  // One penalty term per node-constraint algebraic triple.
  for (size_t p = 0; p + 1 < nlp.pairs.size(); p += 2) {
    const auto& p0 = nlp.pairs[p];      // (alpha, lambda0)
    const auto& p1 = nlp.pairs[p + 1];  // (1 - alpha, lambda1)
    NlpBlock block;
    block.vars = {p0.alpha, p0.lambda, p1.lambda};
    block.fn = VectorFunc::make(3, 1, [mu](auto x, auto outp) {
      outp[0] = mu * (x[0] * x[1] + (1.0 - x[0]) * x[2]);
    });
    st.objective_terms.push_back(std::move(block));
  }
  return make_smooth_nlp(nlp.layout.num_vars(), std::move(st), nlp.bounds);
}

Vec initial_guess(const TranscribedNlp& nlp) {
  const NlpLayout& L = nlp.layout;
  const OcpDefinition& ocp = nlp.ocp;
  Vec x(L.num_vars(), 0.0);
  const double w_guess = 2.0;
  const int n_pos = ocp.sys.n_x() / 2;

  for (int n = 0; n < L.n_nodes; ++n) {
    for (int i = 0; i < L.n_y; ++i) x[L.y_start(n) + i] = ocp.y0[i];
    x[L.clock_index(n)] = ocp.y0[L.n_y - 1] + n * nlp.h * w_guess / 2.0;
  }
  for (int c = 0; c < L.n_c; ++c) {
    const double psi = ocp.sys.base.constraints[c].psi(std::span<const double>(ocp.y0).first(n_pos));
    for (int n = 0; n < L.n_nodes; ++n) {
      x[L.alpha_index(n, c)] = 1.0;
      x[L.lambda0_index(n, c)] = 0.0;
      x[L.lambda1_index(n, c)] = std::max(psi, 0.0);
    }
  }
  for (int k = 0; k < L.n_ctrl; ++k)
    for (int j = 0; j < L.n_u; ++j)
      x[L.u_start(k) + j] = std::clamp(0.0, ocp.u_lower[j], ocp.u_upper[j]);
  x[L.w_index()] = std::clamp(w_guess, 1.0 / ocp.w_max, ocp.w_max);
  return x;
}

double complementarity_residual(const TranscribedNlp& nlp, std::span<const double> x) {
  double res = 0.0;
  for (const auto& pair : nlp.pairs) {
    const double a = pair.one_minus ? 1.0 - x[pair.alpha] : x[pair.alpha];
    res = std::max(res, a * x[pair.lambda]);
  }
  return res;
}

SmoothNlp relax(const TranscribedNlp&, double) {
  throw std::logic_error(
      "complementarity relaxation (a' b <= sigma) is not implemented; use penalize() with a homotopy");
}

HomotopyResult solve_homotopy(const TranscribedNlp& nlp, const HomotopySchedule& schedule, Vec guess,
                              const SolveOptions& opts, const NlpSolver* solver) {
  if (!(schedule.mu0 > 0.0) || !(schedule.factor > 1.0) || schedule.count < 1)
    throw std::invalid_argument("homotopy schedule requires mu0 > 0, factor > 1, count >= 1");

  HomotopyResult result;
  Vec x = std::move(guess);
  // Without complementarity pairs every stage solves the same smooth NLP:
  // one solve suffices.
  const int count = nlp.pairs.empty() ? 1 : schedule.count;
  for (int stage = 0; stage < count; ++stage) {
    const double mu = schedule.mu0 * std::pow(schedule.factor, stage);
    SmoothNlp smooth = penalize(nlp, mu);
    SolveOptions stage_opts = opts;
    if (stage > 0) stage_opts.mu0 = std::min(opts.mu0, 1e-3);  // warm-started stages
    try {
      const InteriorPointSolver reference;
      const NlpSolver& backend = solver ? *solver : static_cast<const NlpSolver&>(reference);
      KktPoint kkt = backend.solve(smooth, x, stage_opts);
      x = kkt.x;
      const double comp = complementarity_residual(nlp, x);
      if (!result.stages.empty() && comp > result.stages.back().comp_residual + 1e-12)
        std::cerr << "timefreeze: complementarity residual increased across homotopy stages (" << comp << " after "
                  << result.stages.back().comp_residual << ")\n";
      result.stages.push_back({mu, kkt.objective, comp, kkt.iterations, true});
      result.kkt = std::move(kkt);
    } catch (const NlpError& err) {
      result.stages.push_back({mu, 0.0, 0.0, err.last.iterations, false});
      throw HomotopyError(stage, err.kind,
                          "homotopy stage " + std::to_string(stage) + " failed: " + err.what(), result.stages);
    }
  }
  result.x = x;
  result.comp_residual = complementarity_residual(nlp, result.x);
  return result;
}

OcpSolution extract_solution(const TranscribedNlp& nlp, std::span<const double> x) {
  const NlpLayout& L = nlp.layout;
  OcpSolution sol;
  sol.primal.assign(x.begin(), x.end());
  sol.w = x[L.w_index()];
  sol.t_final = x[L.clock_index(L.n_nodes - 1)];

  const int N = L.n_nodes - 1;
  sol.pseudo.scheme = Scheme::ImplicitEuler;
  sol.pseudo.h = nlp.h * sol.w;
  sol.pseudo.tau_grid.resize(L.n_nodes);
  sol.pseudo.states = Mat(L.n_nodes, L.n_y);
  if (L.n_u > 0) sol.pseudo.controls = Mat(N, L.n_u);
  for (int n = 0; n <= N; ++n) {
    sol.pseudo.tau_grid[n] = n * nlp.h * sol.w;
    for (int i = 0; i < L.n_y; ++i) sol.pseudo.states(n, i) = x[L.y_start(n) + i];
    if (n < N && sol.pseudo.controls) {
      const int k = L.interval_of_step(n);
      for (int j = 0; j < L.n_u; ++j) (*sol.pseudo.controls)(n, j) = x[L.u_start(k) + j];
    }
  }

  sol.trajectory = recover_physical(sol.pseudo);

  // Controls on the intervals where the clock advanced, stamped with the
  // physical interval start.
  for (int n = 0; n < N; ++n) {
    const double dclock = x[L.clock_index(n + 1)] - x[L.clock_index(n)];
    if (dclock < 0.5 * nlp.h * sol.w) continue;
    Vec u(L.n_u);
    const int k = L.interval_of_step(n);
    for (int j = 0; j < L.n_u; ++j) u[j] = x[L.u_start(k) + j];
    sol.controls.emplace_back(x[L.clock_index(n)], std::move(u));
  }

  const int q_dim = static_cast<int>(nlp.ocp.q_target.size());
  double dist = 0.0;
  for (int i = 0; i < q_dim; ++i) {
    const double d = x[L.y_start(N) + i] - nlp.ocp.q_target[i];
    dist += d * d;
  }
  sol.objective = sol.t_final + nlp.ocp.rho * dist;
  return sol;
}

}  // namespace timefreeze
