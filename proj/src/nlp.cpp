#include "timefreeze/nlp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <utility>

#include "timefreeze/ad.hpp"

namespace timefreeze {

namespace {

template <class T>
std::vector<T> gather(std::span<const T> x, const std::vector<int>& idx) {
  std::vector<T> out(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) out[i] = x[idx[i]];
  return out;
}

VectorFunc synthesize_objective(int n, const NlpStructure& st) {
  return VectorFunc::make(n, 1, [st](auto x, auto out) {
    using T = std::remove_cvref_t<decltype(out[0])>;
    T acc = 0.0;
    std::vector<T> local, val(1);
    for (const auto& block : st.objective_terms) {
      local.resize(block.vars.size());
      for (size_t i = 0; i < block.vars.size(); ++i) local[i] = x[block.vars[i]];
      val.resize(block.fn.n_out());
      block.fn(std::span<const T>(local), std::span<T>(val));
      acc += val[0];
    }
    out[0] = acc;
  });
}

VectorFunc synthesize_equalities(int n, int m, const NlpStructure& st) {
  return VectorFunc::make(n, m, [st](auto x, auto out) {
    using T = std::remove_cvref_t<decltype(out[0])>;
    std::vector<T> local, val;
    size_t r = 0;
    for (const auto& block : st.equality_rows) {
      local.resize(block.vars.size());
      for (size_t i = 0; i < block.vars.size(); ++i) local[i] = x[block.vars[i]];
      val.assign(block.fn.n_out(), T(0.0));
      block.fn(std::span<const T>(local), std::span<T>(val));
      for (int k = 0; k < block.fn.n_out(); ++k) out[r++] = val[k];
    }
  });
}

}  // namespace

SmoothNlp make_smooth_nlp(int n, VectorFunc objective, VectorFunc equalities, VarBounds bounds) {
  SmoothNlp nlp;
  nlp.n = n;
  nlp.m = equalities ? equalities.n_out() : 0;
  nlp.objective = std::move(objective);
  nlp.equalities = std::move(equalities);
  if (bounds.lower.empty()) bounds.lower.assign(n, -kInf);
  if (bounds.upper.empty()) bounds.upper.assign(n, kInf);
  nlp.bounds = std::move(bounds);
  if (static_cast<int>(nlp.bounds.lower.size()) != n || static_cast<int>(nlp.bounds.upper.size()) != n)
    throw std::invalid_argument("bounds dimension mismatch");
  for (int i = 0; i < n; ++i)
    if (nlp.bounds.lower[i] > nlp.bounds.upper[i]) throw std::invalid_argument("lower bound exceeds upper bound");
  return nlp;
}

SmoothNlp make_smooth_nlp(int n, NlpStructure structure, VarBounds bounds) {
  int m = 0;
  for (const auto& b : structure.equality_rows) m += b.fn.n_out();
  SmoothNlp nlp = make_smooth_nlp(n, synthesize_objective(n, structure), synthesize_equalities(n, m, structure),
                                  std::move(bounds));
  nlp.structure = std::move(structure);
  return nlp;
}

// ---------------------------------------------------------------------------
// Derivative evaluation: structured blocks when present, whole-vector duals
// otherwise. Jacobian and Hessian values are produced in a fixed emission
// order matching the symbolic pattern.

namespace {

struct Triplet {
  int row, col;
};

class Evaluator {
public:
  Evaluator(const SmoothNlp& nlp, bool gauss_newton) : nlp_(nlp), gn_(gauss_newton) {
    if (nlp_.structure) {
      for (const auto& block : nlp_.structure->equality_rows) {
        if (static_cast<int>(block.vars.size()) > ad::kBlockCap)
          throw std::invalid_argument("NLP block exceeds AD capacity");
        for (int r = 0; r < block.fn.n_out(); ++r)
          for (int v : block.vars) jac_.push_back({jac_row_count_ + r, v});
        jac_row_count_ += block.fn.n_out();
      }
      auto clique = [&](const NlpBlock& block) {
        const int k = static_cast<int>(block.vars.size());
        for (int i = 0; i < k; ++i)
          for (int j = 0; j <= i; ++j) {
            const int a = block.vars[i], b = block.vars[j];
            hess_.push_back({std::max(a, b), std::min(a, b)});
          }
      };
      for (const auto& block : nlp_.structure->objective_terms) {
        if (static_cast<int>(block.vars.size()) > ad::kBlockCap)
          throw std::invalid_argument("NLP block exceeds AD capacity");
        clique(block);
      }
      if (!gn_)
        for (const auto& block : nlp_.structure->equality_rows) clique(block);
    } else {
      for (int r = 0; r < nlp_.m; ++r)
        for (int c = 0; c < nlp_.n; ++c) jac_.push_back({r, c});
      for (int i = 0; i < nlp_.n; ++i)
        for (int j = 0; j <= i; ++j) hess_.push_back({i, j});
    }
  }

  const std::vector<Triplet>& jac_triplets() const { return jac_; }
  const std::vector<Triplet>& hess_triplets() const { return hess_; }

  double objective(const Vec& x) const {
    double out = 0.0;
    nlp_.objective(std::span<const double>(x), std::span<double>(&out, 1));
    return out;
  }

  Vec equalities(const Vec& x) const {
    Vec g(nlp_.m);
    if (nlp_.m > 0) nlp_.equalities(std::span<const double>(x), std::span<double>(g));
    return g;
  }

  Vec gradient(const Vec& x) const {
    Vec grad(nlp_.n, 0.0);
    if (nlp_.structure) {
      std::vector<ad::Grad> local, val;
      for (const auto& block : nlp_.structure->objective_terms) {
        const int k = static_cast<int>(block.vars.size());
        local.resize(k);
        for (int i = 0; i < k; ++i) local[i] = ad::Grad::seed(x[block.vars[i]], k, i);
        val.assign(1, ad::Grad(0.0));
        block.fn(std::span<const ad::Grad>(local), std::span<ad::Grad>(val));
        for (int i = 0; i < k; ++i) grad[block.vars[i]] += val[0].d[i];
      }
    } else {
      AdEval e = ad_eval(nlp_.objective, x);
      for (int i = 0; i < nlp_.n; ++i) grad[i] = e.jacobian(0, i);
    }
    return grad;
  }

  /// Jacobian values in emission order.
  void jacobian_values(const Vec& x, Vec& out) const {
    out.assign(jac_.size(), 0.0);
    size_t slot = 0;
    if (nlp_.structure) {
      std::vector<ad::Grad> local, val;
      for (const auto& block : nlp_.structure->equality_rows) {
        const int k = static_cast<int>(block.vars.size());
        local.resize(k);
        for (int i = 0; i < k; ++i) local[i] = ad::Grad::seed(x[block.vars[i]], k, i);
        val.assign(block.fn.n_out(), ad::Grad(0.0));
        block.fn(std::span<const ad::Grad>(local), std::span<ad::Grad>(val));
        for (int r = 0; r < block.fn.n_out(); ++r)
          for (int i = 0; i < k; ++i) out[slot++] = i < val[r].n ? val[r].d[i] : 0.0;
      }
    } else if (nlp_.m > 0) {
      AdEval e = ad_eval(nlp_.equalities, x);
      for (int r = 0; r < nlp_.m; ++r)
        for (int c = 0; c < nlp_.n; ++c) out[slot++] = e.jacobian(r, c);
    }
  }

  /// Lagrangian Hessian values (objective + nu' g) in emission order.
  void hessian_values(const Vec& x, const Vec& nu, Vec& out) const {
    out.assign(hess_.size(), 0.0);
    if (nlp_.structure) {
      size_t slot = 0;
      std::vector<ad::GradDir> local, val;
      std::vector<double> hcol;
      auto block_hessian = [&](const NlpBlock& block, const double* weights) {
        const int k = static_cast<int>(block.vars.size());
        Mat h(k, k);
        local.resize(k);
        for (int i = 0; i < k; ++i) {
          local[i].v = ad::Grad::seed(x[block.vars[i]], k, i);
          local[i].d = ad::Grad(0.0);
        }
        for (int j = 0; j < k; ++j) {
          local[j].d = ad::Grad(1.0);
          val.assign(block.fn.n_out(), ad::GradDir(0.0));
          block.fn(std::span<const ad::GradDir>(local), std::span<ad::GradDir>(val));
          for (int r = 0; r < block.fn.n_out(); ++r) {
            const double w = weights ? weights[r] : 1.0;
            if (w == 0.0) continue;
            for (int i = 0; i < val[r].d.n; ++i) h(i, j) += w * val[r].d.d[i];
          }
          local[j].d = ad::Grad(0.0);
        }
        for (int i = 0; i < k; ++i)
          for (int j = 0; j <= i; ++j) out[slot++] = h(i, j);
      };
      for (const auto& block : nlp_.structure->objective_terms) block_hessian(block, nullptr);
      if (!gn_) {
        int row = 0;
        for (const auto& block : nlp_.structure->equality_rows) {
          block_hessian(block, nu.data() + row);
          row += block.fn.n_out();
        }
      }
    } else {
      const int n = nlp_.n;
      auto obj = nlp_.objective;
      auto eqs = nlp_.equalities;
      const int m = nlp_.m;
      const bool gn = gn_;
      VectorFunc lagrangian = VectorFunc::make(n, 1, [obj, eqs, nu, m, gn](auto x_in, auto out_sp) {
        using T = std::remove_cvref_t<decltype(out_sp[0])>;
        T acc = 0.0;
        {
          std::vector<T> val(1);
          obj(x_in, std::span<T>(val));
          acc += val[0];
        }
        if (m > 0 && !gn) {
          std::vector<T> gv(m);
          eqs(x_in, std::span<T>(gv));
          for (int r = 0; r < m; ++r) acc += nu[r] * gv[r];
        }
        out_sp[0] = acc;
      });
      Mat h = ad_hessian(lagrangian, x);
      size_t slot = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) out[slot++] = h(i, j);
    }
  }

private:
  const SmoothNlp& nlp_;
  bool gn_;
  std::vector<Triplet> jac_;
  std::vector<Triplet> hess_;
  int jac_row_count_ = 0;
};

// ---------------------------------------------------------------------------
// Interior-point solver.

class IpSolver {
public:
  IpSolver(const SmoothNlp& nlp, const SolveOptions& opts)
      : nlp_(nlp), opts_(opts), n_(nlp.n), m_(nlp.m), eval_(nlp, opts.gauss_newton) {
    lo_ = nlp.bounds.lower;
    up_ = nlp.bounds.upper;
    has_lo_.resize(n_);
    has_up_.resize(n_);
    n_bounds_ = 0;
    for (int i = 0; i < n_; ++i) {
      has_lo_[i] = std::isfinite(lo_[i]);
      has_up_[i] = std::isfinite(up_[i]);
      n_bounds_ += has_lo_[i] + has_up_[i];
    }
    build_pattern();
  }

  KktPoint run(Vec x0);

private:
  void build_pattern() {
    pattern_.n = n_ + m_;
    for (const auto& t : eval_.hess_triplets()) pattern_.entries.emplace_back(t.row, t.col);
    for (int i = 0; i < n_; ++i) pattern_.entries.emplace_back(i, i);
    for (const auto& t : eval_.jac_triplets()) pattern_.entries.emplace_back(n_ + t.row, t.col);
    for (int r = 0; r < m_; ++r) pattern_.entries.emplace_back(n_ + r, n_ + r);
    solver_ = make_sym_solver(pattern_, opts_.prefer_banded);
    values_.assign(pattern_.entries.size(), 0.0);
    sigma_slot_ = eval_.hess_triplets().size();
    jac_slot_ = sigma_slot_ + n_;
    reg_slot_ = jac_slot_ + eval_.jac_triplets().size();
  }

  void clip_interior(Vec& x) const {
    for (int i = 0; i < n_; ++i) {
      if (has_lo_[i] && has_up_[i]) {
        const double width = up_[i] - lo_[i];
        const double clip = std::min(1e-2 * width, 1e-4);
        if (lo_[i] + clip > up_[i] - clip)
          x[i] = 0.5 * (lo_[i] + up_[i]);
        else
          x[i] = std::clamp(x[i], lo_[i] + clip, up_[i] - clip);
      } else if (has_lo_[i]) {
        x[i] = std::max(x[i], lo_[i] + 1e-4);
      } else if (has_up_[i]) {
        x[i] = std::min(x[i], up_[i] - 1e-4);
      }
    }
  }

  // Residual pieces at the current point; grad/g/jac values must be fresh.
  Vec dual_residual(const Vec& grad, const Vec& nu, const Vec& zl, const Vec& zu) const {
    Vec r = grad;
    const auto& jt = eval_.jac_triplets();
    for (size_t e = 0; e < jt.size(); ++e) r[jt[e].col] += jac_values_[e] * nu[jt[e].row];
    for (int i = 0; i < n_; ++i) r[i] += -zl[i] + zu[i];
    return r;
  }

  struct Errors {
    double stat, feas, comp;
    double overall() const { return std::max({stat, feas, comp}); }
  };

  Errors errors(const Vec& rstat, const Vec& g, const Vec& x, const Vec& zl, const Vec& zu, const Vec& nu,
                double mu) const {
    double z1 = 0.0, nu1 = 0.0;
    for (int i = 0; i < n_; ++i) z1 += zl[i] + zu[i];
    for (int r = 0; r < m_; ++r) nu1 += std::abs(nu[r]);
    const double sd = std::max(100.0, (nu1 + z1) / std::max(1, m_ + n_bounds_)) / 100.0;
    const double sc = std::max(100.0, z1 / std::max(1, n_bounds_)) / 100.0;
    double comp = 0.0;
    for (int i = 0; i < n_; ++i) {
      if (has_lo_[i]) comp = std::max(comp, std::abs((x[i] - lo_[i]) * zl[i] - mu));
      if (has_up_[i]) comp = std::max(comp, std::abs((up_[i] - x[i]) * zu[i] - mu));
    }
    return {norm_inf(rstat) / sd, norm_inf(g), comp / sc};
  }

  double barrier_value(const Vec& x, double f, double mu) const {
    double b = f;
    for (int i = 0; i < n_; ++i) {
      if (has_lo_[i]) b -= mu * std::log(x[i] - lo_[i]);
      if (has_up_[i]) b -= mu * std::log(up_[i] - x[i]);
    }
    return b;
  }

  KktPoint snapshot(const Vec& x, const Vec& nu, const Vec& zl, const Vec& zu, int iters, bool ok) {
    KktPoint p;
    p.x = x;
    p.nu = nu;
    p.z_lower = zl;
    p.z_upper = zu;
    p.objective = eval_.objective(x);
    const Vec g = eval_.equalities(x);
    const Vec grad = eval_.gradient(x);
    eval_.jacobian_values(x, jac_values_);
    const Vec rstat = dual_residual(grad, nu, zl, zu);
    const Errors e = errors(rstat, g, x, zl, zu, nu, 0.0);
    p.stationarity = e.stat;
    p.feasibility = e.feas;
    p.complementarity = e.comp;
    p.iterations = iters;
    p.converged = ok;
    return p;
  }

  const SmoothNlp& nlp_;
  SolveOptions opts_;
  int n_, m_;
  Evaluator eval_;
  Vec lo_, up_;
  std::vector<int> has_lo_, has_up_;
  int n_bounds_ = 0;

  SymPattern pattern_;
  std::unique_ptr<SymSolver> solver_;
  Vec values_;
  size_t sigma_slot_ = 0, jac_slot_ = 0, reg_slot_ = 0;
  Vec jac_values_;
};

KktPoint IpSolver::run(Vec x) {
  if (static_cast<int>(x.size()) != n_) throw std::invalid_argument("initial point dimension mismatch");
  clip_interior(x);

  const double mu_min = opts_.tol / 10.0;
  double mu = opts_.mu0;

  Vec nu(m_, 0.0);
  if (opts_.warm_nu && static_cast<int>(opts_.warm_nu->size()) == m_) nu = *opts_.warm_nu;
  Vec zl(n_, 0.0), zu(n_, 0.0);
  auto init_z = [&](double mu_init) {
    for (int i = 0; i < n_; ++i) {
      if (has_lo_[i]) zl[i] = std::clamp(mu_init / (x[i] - lo_[i]), 1e-6, 1e6);
      if (has_up_[i]) zu[i] = std::clamp(mu_init / (up_[i] - x[i]), 1e-6, 1e6);
    }
  };
  if (opts_.warm_z_lower && static_cast<int>(opts_.warm_z_lower->size()) == n_ && opts_.warm_z_upper &&
      static_cast<int>(opts_.warm_z_upper->size()) == n_) {
    for (int i = 0; i < n_; ++i) {
      zl[i] = has_lo_[i] ? std::max((*opts_.warm_z_lower)[i], 1e-12) : 0.0;
      zu[i] = has_up_[i] ? std::max((*opts_.warm_z_upper)[i], 1e-12) : 0.0;
    }
  } else {
    init_z(mu);
  }

  // Multiplier estimate for warm starts on small problems: helps the
  // "re-solve from a solution" case terminate immediately.
  Vec grad = eval_.gradient(x);
  Vec g = eval_.equalities(x);
  eval_.jacobian_values(x, jac_values_);
  if (!opts_.warm_nu && m_ > 0 && n_ + m_ <= 600) {
    // Least-squares nu from stationarity: (J J') nu = -J (grad - zl + zu).
    const auto& jt = eval_.jac_triplets();
    Mat jjt(m_, m_);
    Vec rhs(m_, 0.0);
    // Build dense J once (small problems only).
    Mat jd(m_, n_);
    for (size_t e = 0; e < jt.size(); ++e) jd(jt[e].row, jt[e].col) += jac_values_[e];
    for (int r = 0; r < m_; ++r) {
      for (int c = 0; c <= r; ++c) {
        double s = dot(jd.row(r), jd.row(c));
        jjt(r, c) = s;
        jjt(c, r) = s;
      }
      jjt(r, r) += 1e-12;
      double s = 0.0;
      for (int i = 0; i < n_; ++i) s += jd(r, i) * (grad[i] - zl[i] + zu[i]);
      rhs[r] = -s;
    }
    try {
      Vec est = lu_solve(std::move(jjt), std::move(rhs));
      const Vec r_old = dual_residual(grad, nu, zl, zu);
      const Vec r_new = dual_residual(grad, est, zl, zu);
      if (norm_inf(r_new) < norm_inf(r_old)) nu = std::move(est);
    } catch (const std::runtime_error&) {
      // Singular J J': keep nu as provided.
    }
  }

  double pen = 1.0;     // l1 merit penalty weight
  double delta_last = 0.0;
  int iter = 0;
  int acceptable_streak = 0;

  for (;;) {
    const Vec rstat = dual_residual(grad, nu, zl, zu);
    const Errors e0 = errors(rstat, g, x, zl, zu, nu, 0.0);
    if (e0.overall() <= opts_.tol) {
      KktPoint p = snapshot(x, nu, zl, zu, iter, true);
      return p;
    }
    // Plateau exit at the acceptable level, never with loose feasibility.
    if (e0.overall() <= opts_.acceptable_tol && e0.feas <= 1e-9) {
      if (++acceptable_streak >= 10) return snapshot(x, nu, zl, zu, iter, true);
    } else {
      acceptable_streak = 0;
    }
    if (iter >= opts_.max_iter)
      throw NlpError(NlpErrorKind::MaxIterations, "interior-point solver hit the iteration limit",
                     snapshot(x, nu, zl, zu, iter, false));

    // Drive the barrier parameter down once the scaled residuals allow it.
    for (;;) {
      const Errors emu = errors(rstat, g, x, zl, zu, nu, mu);
      if (emu.overall() <= 10.0 * mu && mu > mu_min) {
        mu = std::max(mu * opts_.mu_factor, mu_min);
        continue;
      }
      break;
    }

    // Assemble the reduced primal-dual system.
    Vec hvals;
    eval_.hessian_values(x, nu, hvals);
    std::copy(hvals.begin(), hvals.end(), values_.begin());
    Vec sigma(n_, 0.0);
    for (int i = 0; i < n_; ++i) {
      if (has_lo_[i]) sigma[i] += zl[i] / (x[i] - lo_[i]);
      if (has_up_[i]) sigma[i] += zu[i] / (up_[i] - x[i]);
    }
    std::copy(jac_values_.begin(), jac_values_.end(), values_.begin() + jac_slot_);

    const double delta_c = 1e-8;
    double delta = 0.0;
    bool factored = false;
    for (int attempt = 0; attempt < 64; ++attempt) {
      for (int i = 0; i < n_; ++i) values_[sigma_slot_ + i] = sigma[i] + delta;
      for (int r = 0; r < m_; ++r) values_[reg_slot_ + r] = -delta_c;
      const Inertia in = solver_->factor(values_);
      if (in.positive == n_ && in.negative == m_ && in.zero == 0) {
        factored = true;
        break;
      }
      delta = delta == 0.0 ? std::max(1e-8, delta_last / 3.0) : delta * 4.0;
      if (delta > 1e12) break;
    }
    if (!factored)
      throw NlpError(NlpErrorKind::SingularSystem, "KKT system could not be regularized to correct inertia",
                     snapshot(x, nu, zl, zu, iter, false));
    delta_last = delta;

    // The dual regularization -delta_c exists only to keep the permuted
    // factorization quasi-definite; refine the solve against the system
    // without it so it leaves no residual floor.
    auto solve_refined = [&](Vec rhs_in) {
      Vec sol = rhs_in;
      solver_->solve(sol);
      for (int round = 0; round < 2; ++round) {
        Vec resid = rhs_in;
        for (size_t t = 0; t < pattern_.entries.size(); ++t) {
          if (t >= reg_slot_) break;  // skip the -delta_c diagonal
          const auto [pi, pj] = pattern_.entries[t];
          resid[pi] -= values_[t] * sol[pj];
          if (pi != pj) resid[pj] -= values_[t] * sol[pi];
        }
        Vec corr = resid;
        solver_->solve(corr);
        for (size_t i = 0; i < sol.size(); ++i) sol[i] += corr[i];
      }
      return sol;
    };

    // Reduced right-hand side.
    Vec rhs(n_ + m_, 0.0);
    for (int i = 0; i < n_; ++i) {
      double v = grad[i];
      if (has_lo_[i]) v -= mu / (x[i] - lo_[i]);
      if (has_up_[i]) v += mu / (up_[i] - x[i]);
      rhs[i] = -v;
    }
    {
      const auto& jt = eval_.jac_triplets();
      for (size_t t = 0; t < jt.size(); ++t) rhs[jt[t].col] -= jac_values_[t] * nu[jt[t].row];
    }
    for (int r = 0; r < m_; ++r) rhs[n_ + r] = -g[r];
    rhs = solve_refined(std::move(rhs));
    std::span<const double> dx(rhs.data(), n_);
    std::span<const double> dnu(rhs.data() + n_, m_);

    // Bound-multiplier steps from the eliminated rows.
    Vec dzl(n_, 0.0), dzu(n_, 0.0);
    for (int i = 0; i < n_; ++i) {
      if (has_lo_[i]) dzl[i] = mu / (x[i] - lo_[i]) - zl[i] - zl[i] / (x[i] - lo_[i]) * dx[i];
      if (has_up_[i]) dzu[i] = mu / (up_[i] - x[i]) - zu[i] + zu[i] / (up_[i] - x[i]) * dx[i];
    }

    // Fraction-to-boundary step caps; the rule tightens as the barrier
    // parameter falls so near-active bounds stop throttling the steps.
    const double tau = std::max(opts_.ftb_tau, 1.0 - mu);
    double a_pri = 1.0, a_dual = 1.0;
    for (int i = 0; i < n_; ++i) {
      if (has_lo_[i] && dx[i] < 0.0) a_pri = std::min(a_pri, -tau * (x[i] - lo_[i]) / dx[i]);
      if (has_up_[i] && dx[i] > 0.0) a_pri = std::min(a_pri, tau * (up_[i] - x[i]) / dx[i]);
      if (has_lo_[i] && dzl[i] < 0.0) a_dual = std::min(a_dual, -tau * zl[i] / dzl[i]);
      if (has_up_[i] && dzu[i] < 0.0) a_dual = std::min(a_dual, -tau * zu[i] / dzu[i]);
    }

    // l1 merit line search along the primal direction.
    double nu_trial_norm = 0.0;
    for (int r = 0; r < m_; ++r) nu_trial_norm = std::max(nu_trial_norm, std::abs(nu[r] + dnu[r]));
    const double pen_required = 1.1 * nu_trial_norm + 1e-4;
    if (pen < pen_required)
      pen = pen_required;
    else if (pen > 10.0 * pen_required)
      pen = std::max(pen_required, 0.1 * pen);  // let stale spikes decay

    const double f0 = eval_.objective(x);
    double g1 = 0.0;
    for (double v : g) g1 += std::abs(v);
    const double phi0 = barrier_value(x, f0, mu) + pen * g1;
    double dphi = -pen * g1;
    for (int i = 0; i < n_; ++i) {
      double v = grad[i];
      if (has_lo_[i]) v -= mu / (x[i] - lo_[i]);
      if (has_up_[i]) v += mu / (up_[i] - x[i]);
      dphi += v * dx[i];
    }

    double alpha = a_pri;
    bool accepted = false;
    bool soc_tried = false;
    Vec x_trial(n_);
    Vec dx_eff(dx.begin(), dx.end());
    for (int ls = 0; ls < 60; ++ls) {
      for (int i = 0; i < n_; ++i) x_trial[i] = x[i] + alpha * dx_eff[i];
      const double f_t = eval_.objective(x_trial);
      Vec g_t = eval_.equalities(x_trial);
      double g1_t = 0.0;
      for (double v : g_t) g1_t += std::abs(v);
      const double phi_t = barrier_value(x_trial, f_t, mu) + pen * g1_t;
      if (std::isfinite(phi_t) && phi_t <= phi0 + 1e-4 * alpha * std::min(dphi, 0.0)) {
        accepted = true;
        break;
      }
      if (!soc_tried && alpha == a_pri && m_ > 0) {
        // Second-order correction: cancel the constraint curvature picked up
        // along the full step, reusing the factorization.
        soc_tried = true;
        Vec rhs_soc(n_ + m_, 0.0);
        for (int r = 0; r < m_; ++r) rhs_soc[n_ + r] = -g_t[r];
        rhs_soc = solve_refined(std::move(rhs_soc));
        Vec dx_soc(n_);
        for (int i = 0; i < n_; ++i) dx_soc[i] = dx_eff[i] + rhs_soc[i];
        // Keep the corrected step inside the fraction-to-boundary box.
        double scale = 1.0;
        for (int i = 0; i < n_; ++i) {
          if (has_lo_[i] && dx_soc[i] < 0.0)
            scale = std::min(scale, -tau * (x[i] - lo_[i]) / (alpha * dx_soc[i]));
          if (has_up_[i] && dx_soc[i] > 0.0)
            scale = std::min(scale, tau * (up_[i] - x[i]) / (alpha * dx_soc[i]));
        }
        if (scale >= 0.99) {
          for (int i = 0; i < n_; ++i) x_trial[i] = x[i] + alpha * dx_soc[i];
          const double f_s = eval_.objective(x_trial);
          Vec g_s = eval_.equalities(x_trial);
          double g1_s = 0.0;
          for (double v : g_s) g1_s += std::abs(v);
          const double phi_s = barrier_value(x_trial, f_s, mu) + pen * g1_s;
          if (std::isfinite(phi_s) && phi_s <= phi0 + 1e-4 * alpha * std::min(dphi, 0.0)) {
            dx_eff = std::move(dx_soc);
            accepted = true;
            break;
          }
        }
      }
      alpha *= 0.5;
      if (alpha < 1e-14) break;
    }
    if (!accepted)
      throw NlpError(NlpErrorKind::LineSearchFailure, "merit line search failed to make progress",
                     snapshot(x, nu, zl, zu, iter, false));

    for (int i = 0; i < n_; ++i) x[i] += alpha * dx_eff[i];
    for (int r = 0; r < m_; ++r) nu[r] += alpha * dnu[r];
    for (int i = 0; i < n_; ++i) {
      if (has_lo_[i]) {
        zl[i] += a_dual * dzl[i];
        const double sl = x[i] - lo_[i];
        zl[i] = std::clamp(zl[i], mu / (1e10 * sl), 1e10 * mu / sl);
      }
      if (has_up_[i]) {
        zu[i] += a_dual * dzu[i];
        const double su = up_[i] - x[i];
        zu[i] = std::clamp(zu[i], mu / (1e10 * su), 1e10 * mu / su);
      }
    }
    ++iter;

    grad = eval_.gradient(x);
    g = eval_.equalities(x);
    eval_.jacobian_values(x, jac_values_);

    if (opts_.log) {
      const Vec rs = dual_residual(grad, nu, zl, zu);
      const Errors le = errors(rs, g, x, zl, zu, nu, 0.0);
      (*opts_.log) << "{\"iter\":" << iter << ",\"mu\":" << mu << ",\"objective\":" << eval_.objective(x)
                   << ",\"stationarity\":" << le.stat << ",\"feasibility\":" << le.feas
                   << ",\"complementarity\":" << le.comp << ",\"alpha\":" << alpha << ",\"delta\":" << delta
                   << ",\"pen\":" << pen << ",\"nu_inf\":" << nu_trial_norm << "}\n";
    }
  }
}

}  // namespace

KktPoint solve(const SmoothNlp& nlp, Vec x0, const SolveOptions& opts) {
  IpSolver solver(nlp, opts);
  return solver.run(std::move(x0));
}

std::vector<std::pair<int, int>> jacobian_pattern(const SmoothNlp& nlp) {
  std::vector<std::pair<int, int>> out;
  if (nlp.structure) {
    int row = 0;
    for (const auto& block : nlp.structure->equality_rows) {
      for (int r = 0; r < block.fn.n_out(); ++r)
        for (int v : block.vars) out.emplace_back(row + r, v);
      row += block.fn.n_out();
    }
  } else {
    for (int r = 0; r < nlp.m; ++r)
      for (int c = 0; c < nlp.n; ++c) out.emplace_back(r, c);
  }
  return out;
}

KktPoint InteriorPointSolver::solve(const SmoothNlp& nlp, Vec x0, const SolveOptions& opts) const {
  return timefreeze::solve(nlp, std::move(x0), opts);
}

DerivativeCheck check_derivatives(const SmoothNlp& nlp, std::span<const double> x, double fd_step) {
  DerivativeCheck report;
  const int n = nlp.n;
  Vec xp(x.begin(), x.end()), xm(x.begin(), x.end());

  const AdEval fe = ad_eval(nlp.objective, x);
  std::optional<AdEval> ge;
  if (nlp.m > 0) ge = ad_eval(nlp.equalities, x);

  auto rel_err = [](double ad, double fd) { return std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)}); };

  for (int j = 0; j < n; ++j) {
    xp[j] = x[j] + fd_step;
    xm[j] = x[j] - fd_step;
    double fp = 0.0, fm = 0.0;
    nlp.objective(std::span<const double>(xp), std::span<double>(&fp, 1));
    nlp.objective(std::span<const double>(xm), std::span<double>(&fm, 1));
    const double fd = (fp - fm) / (2.0 * fd_step);
    const double rel = rel_err(fe.jacobian(0, j), fd);
    report.max_rel_gradient = std::max(report.max_rel_gradient, rel);
    if (rel > 1e-5) report.flagged.push_back({-1, j, fe.jacobian(0, j), fd, rel});

    if (nlp.m > 0) {
      Vec gp(nlp.m), gm(nlp.m);
      nlp.equalities(std::span<const double>(xp), std::span<double>(gp));
      nlp.equalities(std::span<const double>(xm), std::span<double>(gm));
      for (int r = 0; r < nlp.m; ++r) {
        const double fdr = (gp[r] - gm[r]) / (2.0 * fd_step);
        const double relr = rel_err(ge->jacobian(r, j), fdr);
        report.max_rel_jacobian = std::max(report.max_rel_jacobian, relr);
        if (relr > 1e-5) report.flagged.push_back({r, j, ge->jacobian(r, j), fdr, relr});
      }
    }
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return report;
}

}  // namespace timefreeze
