#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "timefreeze/functions.hpp"
#include "timefreeze/linalg.hpp"

namespace timefreeze {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct VarBounds {
  Vec lower, upper;
};

/// A function block touching a small set of variables. The transcription is
/// built entirely from such blocks; they carry the Jacobian sparsity and make
/// exact Lagrangian Hessians cheap (per-block forward-over-forward sweeps).
struct NlpBlock {
  std::vector<int> vars;
  VectorFunc fn;  // locals -> outputs
};

struct NlpStructure {
  std::vector<NlpBlock> objective_terms;  // scalar outputs, summed
  std::vector<NlpBlock> equality_rows;    // outputs concatenated in order
};

/// Smooth equality-constrained NLP with variable bounds:
///   min f(x)  s.t.  g(x) = 0,  lower <= x <= upper.
struct SmoothNlp {
  int n = 0;
  int m = 0;
  VectorFunc objective;   // n -> 1
  VectorFunc equalities;  // n -> m
  VarBounds bounds;
  std::optional<NlpStructure> structure;
};

SmoothNlp make_smooth_nlp(int n, VectorFunc objective, VectorFunc equalities, VarBounds bounds);

/// Builds the NLP from blocks; the dense objective/equality callables are
/// synthesized so both evaluation paths agree by construction.
SmoothNlp make_smooth_nlp(int n, NlpStructure structure, VarBounds bounds);

struct KktPoint {
  Vec x;
  Vec nu;              // equality multipliers
  Vec z_lower, z_upper;  // bound multipliers (zero where the bound is infinite)
  double objective = 0.0;
  double stationarity = 0.0;
  double feasibility = 0.0;
  double complementarity = 0.0;
  int iterations = 0;
  bool converged = false;
};

enum class NlpErrorKind { MaxIterations, LineSearchFailure, SingularSystem };

struct NlpError : std::runtime_error {
  NlpError(NlpErrorKind k, const std::string& msg, KktPoint iterate)
      : std::runtime_error(msg), kind(k), last(std::move(iterate)) {}
  NlpErrorKind kind;
  KktPoint last;  // for warm-start reuse
};

struct SolveOptions {
  double tol = 1e-8;
  double acceptable_tol = 1e-6;  // plateau exit: after 10 consecutive iterations
                                 // at this level (with feasibility <= 1e-9)
  int max_iter = 3000;          // total Newton iterations across barrier levels
  double mu0 = 1e-1;            // initial barrier parameter
  double mu_factor = 0.2;       // barrier reduction; floor is tol/10
  double ftb_tau = 0.995;       // fraction-to-boundary rule
  bool prefer_banded = true;    // exploit block-banded KKT systems when present
  bool gauss_newton = false;    // drop equality curvature from the Hessian
  std::optional<Vec> warm_nu;
  std::optional<Vec> warm_z_lower, warm_z_upper;
  std::ostream* log = nullptr;  // JSON-lines iteration log
};

/// Primal-dual interior-point solve. x0 is clipped strictly inside the bounds
/// by min(1e-2 * box width, 1e-4) per side. Throws NlpError carrying the last
/// iterate on failure.
KktPoint solve(const SmoothNlp& nlp, Vec x0, const SolveOptions& opts = {});

/// Jacobian sparsity of the equalities: (row, column) pairs, derived from the
/// block structure when present, dense otherwise.
std::vector<std::pair<int, int>> jacobian_pattern(const SmoothNlp& nlp);

/// Pluggable solver boundary: adapters for external solvers must honor the
/// same residual definitions as KktPoint.
class NlpSolver {
public:
  virtual ~NlpSolver() = default;
  virtual KktPoint solve(const SmoothNlp& nlp, Vec x0, const SolveOptions& opts) const = 0;
};

/// The reference implementation behind the interface.
class InteriorPointSolver final : public NlpSolver {
public:
  KktPoint solve(const SmoothNlp& nlp, Vec x0, const SolveOptions& opts) const override;
};

struct DerivativeDiscrepancy {
  int row = -1;  // -1 for the objective gradient
  int col = 0;
  double ad = 0.0;
  double fd = 0.0;
  double rel = 0.0;
};

struct DerivativeCheck {
  double max_rel_gradient = 0.0;
  double max_rel_jacobian = 0.0;
  std::vector<DerivativeDiscrepancy> flagged;  // entries above 1e-5 relative
};

/// Compares forward-mode derivatives of objective and equalities against
/// central finite differences with the given step.
DerivativeCheck check_derivatives(const SmoothNlp& nlp, std::span<const double> x, double fd_step);

}  // namespace timefreeze
