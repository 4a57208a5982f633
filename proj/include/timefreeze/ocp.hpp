#pragma once

#include <string>
#include <utility>
#include <vector>

#include "timefreeze/dynamics.hpp"
#include "timefreeze/nlp.hpp"
#include "timefreeze/simulate.hpp"

namespace timefreeze {

/// Time-optimal control problem on the time-frozen dynamics, over the fixed
/// grid s in [0, 1] with the speed-of-time variable w (tau = w s):
///   min  t(1) + rho |q(1) - q_target|^2
///   s.t. y(0) = y0,  y'(s) = w F(y, u, alpha),  u in box,  w in [1/w_max, w_max],
/// with the step functions replaced by the LP-KKT complementarity algebra.
struct OcpDefinition {
  TimeFrozenSystem sys;
  Vec y0;
  Vec q_target;
  double rho = 100.0;
  Vec u_lower, u_upper;
  double w_max = 20.0;
  int n_elements = 50;  // implicit-Euler finite elements, h = 1 / N
  int n_ctrl = 0;       // control intervals; 0 means one per element
};

/// Index map of the decision vector. Per node n = 0..N the state y_n is
/// followed by (alpha, lambda0, lambda1) per constraint; then the stacked
/// controls, then w last.
struct NlpLayout {
  int n_nodes = 0;  // N + 1
  int n_ctrl = 0;
  int n_y = 0;
  int n_c = 0;
  int n_u = 0;

  int node_stride() const { return n_y + 3 * n_c; }
  int y_start(int node) const { return node * node_stride(); }
  int clock_index(int node) const { return y_start(node) + n_y - 1; }
  int alpha_index(int node, int c) const { return y_start(node) + n_y + 3 * c; }
  int lambda0_index(int node, int c) const { return alpha_index(node, c) + 1; }
  int lambda1_index(int node, int c) const { return alpha_index(node, c) + 2; }
  int u_start(int interval) const { return n_nodes * node_stride() + interval * n_u; }
  int w_index() const { return n_nodes * node_stride() + n_ctrl * n_u; }
  int num_vars() const { return w_index() + 1; }
  int interval_of_step(int step) const { return step / ((n_nodes - 1) / n_ctrl); }
};

struct ComplementarityPair {
  int alpha = 0;       // variable index
  int lambda = 0;      // variable index
  bool one_minus = false;  // pair is (1 - alpha, lambda) instead of (alpha, lambda)
};

/// Discretized dynamic complementarity problem: equalities and bounds plus
/// the complementarity pairs, before any penalization.
struct TranscribedNlp {
  OcpDefinition ocp;
  NlpLayout layout;
  double h = 0.0;  // 1 / N
  NlpStructure structure;  // defects, initial condition, stationarity; unpenalized objective
  VarBounds bounds;
  std::vector<ComplementarityPair> pairs;

  std::string describe() const;
};

/// Implicit-Euler transcription; defect n couples y_n, y_{n+1} and the
/// algebraic variables of node n+1 (fully implicit). Rejects systems whose
/// auxiliary data was not produced by assemble_time_frozen.
TranscribedNlp transcribe(const OcpDefinition& ocp);

/// Smooth NLP for one homotopy stage: complementarity products scaled by mu
/// are added to the objective, the pairs are dropped as constraints, all
/// equalities and bounds stay.
SmoothNlp penalize(const TranscribedNlp& nlp, double mu);

/// w = 2, states held at y0 with a linearly growing clock, controls zero,
/// alpha = 1, lambda0 = 0, lambda1 = max(psi(y0), 0).
Vec initial_guess(const TranscribedNlp& nlp);

/// max over pairs of the complementarity product, floored at zero.
double complementarity_residual(const TranscribedNlp& nlp, std::span<const double> x);

struct HomotopySchedule {
  double mu0 = 1e-3;
  double factor = 10.0;
  int count = 7;
};

struct HomotopyStageStats {
  double mu = 0.0;
  double objective = 0.0;       // penalized stage objective at the stage solution
  double comp_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct HomotopyError : std::runtime_error {
  HomotopyError(int stage_index, NlpErrorKind k, const std::string& msg,
                std::vector<HomotopyStageStats> done)
      : std::runtime_error(msg), stage(stage_index), kind(k), stages(std::move(done)) {}
  int stage;
  NlpErrorKind kind;
  std::vector<HomotopyStageStats> stages;
};

struct HomotopyResult {
  Vec x;
  KktPoint kkt;  // final stage
  std::vector<HomotopyStageStats> stages;
  double comp_residual = 0.0;
};

/// Solves the stage sequence mu_i = mu0 * factor^i, warm-starting each stage
/// from the previous primal solution. Throws HomotopyError (with the stage
/// index and completed stage stats) if a stage fails. A non-null solver
/// replaces the built-in interior-point method.
HomotopyResult solve_homotopy(const TranscribedNlp& nlp, const HomotopySchedule& schedule, Vec guess,
                              const SolveOptions& opts = {}, const NlpSolver* solver = nullptr);

/// Relaxation-scheme counterpart of penalize (a' b <= sigma as constraints).
/// Deliberately unimplemented: the toolkit follows the penalization route;
/// the relaxed problems would need general inequalities the reference solver
/// does not carry. Always throws std::logic_error.
SmoothNlp relax(const TranscribedNlp& nlp, double sigma);

struct OcpSolution {
  Vec primal;
  Trajectory pseudo;            // node states over tau = w s
  PhysicalTrajectory trajectory;
  std::vector<std::pair<double, Vec>> controls;  // physical interval start time -> u
  double t_final = 0.0;
  double w = 0.0;
  double objective = 0.0;       // unpenalized: t(1) + rho |q(1) - q_target|^2
};

/// Applies the simulate-module recovery (threshold rule with step h w) to the
/// discrete solution and attaches controls to the retained intervals.
OcpSolution extract_solution(const TranscribedNlp& nlp, std::span<const double> x);

}  // namespace timefreeze
