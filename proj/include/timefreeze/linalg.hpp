#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace timefreeze {

using Vec = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);

/// Dense row-major matrix.
class Mat {
public:
  Mat() = default;
  Mat(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, 0.0) {}

  double& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::span<double> row(int i) { return {data_.data() + static_cast<size_t>(i) * cols_, static_cast<size_t>(cols_)}; }
  std::span<const double> row(int i) const {
    return {data_.data() + static_cast<size_t>(i) * cols_, static_cast<size_t>(cols_)};
  }
  Vec& data() { return data_; }
  const Vec& data() const { return data_; }

private:
  int rows_ = 0, cols_ = 0;
  Vec data_;
};

/// Solve A x = b by LU with partial pivoting; A is overwritten. Throws on singular A.
Vec lu_solve(Mat a, Vec b);

struct Inertia {
  int positive = 0;
  int negative = 0;
  int zero = 0;
};

/// Sparse symmetric matrix handed to a KKT solver as a fixed emission
/// sequence: the caller pushes the same (i, j) pairs in the same order every
/// iteration, only the values change. Entries are lower-triangle (i >= j);
/// duplicates are summed.
struct SymPattern {
  int n = 0;
  std::vector<std::pair<int, int>> entries;
};

/// Symmetric indefinite factorization interface for the interior-point KKT
/// systems. Implementations are deterministic (no randomized or
/// value-dependent pivoting); the caller keeps the matrix quasi-definite
/// through regularization and reads the inertia to verify it.
class SymSolver {
public:
  virtual ~SymSolver() = default;
  virtual void analyze(const SymPattern& pattern) = 0;
  /// Values parallel to pattern.entries. Returns the inertia of the factored matrix.
  virtual Inertia factor(std::span<const double> values) = 0;
  virtual void solve(std::span<double> rhs) const = 0;
};

/// Dense LDL^T without pivoting.
class DenseSymSolver final : public SymSolver {
public:
  void analyze(const SymPattern& pattern) override;
  Inertia factor(std::span<const double> values) override;
  void solve(std::span<double> rhs) const override;

private:
  int n_ = 0;
  SymPattern pattern_;
  Mat fac_;
  Vec d_;
};

/// Reverse Cuthill-McKee ordering of an undirected graph given as adjacency
/// lists. Deterministic: ties are broken by vertex index.
std::vector<int> rcm_order(const std::vector<std::vector<int>>& adjacency);

/// Banded LDL^T with a dense border block handled by a Schur complement.
/// High-degree rows (which would destroy the band) are moved to the border;
/// the rest is permuted by RCM. Suited to the block-tridiagonal KKT systems
/// produced by direct transcription, where only the global time-scaling
/// variable couples all nodes.
class BandedSymSolver final : public SymSolver {
public:
  void analyze(const SymPattern& pattern) override;
  Inertia factor(std::span<const double> values) override;
  void solve(std::span<double> rhs) const override;

  int bandwidth() const { return bw_; }
  int border_size() const { return static_cast<int>(border_.size()); }

private:
  double& band_at(int i, int j) { return band_[static_cast<size_t>(i) * (bw_ + 1) + (j - i + bw_)]; }
  double band_at(int i, int j) const { return band_[static_cast<size_t>(i) * (bw_ + 1) + (j - i + bw_)]; }
  void band_solve_lower(std::span<double> x) const;   // L z = x
  void band_solve_diag(std::span<double> x) const;    // D w = x
  void band_solve_upper(std::span<double> x) const;   // L^T y = x

  int n_ = 0;
  int n_core_ = 0;
  int bw_ = 0;
  std::vector<int> border_;       // original indices moved to the border
  std::vector<int> position_;     // original index -> core position, or n_core_+k for border k
  // Emission slot -> target. Encoded target: band slot, coupling slot, or border-block slot.
  enum class Dest : unsigned char { Band, Coupling, Border };
  std::vector<Dest> dest_;
  std::vector<size_t> slot_;
  Vec band_;                      // lower band, row-major, width bw_+1
  Vec d_;                         // pivots of the band factor
  Mat coupling_;                  // n_border x n_core (rows are border columns of the matrix)
  Mat schur_;                     // n_border x n_border
  Mat minv_c_;                    // n_border x n_core, rows are B^{-1} c_k
  DenseSymSolver schur_solver_;
  Inertia band_inertia_;
};

/// Picks a banded solver when the pattern permits a small bandwidth,
/// otherwise falls back to dense. Deterministic.
std::unique_ptr<SymSolver> make_sym_solver(const SymPattern& pattern, bool prefer_banded);

}  // namespace timefreeze
