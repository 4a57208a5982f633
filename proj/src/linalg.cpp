#include "timefreeze/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace timefreeze {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s = std::max(s, std::abs(v));
  return s;
}

Vec lu_solve(Mat a, Vec b) {
  const int n = a.rows();
  if (a.cols() != n || static_cast<int>(b.size()) != n) throw std::invalid_argument("lu_solve: shape mismatch");
  std::vector<int> piv(n);
  for (int k = 0; k < n; ++k) {
    int p = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
    if (a(p, k) == 0.0) throw std::runtime_error("lu_solve: singular matrix");
    piv[k] = p;
    if (p != k) {
      for (int j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
      std::swap(b[k], b[p]);
    }
    for (int i = k + 1; i < n; ++i) {
      const double l = a(i, k) / a(k, k);
      a(i, k) = l;
      for (int j = k + 1; j < n; ++j) a(i, j) -= l * a(k, j);
      b[i] -= l * b[k];
    }
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= a(i, j) * b[j];
    b[i] = s / a(i, i);
  }
  return b;
}

namespace {

constexpr double kPivotTiny = 1e-300;

Inertia count_inertia(std::span<const double> d) {
  Inertia res;
  for (double v : d) {
    if (v > kPivotTiny)
      ++res.positive;
    else if (v < -kPivotTiny)
      ++res.negative;
    else
      ++res.zero;
  }
  return res;
}

}  // namespace

void DenseSymSolver::analyze(const SymPattern& pattern) {
  n_ = pattern.n;
  pattern_ = pattern;
  fac_ = Mat(n_, n_);
  d_.assign(n_, 0.0);
}

Inertia DenseSymSolver::factor(std::span<const double> values) {
  std::fill(fac_.data().begin(), fac_.data().end(), 0.0);
  for (size_t e = 0; e < pattern_.entries.size(); ++e) {
    const auto [i, j] = pattern_.entries[e];
    fac_(i, j) += values[e];
  }
  // In-place LDL^T, L strictly lower, D in d_. Right-looking over columns.
  for (int j = 0; j < n_; ++j) {
    const double dj = fac_(j, j);
    d_[j] = dj;
    if (std::abs(dj) < kPivotTiny) {
      // Mark remaining pivots as zero so the caller sees a defective inertia.
      for (int r = j; r < n_; ++r) d_[r] = 0.0;
      return count_inertia(d_);
    }
    const double inv = 1.0 / dj;
    for (int k = j + 1; k < n_; ++k) {
      const double ljk = fac_(k, j) * inv;
      if (ljk == 0.0 && fac_(k, j) == 0.0) {
        fac_(k, j) = 0.0;
        continue;
      }
      const double col_j_k = fac_(k, j);
      // Update trailing column k (rows >= k).
      for (int i = k; i < n_; ++i) fac_(i, k) -= fac_(i, j) * ljk;
      fac_(k, j) = col_j_k * inv;
    }
  }
  return count_inertia(d_);
}

void DenseSymSolver::solve(std::span<double> rhs) const {
  // L z = b
  for (int j = 0; j < n_; ++j) {
    const double bj = rhs[j];
    if (bj == 0.0) continue;
    for (int i = j + 1; i < n_; ++i) rhs[i] -= fac_(i, j) * bj;
  }
  for (int i = 0; i < n_; ++i) rhs[i] /= d_[i];
  // L^T x = w
  for (int j = n_ - 1; j >= 0; --j) {
    double s = rhs[j];
    for (int i = j + 1; i < n_; ++i) s -= fac_(i, j) * rhs[i];
    rhs[j] = s;
  }
}

std::vector<int> rcm_order(const std::vector<std::vector<int>>& adjacency) {
  const int n = static_cast<int>(adjacency.size());
  std::vector<int> degree(n);
  for (int i = 0; i < n; ++i) degree[i] = static_cast<int>(adjacency[i].size());

  std::vector<int> order;
  order.reserve(n);
  std::vector<char> visited(n, 0);

  auto bfs = [&](int root, std::vector<int>& out, int& last_level_start) {
    out.clear();
    out.push_back(root);
    std::vector<char> seen(n, 0);
    seen[root] = 1;
    size_t head = 0;
    last_level_start = 0;
    size_t level_end = 1;
    while (head < out.size()) {
      if (head == level_end) {
        last_level_start = static_cast<int>(head);
        level_end = out.size();
      }
      const int v = out[head++];
      std::vector<int> nb;
      for (int w : adjacency[v])
        if (!seen[w] && !visited[w]) nb.push_back(w);
      std::sort(nb.begin(), nb.end(), [&](int a, int b) {
        return degree[a] != degree[b] ? degree[a] < degree[b] : a < b;
      });
      for (int w : nb) {
        seen[w] = 1;
        out.push_back(w);
      }
    }
  };

  std::vector<int> component;
  for (;;) {
    int root = -1;
    for (int i = 0; i < n; ++i)
      if (!visited[i] && (root < 0 || degree[i] < degree[root])) root = i;
    if (root < 0) break;

    // Pseudo-peripheral root: walk to a min-degree vertex of the deepest level.
    int last_start = 0;
    bfs(root, component, last_start);
    for (int pass = 0; pass < 3; ++pass) {
      int candidate = component[last_start];
      for (size_t i = last_start; i < component.size(); ++i)
        if (degree[component[i]] < degree[candidate]) candidate = component[i];
      if (candidate == root) break;
      root = candidate;
      bfs(root, component, last_start);
    }
    for (int v : component) {
      visited[v] = 1;
      order.push_back(v);
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

void BandedSymSolver::analyze(const SymPattern& pattern) {
  n_ = pattern.n;

  // Unique off-diagonal adjacency.
  std::vector<std::vector<int>> adj(n_);
  for (const auto& [i, j] : pattern.entries) {
    if (i == j) continue;
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }

  // Rows dense enough to wreck the band go to the border.
  const int degree_cap = std::max(64, n_ / 8);
  std::vector<char> is_border(n_, 0);
  border_.clear();
  for (int i = 0; i < n_; ++i) {
    if (static_cast<int>(adj[i].size()) > degree_cap) {
      is_border[i] = 1;
      border_.push_back(i);
    }
  }
  n_core_ = n_ - static_cast<int>(border_.size());

  // RCM on the core subgraph.
  std::vector<int> core_nodes;
  core_nodes.reserve(n_core_);
  std::vector<int> core_index(n_, -1);
  for (int i = 0; i < n_; ++i)
    if (!is_border[i]) {
      core_index[i] = static_cast<int>(core_nodes.size());
      core_nodes.push_back(i);
    }
  std::vector<std::vector<int>> core_adj(n_core_);
  for (int i = 0; i < n_; ++i) {
    if (is_border[i]) continue;
    for (int j : adj[i])
      if (!is_border[j]) core_adj[core_index[i]].push_back(core_index[j]);
  }
  const std::vector<int> perm = rcm_order(core_adj);  // perm[p] = core node at position p

  position_.assign(n_, -1);
  for (int p = 0; p < n_core_; ++p) position_[core_nodes[perm[p]]] = p;
  for (size_t k = 0; k < border_.size(); ++k) position_[border_[k]] = n_core_ + static_cast<int>(k);

  bw_ = 0;
  for (int i = 0; i < n_; ++i) {
    if (is_border[i]) continue;
    for (int j : adj[i])
      if (!is_border[j]) bw_ = std::max(bw_, std::abs(position_[i] - position_[j]));
  }

  // Emission slots.
  const int nb = static_cast<int>(border_.size());
  dest_.resize(pattern.entries.size());
  slot_.resize(pattern.entries.size());
  for (size_t e = 0; e < pattern.entries.size(); ++e) {
    const auto [oi, oj] = pattern.entries[e];
    int pi = position_[oi], pj = position_[oj];
    const bool bi = pi >= n_core_, bj = pj >= n_core_;
    if (!bi && !bj) {
      if (pi < pj) std::swap(pi, pj);
      dest_[e] = Dest::Band;
      slot_[e] = static_cast<size_t>(pi) * (bw_ + 1) + (pj - pi + bw_);
    } else if (bi != bj) {
      const int b = (bi ? pi : pj) - n_core_;
      const int c = bi ? pj : pi;
      dest_[e] = Dest::Coupling;
      slot_[e] = static_cast<size_t>(b) * n_core_ + c;
    } else {
      int a = pi - n_core_, b = pj - n_core_;
      if (a < b) std::swap(a, b);
      dest_[e] = Dest::Border;
      slot_[e] = static_cast<size_t>(a) * nb + b;
    }
  }

  band_.assign(static_cast<size_t>(n_core_) * (bw_ + 1), 0.0);
  d_.assign(n_core_, 0.0);
  coupling_ = Mat(nb, n_core_);
  schur_ = Mat(nb, nb);
  minv_c_ = Mat(nb, n_core_);
}

Inertia BandedSymSolver::factor(std::span<const double> values) {
  std::fill(band_.begin(), band_.end(), 0.0);
  std::fill(coupling_.data().begin(), coupling_.data().end(), 0.0);
  std::fill(schur_.data().begin(), schur_.data().end(), 0.0);
  const int nb = static_cast<int>(border_.size());
  for (size_t e = 0; e < values.size(); ++e) {
    switch (dest_[e]) {
      case Dest::Band: band_[slot_[e]] += values[e]; break;
      case Dest::Coupling: coupling_.data()[slot_[e]] += values[e]; break;
      case Dest::Border: schur_.data()[slot_[e]] += values[e]; break;
    }
  }
  // Mirror the border block (only lower emitted).
  for (int a = 0; a < nb; ++a)
    for (int b = 0; b < a; ++b) schur_(b, a) = schur_(a, b);

  // Band LDL^T, right-looking.
  bool singular = false;
  for (int j = 0; j < n_core_ && !singular; ++j) {
    const double dj = band_at(j, j);
    d_[j] = dj;
    if (std::abs(dj) < kPivotTiny) {
      for (int r = j; r < n_core_; ++r) d_[r] = 0.0;
      singular = true;
      break;
    }
    const double inv = 1.0 / dj;
    const int iend = std::min(n_core_ - 1, j + bw_);
    for (int k = j + 1; k <= iend; ++k) {
      const double a_kj = band_at(k, j);
      if (a_kj != 0.0) {
        const double l = a_kj * inv;
        for (int i = k; i <= iend; ++i) band_at(i, k) -= band_at(i, j) * l;
      }
    }
    for (int i = j + 1; i <= iend; ++i) band_at(i, j) *= inv;
  }
  band_inertia_ = count_inertia(d_);
  if (singular) return band_inertia_;

  // Schur complement over the border: S = E - C B^{-1} C^T.
  for (int k = 0; k < nb; ++k) {
    auto m = minv_c_.row(k);
    auto c = coupling_.row(k);
    std::copy(c.begin(), c.end(), m.begin());
    band_solve_lower(m);
    band_solve_diag(m);
    band_solve_upper(m);
    for (int l = 0; l <= k; ++l) {
      const double s = dot(minv_c_.row(k), coupling_.row(l));
      schur_(k, l) -= s;
      if (l != k) schur_(l, k) -= s;
    }
  }
  SymPattern sp;
  sp.n = nb;
  Vec svals;
  for (int a = 0; a < nb; ++a)
    for (int b = 0; b <= a; ++b) {
      sp.entries.emplace_back(a, b);
      svals.push_back(schur_(a, b));
    }
  schur_solver_.analyze(sp);
  const Inertia si = schur_solver_.factor(svals);

  Inertia total = band_inertia_;
  total.positive += si.positive;
  total.negative += si.negative;
  total.zero += si.zero;
  return total;
}

void BandedSymSolver::band_solve_lower(std::span<double> x) const {
  for (int j = 0; j < n_core_; ++j) {
    const double xj = x[j];
    if (xj == 0.0) continue;
    const int iend = std::min(n_core_ - 1, j + bw_);
    for (int i = j + 1; i <= iend; ++i) x[i] -= band_at(i, j) * xj;
  }
}

void BandedSymSolver::band_solve_diag(std::span<double> x) const {
  for (int i = 0; i < n_core_; ++i) x[i] /= d_[i];
}

void BandedSymSolver::band_solve_upper(std::span<double> x) const {
  for (int j = n_core_ - 1; j >= 0; --j) {
    double s = x[j];
    const int iend = std::min(n_core_ - 1, j + bw_);
    for (int i = j + 1; i <= iend; ++i) s -= band_at(i, j) * x[i];
    x[j] = s;
  }
}

void BandedSymSolver::solve(std::span<double> rhs) const {
  const int nb = static_cast<int>(border_.size());
  Vec pb(n_core_), bb(nb);
  for (int i = 0; i < n_; ++i) {
    const int p = position_[i];
    if (p < n_core_)
      pb[p] = rhs[i];
    else
      bb[p - n_core_] = rhs[i];
  }
  // x_core' = B^{-1} b_core
  band_solve_lower(pb);
  band_solve_diag(pb);
  band_solve_upper(pb);
  // border rhs: b_border - C x_core'
  for (int k = 0; k < nb; ++k) bb[k] -= dot(coupling_.row(k), pb);
  schur_solver_.solve(bb);
  // x_core = x_core' - B^{-1} C^T x_border
  for (int k = 0; k < nb; ++k) {
    const double xk = bb[k];
    if (xk == 0.0) continue;
    auto m = minv_c_.row(k);
    for (int i = 0; i < n_core_; ++i) pb[i] -= m[i] * xk;
  }
  for (int i = 0; i < n_; ++i) {
    const int p = position_[i];
    rhs[i] = p < n_core_ ? pb[p] : bb[p - n_core_];
  }
}

std::unique_ptr<SymSolver> make_sym_solver(const SymPattern& pattern, bool prefer_banded) {
  if (prefer_banded && pattern.n >= 256) {
    auto banded = std::make_unique<BandedSymSolver>();
    banded->analyze(pattern);
    // Worth it only if the band is actually narrow.
    if (banded->bandwidth() + 1 < pattern.n / 4 && banded->border_size() < pattern.n / 16) return banded;
  }
  auto dense = std::make_unique<DenseSymSolver>();
  dense->analyze(pattern);
  return dense;
}

}  // namespace timefreeze
