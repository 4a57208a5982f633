#include "timefreeze/functions.hpp"

#include <vector>

namespace timefreeze {

AdEval ad_eval(const VectorFunc& f, std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  std::vector<ad::Dual> xs(n);
  for (int i = 0; i < n; ++i) xs[i] = ad::Dual::seed(x[i], n, i);
  std::vector<ad::Dual> ys(f.n_out());
  f(std::span<const ad::Dual>(xs), std::span<ad::Dual>(ys));
  AdEval out;
  out.value.resize(f.n_out());
  out.jacobian = Mat(f.n_out(), n);
  for (int r = 0; r < f.n_out(); ++r) {
    out.value[r] = ys[r].v;
    for (size_t j = 0; j < ys[r].d.size(); ++j) out.jacobian(r, static_cast<int>(j)) = ys[r].d[j];
  }
  return out;
}

Mat ad_hessian(const VectorFunc& f, std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  Mat h(n, n);
  std::vector<ad::Hyper> xs(n);
  for (int i = 0; i < n; ++i) xs[i] = ad::Hyper(x[i]);
  std::vector<ad::Hyper> ys(1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      xs[i].v.d = 1.0;
      xs[j].d.v = 1.0;
      f(std::span<const ad::Hyper>(xs), std::span<ad::Hyper>(ys));
      h(i, j) = h(j, i) = ys[0].d.d;
      xs[i].v.d = 0.0;
      xs[j].d.v = 0.0;
    }
  }
  return h;
}

}  // namespace timefreeze
