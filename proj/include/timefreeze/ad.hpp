#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

// Forward-mode dual numbers. Three flavors cover every use in the project:
//
//   Dual        dynamic seed vector, one evaluation pass yields a full
//               gradient/Jacobian row; used on whole NLP functions.
//   SDual<Cap>  fixed-capacity seed vector for the small local variable sets
//               of transcription blocks.
//   FwdDual<S>  single-direction first order over any scalar S. Nesting gives
//               second order: FwdDual<SDual<Cap>> produces one Hessian column
//               per sweep, FwdDual<FwdDual<double>> is the classic hyper-dual
//               for pairwise dense Hessians.

namespace timefreeze::ad {

struct Dual {
  double v = 0.0;
  std::vector<double> d;  // empty means zero derivative

  Dual() = default;
  Dual(double value) : v(value) {}
  Dual(double value, std::vector<double> deriv) : v(value), d(std::move(deriv)) {}

  static Dual seed(double value, int n, int direction) {
    Dual r(value);
    r.d.assign(n, 0.0);
    r.d[direction] = 1.0;
    return r;
  }
};

template <int Cap>
struct SDual {
  double v = 0.0;
  int n = 0;
  std::array<double, Cap> d{};

  SDual() = default;
  SDual(double value) : v(value) {}

  static SDual seed(double value, int n_dirs, int direction) {
    SDual r(value);
    r.n = n_dirs;
    r.d[direction] = 1.0;
    return r;
  }
};

template <class S>
struct FwdDual {
  S v{};
  S d{};

  FwdDual() = default;
  FwdDual(double value) : v(value) {}
  FwdDual(S value, S deriv) : v(std::move(value)), d(std::move(deriv)) {}
};

// ---------------------------------------------------------------------------
// value_of: strip all derivative layers (for branching on dual arguments).

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }
template <int Cap>
double value_of(const SDual<Cap>& x) {
  return x.v;
}
template <class S>
double value_of(const FwdDual<S>& x) {
  return value_of(x.v);
}

// ---------------------------------------------------------------------------
// Dual arithmetic.

namespace detail {
inline void dzip(const std::vector<double>& a, const std::vector<double>& b, double ca, double cb,
                 std::vector<double>& out) {
  const size_t n = std::max(a.size(), b.size());
  out.assign(n, 0.0);
  for (size_t i = 0; i < a.size(); ++i) out[i] += ca * a[i];
  for (size_t i = 0; i < b.size(); ++i) out[i] += cb * b[i];
}
inline std::vector<double> dscale(const std::vector<double>& a, double c) {
  std::vector<double> out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = c * a[i];
  return out;
}
}  // namespace detail

inline Dual operator+(const Dual& a, const Dual& b) {
  Dual r(a.v + b.v);
  detail::dzip(a.d, b.d, 1.0, 1.0, r.d);
  return r;
}
inline Dual operator-(const Dual& a, const Dual& b) {
  Dual r(a.v - b.v);
  detail::dzip(a.d, b.d, 1.0, -1.0, r.d);
  return r;
}
inline Dual operator-(const Dual& a) { return {-a.v, detail::dscale(a.d, -1.0)}; }
inline Dual operator*(const Dual& a, const Dual& b) {
  Dual r(a.v * b.v);
  detail::dzip(a.d, b.d, b.v, a.v, r.d);
  return r;
}
inline Dual operator/(const Dual& a, const Dual& b) {
  Dual r(a.v / b.v);
  detail::dzip(a.d, b.d, 1.0 / b.v, -a.v / (b.v * b.v), r.d);
  return r;
}
inline Dual& operator+=(Dual& a, const Dual& b) { return a = a + b; }
inline Dual& operator-=(Dual& a, const Dual& b) { return a = a - b; }
inline Dual& operator*=(Dual& a, const Dual& b) { return a = a * b; }
inline Dual& operator/=(Dual& a, const Dual& b) { return a = a / b; }

inline Dual sin(const Dual& a) { return {std::sin(a.v), detail::dscale(a.d, std::cos(a.v))}; }
inline Dual cos(const Dual& a) { return {std::cos(a.v), detail::dscale(a.d, -std::sin(a.v))}; }
inline Dual exp(const Dual& a) {
  const double e = std::exp(a.v);
  return {e, detail::dscale(a.d, e)};
}
inline Dual log(const Dual& a) { return {std::log(a.v), detail::dscale(a.d, 1.0 / a.v)}; }
inline Dual sqrt(const Dual& a) {
  const double s = std::sqrt(a.v);
  return {s, detail::dscale(a.d, 0.5 / s)};
}
inline Dual pow(const Dual& a, double p) {
  return {std::pow(a.v, p), detail::dscale(a.d, p * std::pow(a.v, p - 1.0))};
}
inline Dual abs(const Dual& a) { return a.v < 0.0 ? -a : a; }
inline Dual tanh(const Dual& a) {
  const double t = std::tanh(a.v);
  return {t, detail::dscale(a.d, 1.0 - t * t)};
}

// ---------------------------------------------------------------------------
// SDual arithmetic.

template <int Cap>
SDual<Cap> operator+(const SDual<Cap>& a, const SDual<Cap>& b) {
  SDual<Cap> r(a.v + b.v);
  r.n = std::max(a.n, b.n);
  for (int i = 0; i < a.n; ++i) r.d[i] = a.d[i];
  for (int i = 0; i < b.n; ++i) r.d[i] += b.d[i];
  return r;
}
template <int Cap>
SDual<Cap> operator-(const SDual<Cap>& a, const SDual<Cap>& b) {
  SDual<Cap> r(a.v - b.v);
  r.n = std::max(a.n, b.n);
  for (int i = 0; i < a.n; ++i) r.d[i] = a.d[i];
  for (int i = 0; i < b.n; ++i) r.d[i] -= b.d[i];
  return r;
}
template <int Cap>
SDual<Cap> operator-(const SDual<Cap>& a) {
  SDual<Cap> r(-a.v);
  r.n = a.n;
  for (int i = 0; i < a.n; ++i) r.d[i] = -a.d[i];
  return r;
}
template <int Cap>
SDual<Cap> operator*(const SDual<Cap>& a, const SDual<Cap>& b) {
  SDual<Cap> r(a.v * b.v);
  r.n = std::max(a.n, b.n);
  for (int i = 0; i < a.n; ++i) r.d[i] = b.v * a.d[i];
  for (int i = 0; i < b.n; ++i) r.d[i] += a.v * b.d[i];
  return r;
}
template <int Cap>
SDual<Cap> operator/(const SDual<Cap>& a, const SDual<Cap>& b) {
  SDual<Cap> r(a.v / b.v);
  r.n = std::max(a.n, b.n);
  const double ia = 1.0 / b.v, ib = -a.v / (b.v * b.v);
  for (int i = 0; i < a.n; ++i) r.d[i] = ia * a.d[i];
  for (int i = 0; i < b.n; ++i) r.d[i] += ib * b.d[i];
  return r;
}
template <int Cap>
SDual<Cap>& operator+=(SDual<Cap>& a, const SDual<Cap>& b) {
  return a = a + b;
}
template <int Cap>
SDual<Cap>& operator-=(SDual<Cap>& a, const SDual<Cap>& b) {
  return a = a - b;
}
template <int Cap>
SDual<Cap>& operator*=(SDual<Cap>& a, const SDual<Cap>& b) {
  return a = a * b;
}
template <int Cap>
SDual<Cap>& operator/=(SDual<Cap>& a, const SDual<Cap>& b) {
  return a = a / b;
}

template <int Cap>
SDual<Cap> chain(const SDual<Cap>& a, double value, double slope) {
  SDual<Cap> r(value);
  r.n = a.n;
  for (int i = 0; i < a.n; ++i) r.d[i] = slope * a.d[i];
  return r;
}

template <int Cap>
SDual<Cap> sin(const SDual<Cap>& a) {
  return chain(a, std::sin(a.v), std::cos(a.v));
}
template <int Cap>
SDual<Cap> cos(const SDual<Cap>& a) {
  return chain(a, std::cos(a.v), -std::sin(a.v));
}
template <int Cap>
SDual<Cap> exp(const SDual<Cap>& a) {
  const double e = std::exp(a.v);
  return chain(a, e, e);
}
template <int Cap>
SDual<Cap> log(const SDual<Cap>& a) {
  return chain(a, std::log(a.v), 1.0 / a.v);
}
template <int Cap>
SDual<Cap> sqrt(const SDual<Cap>& a) {
  const double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s);
}
template <int Cap>
SDual<Cap> pow(const SDual<Cap>& a, double p) {
  return chain(a, std::pow(a.v, p), p * std::pow(a.v, p - 1.0));
}
template <int Cap>
SDual<Cap> abs(const SDual<Cap>& a) {
  return a.v < 0.0 ? -a : a;
}
template <int Cap>
SDual<Cap> tanh(const SDual<Cap>& a) {
  const double t = std::tanh(a.v);
  return chain(a, t, 1.0 - t * t);
}

// ---------------------------------------------------------------------------
// FwdDual arithmetic (generic over the inner scalar).

template <class S>
FwdDual<S> operator+(const FwdDual<S>& a, const FwdDual<S>& b) {
  return {a.v + b.v, a.d + b.d};
}
template <class S>
FwdDual<S> operator-(const FwdDual<S>& a, const FwdDual<S>& b) {
  return {a.v - b.v, a.d - b.d};
}
template <class S>
FwdDual<S> operator-(const FwdDual<S>& a) {
  return {-a.v, -a.d};
}
template <class S>
FwdDual<S> operator*(const FwdDual<S>& a, const FwdDual<S>& b) {
  return {a.v * b.v, a.v * b.d + a.d * b.v};
}
template <class S>
FwdDual<S> operator/(const FwdDual<S>& a, const FwdDual<S>& b) {
  S q = a.v / b.v;
  return {q, (a.d - q * b.d) / b.v};
}
template <class S>
FwdDual<S>& operator+=(FwdDual<S>& a, const FwdDual<S>& b) {
  return a = a + b;
}
template <class S>
FwdDual<S>& operator-=(FwdDual<S>& a, const FwdDual<S>& b) {
  return a = a - b;
}
template <class S>
FwdDual<S>& operator*=(FwdDual<S>& a, const FwdDual<S>& b) {
  return a = a * b;
}
template <class S>
FwdDual<S>& operator/=(FwdDual<S>& a, const FwdDual<S>& b) {
  return a = a / b;
}

template <class S>
FwdDual<S> sin(const FwdDual<S>& a) {
  using std::cos;
  using std::sin;
  return {sin(a.v), cos(a.v) * a.d};
}
template <class S>
FwdDual<S> cos(const FwdDual<S>& a) {
  using std::cos;
  using std::sin;
  return {cos(a.v), -sin(a.v) * a.d};
}
template <class S>
FwdDual<S> exp(const FwdDual<S>& a) {
  using std::exp;
  S e = exp(a.v);
  return {e, e * a.d};
}
template <class S>
FwdDual<S> log(const FwdDual<S>& a) {
  using std::log;
  return {log(a.v), a.d / a.v};
}
template <class S>
FwdDual<S> sqrt(const FwdDual<S>& a) {
  using std::sqrt;
  S s = sqrt(a.v);
  return {s, a.d / (s + s)};
}
template <class S>
FwdDual<S> pow(const FwdDual<S>& a, double p) {
  using std::pow;
  return {pow(a.v, p), (p * pow(a.v, p - 1.0)) * a.d};
}
template <class S>
FwdDual<S> abs(const FwdDual<S>& a) {
  return value_of(a.v) < 0.0 ? -a : a;
}
template <class S>
FwdDual<S> tanh(const FwdDual<S>& a) {
  using std::tanh;
  S t = tanh(a.v);
  return {t, (1.0 - t * t) * a.d};
}

// Mixed double ops so numeric literals work on every dual flavor.
#define TIMEFREEZE_AD_MIXED(OP)                                          \
  inline Dual operator OP(const Dual& a, double b) { return a OP Dual(b); } \
  inline Dual operator OP(double a, const Dual& b) { return Dual(a) OP b; } \
  template <int Cap>                                                     \
  SDual<Cap> operator OP(const SDual<Cap>& a, double b) {                \
    return a OP SDual<Cap>(b);                                           \
  }                                                                      \
  template <int Cap>                                                     \
  SDual<Cap> operator OP(double a, const SDual<Cap>& b) {                \
    return SDual<Cap>(a) OP b;                                           \
  }                                                                      \
  template <class S>                                                     \
  FwdDual<S> operator OP(const FwdDual<S>& a, double b) {                \
    return a OP FwdDual<S>(b);                                           \
  }                                                                      \
  template <class S>                                                     \
  FwdDual<S> operator OP(double a, const FwdDual<S>& b) {                \
    return FwdDual<S>(a) OP b;                                           \
  }

TIMEFREEZE_AD_MIXED(+)
TIMEFREEZE_AD_MIXED(-)
TIMEFREEZE_AD_MIXED(*)
TIMEFREEZE_AD_MIXED(/)
#undef TIMEFREEZE_AD_MIXED

// Comparisons look at values only.
#define TIMEFREEZE_AD_CMP(OP)                                                     \
  inline bool operator OP(const Dual& a, const Dual& b) { return a.v OP b.v; }   \
  inline bool operator OP(const Dual& a, double b) { return a.v OP b; }          \
  inline bool operator OP(double a, const Dual& b) { return a OP b.v; }          \
  template <int Cap>                                                              \
  bool operator OP(const SDual<Cap>& a, const SDual<Cap>& b) {                    \
    return a.v OP b.v;                                                            \
  }                                                                               \
  template <int Cap>                                                              \
  bool operator OP(const SDual<Cap>& a, double b) {                               \
    return a.v OP b;                                                              \
  }                                                                               \
  template <int Cap>                                                              \
  bool operator OP(double a, const SDual<Cap>& b) {                               \
    return a OP b.v;                                                              \
  }                                                                               \
  template <class S>                                                              \
  bool operator OP(const FwdDual<S>& a, const FwdDual<S>& b) {                    \
    return value_of(a) OP value_of(b);                                            \
  }                                                                               \
  template <class S>                                                              \
  bool operator OP(const FwdDual<S>& a, double b) {                               \
    return value_of(a) OP b;                                                      \
  }                                                                               \
  template <class S>                                                              \
  bool operator OP(double a, const FwdDual<S>& b) {                               \
    return a OP value_of(b);                                                      \
  }

TIMEFREEZE_AD_CMP(<)
TIMEFREEZE_AD_CMP(>)
TIMEFREEZE_AD_CMP(<=)
TIMEFREEZE_AD_CMP(>=)
TIMEFREEZE_AD_CMP(==)
#undef TIMEFREEZE_AD_CMP

// Capacity of block-local duals: bounds the local variable count of any
// single transcription block (two state nodes + algebraic vars + controls + w).
inline constexpr int kBlockCap = 48;
using Grad = SDual<kBlockCap>;
using GradDir = FwdDual<Grad>;
using Hyper = FwdDual<FwdDual<double>>;

}  // namespace timefreeze::ad
