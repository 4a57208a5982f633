#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <utility>

#include "timefreeze/ad.hpp"
#include "timefreeze/linalg.hpp"

namespace timefreeze {

// Type-erased vector function y = f(x) evaluatable on doubles and on every
// dual flavor, so one definition serves plain evaluation, Jacobians and
// Hessians. Wrap a generic lambda with VectorFunc::make.
class VectorFunc {
  struct Base {
    virtual ~Base() = default;
    virtual void eval(std::span<const double>, std::span<double>) const = 0;
    virtual void eval(std::span<const ad::Dual>, std::span<ad::Dual>) const = 0;
    virtual void eval(std::span<const ad::Grad>, std::span<ad::Grad>) const = 0;
    virtual void eval(std::span<const ad::GradDir>, std::span<ad::GradDir>) const = 0;
    virtual void eval(std::span<const ad::Hyper>, std::span<ad::Hyper>) const = 0;
  };
  template <class F>
  struct Impl final : Base {
    F f;
    explicit Impl(F fn) : f(std::move(fn)) {}
    void eval(std::span<const double> x, std::span<double> y) const override { f(x, y); }
    void eval(std::span<const ad::Dual> x, std::span<ad::Dual> y) const override { f(x, y); }
    void eval(std::span<const ad::Grad> x, std::span<ad::Grad> y) const override { f(x, y); }
    void eval(std::span<const ad::GradDir> x, std::span<ad::GradDir> y) const override { f(x, y); }
    void eval(std::span<const ad::Hyper> x, std::span<ad::Hyper> y) const override { f(x, y); }
  };

public:
  VectorFunc() = default;

  template <class F>
  static VectorFunc make(int n_in, int n_out, F f) {
    VectorFunc v;
    v.n_in_ = n_in;
    v.n_out_ = n_out;
    v.impl_ = std::make_shared<Impl<F>>(std::move(f));
    return v;
  }

  int n_in() const { return n_in_; }
  int n_out() const { return n_out_; }
  explicit operator bool() const { return impl_ != nullptr; }

  template <class T>
  void operator()(std::span<const T> x, std::span<T> y) const {
    impl_->eval(x, y);
  }

private:
  int n_in_ = 0, n_out_ = 0;
  std::shared_ptr<const Base> impl_;
};

// Controlled vector field xdot = f(x, u), same multi-scalar treatment.
class FieldFunc {
  struct Base {
    virtual ~Base() = default;
    virtual void eval(std::span<const double>, std::span<const double>, std::span<double>) const = 0;
    virtual void eval(std::span<const ad::Dual>, std::span<const ad::Dual>, std::span<ad::Dual>) const = 0;
    virtual void eval(std::span<const ad::Grad>, std::span<const ad::Grad>, std::span<ad::Grad>) const = 0;
    virtual void eval(std::span<const ad::GradDir>, std::span<const ad::GradDir>, std::span<ad::GradDir>) const = 0;
    virtual void eval(std::span<const ad::Hyper>, std::span<const ad::Hyper>, std::span<ad::Hyper>) const = 0;
  };
  template <class F>
  struct Impl final : Base {
    F f;
    explicit Impl(F fn) : f(std::move(fn)) {}
    void eval(std::span<const double> x, std::span<const double> u, std::span<double> y) const override { f(x, u, y); }
    void eval(std::span<const ad::Dual> x, std::span<const ad::Dual> u, std::span<ad::Dual> y) const override {
      f(x, u, y);
    }
    void eval(std::span<const ad::Grad> x, std::span<const ad::Grad> u, std::span<ad::Grad> y) const override {
      f(x, u, y);
    }
    void eval(std::span<const ad::GradDir> x, std::span<const ad::GradDir> u,
              std::span<ad::GradDir> y) const override {
      f(x, u, y);
    }
    void eval(std::span<const ad::Hyper> x, std::span<const ad::Hyper> u, std::span<ad::Hyper> y) const override {
      f(x, u, y);
    }
  };

public:
  FieldFunc() = default;

  template <class F>
  static FieldFunc make(int n_x, int n_u, F f) {
    FieldFunc v;
    v.n_x_ = n_x;
    v.n_u_ = n_u;
    v.impl_ = std::make_shared<Impl<F>>(std::move(f));
    return v;
  }

  int n_x() const { return n_x_; }
  int n_u() const { return n_u_; }
  explicit operator bool() const { return impl_ != nullptr; }

  template <class T>
  void operator()(std::span<const T> x, std::span<const T> u, std::span<T> y) const {
    impl_->eval(x, u, y);
  }

private:
  int n_x_ = 0, n_u_ = 0;
  std::shared_ptr<const Base> impl_;
};

struct AdEval {
  Vec value;     // f(x)
  Mat jacobian;  // n_out x n, exact to roundoff
};

/// Forward-mode evaluation of value and Jacobian (gradient row for scalar
/// functions) in a single sweep.
AdEval ad_eval(const VectorFunc& f, std::span<const double> x);

/// Dense Hessian of a scalar function via pairwise hyper-dual sweeps.
Mat ad_hessian(const VectorFunc& f, std::span<const double> x);

}  // namespace timefreeze
