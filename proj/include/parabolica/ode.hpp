#pragma once

#include <functional>
#include <vector>

#include "parabolica/types.hpp"

namespace parabolica {

/// Right-hand side signature: dy = f(t, y).
using OdeRhs = std::function<VecX(double, const VecX&)>;

struct OdeOptions {
    double rel_tol = 1e-11;
    double abs_tol = 1e-12;
    double max_step = 1e30;
    double initial_step = 0.0;   // 0 => automatic
    long max_steps = 20'000'000;
};

/// Adaptive Dormand-Prince 5(4) stepper. Integration direction is the sign
/// of (t_end - t_start); callers drive it step by step so they can sample,
/// accumulate quadratures or detect events between accepted steps.
class DormandPrince {
  public:
    DormandPrince(OdeRhs rhs, double t0, VecX y0, const OdeOptions& opts = {});

    /// Advances by one accepted step, not beyond t_limit. Returns false once
    /// t == t_limit.
    bool step(double t_limit);

    double t() const { return t_; }
    const VecX& y() const { return y_; }
    double t_prev() const { return t_prev_; }
    const VecX& y_prev() const { return y_prev_; }

    /// Dense evaluation inside the last accepted step (cubic Hermite on the
    /// stored endpoint derivatives).
    VecX interpolate(double t_query) const;

    long n_steps() const { return n_steps_; }

  private:
    double error_norm(const VecX& y_new, const VecX& err) const;

    OdeRhs rhs_;
    OdeOptions opts_;
    double t_, t_prev_;
    VecX y_, y_prev_;
    VecX f_, f_prev_;  // derivative at current / previous point (FSAL)
    double h_;
    long n_steps_ = 0;
};

/// Integrates from t0 to t1 and returns the final state.
VecX integrate_to(const OdeRhs& rhs, double t0, const VecX& y0, double t1,
                  const OdeOptions& opts = {});

/// Integrates and collects the solution at the requested sample times
/// (must be monotone in the direction of integration).
std::vector<VecX> integrate_sampled(const OdeRhs& rhs, double t0, const VecX& y0,
                                    const std::vector<double>& sample_times,
                                    const OdeOptions& opts = {});

}  // namespace parabolica
