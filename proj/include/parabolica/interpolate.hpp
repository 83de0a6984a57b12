#pragma once

#include <vector>

#include "parabolica/types.hpp"

namespace parabolica {

/// Natural cubic spline through (t_i, values.col(i)); channels are rows.
class CubicSpline {
  public:
    CubicSpline() = default;
    CubicSpline(VecX t, MatX values);

    VecX eval(double t) const;
    VecX deriv(double t) const;
    VecX second_deriv(double t) const;

    double t_min() const { return t_[0]; }
    double t_max() const { return t_[t_.size() - 1]; }

  private:
    int segment(double t) const;

    VecX t_;
    MatX y_;   // channels x knots
    MatX m_;   // second derivatives at knots
};

}  // namespace parabolica
