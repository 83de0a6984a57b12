#pragma once

#include <functional>

#include "parabolica/types.hpp"

namespace parabolica {

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1,1].
struct GaussRule {
    VecX nodes;
    VecX weights;
};

/// Returns the cached n-point rule (computed once per order).
const GaussRule& gauss_legendre(int n);

/// Fixed-order Gauss-Legendre quadrature of f on [a,b].
double integrate_gl(const std::function<double(double)>& f, double a, double b, int order = 128);

/// Adaptive panel-splitting quadrature; each panel uses a 128-node rule and
/// the error estimate compares it against the 64-node rule.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-12, double abs_tol = 1e-14, int max_depth = 48);

}  // namespace parabolica
