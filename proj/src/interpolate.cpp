#include "parabolica/interpolate.hpp"

#include <algorithm>
#include <cmath>

#include "parabolica/errors.hpp"

namespace parabolica {

CubicSpline::CubicSpline(VecX t, MatX values) : t_(std::move(t)), y_(std::move(values)) {
    const int n = static_cast<int>(t_.size());
    if (n < 2 || y_.cols() != n) throw DomainError("spline needs >= 2 strictly increasing knots");
    for (int i = 0; i + 1 < n; ++i)
        if (!(t_[i + 1] > t_[i])) throw DomainError("spline knots must be strictly increasing");

    m_ = MatX::Zero(y_.rows(), n);
    if (n == 2) return;

    // Thomas solve of the natural-spline tridiagonal system, shared across channels.
    const int k = n - 2;
    VecX diag(k), sub(k), sup(k);
    MatX rhs(y_.rows(), k);
    for (int i = 0; i < k; ++i) {
        double h0 = t_[i + 1] - t_[i];
        double h1 = t_[i + 2] - t_[i + 1];
        sub[i] = h0;
        diag[i] = 2.0 * (h0 + h1);
        sup[i] = h1;
        rhs.col(i) = 6.0 * ((y_.col(i + 2) - y_.col(i + 1)) / h1 - (y_.col(i + 1) - y_.col(i)) / h0);
    }
    for (int i = 1; i < k; ++i) {
        double w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs.col(i) -= w * rhs.col(i - 1);
    }
    m_.col(k) = rhs.col(k - 1) / diag[k - 1];
    for (int i = k - 2; i >= 0; --i)
        m_.col(i + 1) = (rhs.col(i) - sup[i] * m_.col(i + 2)) / diag[i];
}

int CubicSpline::segment(double t) const {
    const int n = static_cast<int>(t_.size());
    auto it = std::upper_bound(t_.data(), t_.data() + n, t);
    int i = static_cast<int>(it - t_.data()) - 1;
    return std::clamp(i, 0, n - 2);
}

VecX CubicSpline::eval(double t) const {
    int i = segment(t);
    double h = t_[i + 1] - t_[i];
    double a = (t_[i + 1] - t) / h, b = (t - t_[i]) / h;
    return a * y_.col(i) + b * y_.col(i + 1) +
           ((a * a * a - a) * m_.col(i) + (b * b * b - b) * m_.col(i + 1)) * (h * h) / 6.0;
}

VecX CubicSpline::deriv(double t) const {
    int i = segment(t);
    double h = t_[i + 1] - t_[i];
    double a = (t_[i + 1] - t) / h, b = (t - t_[i]) / h;
    return (y_.col(i + 1) - y_.col(i)) / h +
           ((3 * b * b - 1) * m_.col(i + 1) - (3 * a * a - 1) * m_.col(i)) * h / 6.0;
}

VecX CubicSpline::second_deriv(double t) const {
    int i = segment(t);
    double h = t_[i + 1] - t_[i];
    double a = (t_[i + 1] - t) / h, b = (t - t_[i]) / h;
    return a * m_.col(i) + b * m_.col(i + 1);
}

}  // namespace parabolica
