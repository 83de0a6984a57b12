#include "parabolica/ode.hpp"

#include <algorithm>
#include <cmath>

#include "parabolica/errors.hpp"

namespace parabolica {

namespace {

// Dormand-Prince RK5(4)7M coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// embedded 4th-order weights
constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                 e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

}  // namespace

DormandPrince::DormandPrince(OdeRhs rhs, double t0, VecX y0, const OdeOptions& opts)
    : rhs_(std::move(rhs)), opts_(opts), t_(t0), t_prev_(t0), y_(std::move(y0)) {
    y_prev_ = y_;
    f_ = rhs_(t_, y_);
    f_prev_ = f_;
    h_ = opts_.initial_step;
}

double DormandPrince::error_norm(const VecX& y_new, const VecX& err) const {
    double norm = 0.0;
    for (int i = 0; i < y_.size(); ++i) {
        double sk = opts_.abs_tol + opts_.rel_tol * std::max(std::abs(y_[i]), std::abs(y_new[i]));
        double q = err[i] / sk;
        norm += q * q;
    }
    return std::sqrt(norm / y_.size());
}

bool DormandPrince::step(double t_limit) {
    const double dir = (t_limit >= t_) ? 1.0 : -1.0;
    if (t_ == t_limit) return false;

    if (h_ == 0.0) {
        // crude initial step from the derivative scale
        double scale = f_.cwiseAbs().maxCoeff() + 1e-12;
        h_ = std::min(1e-4 * (1.0 + y_.cwiseAbs().maxCoeff()) / scale, std::abs(t_limit - t_));
        h_ = std::min(h_, opts_.max_step);
    }

    VecX k2, k3, k4, k5, k6, k7, y_new, err;
    for (;;) {
        if (++n_steps_ > opts_.max_steps) throw NumericalError("ODE step limit exceeded");
        double h = dir * std::min({std::abs(h_), opts_.max_step, std::abs(t_limit - t_)});
        const VecX& k1 = f_;
        k2 = rhs_(t_ + c2 * h, y_ + h * (a21 * k1));
        k3 = rhs_(t_ + c3 * h, y_ + h * (a31 * k1 + a32 * k2));
        k4 = rhs_(t_ + c4 * h, y_ + h * (a41 * k1 + a42 * k2 + a43 * k3));
        k5 = rhs_(t_ + c5 * h, y_ + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        k6 = rhs_(t_ + h, y_ + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        y_new = y_ + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        k7 = rhs_(t_ + h, y_new);
        err = h * ((b1 - e1) * k1 + (b3 - e3) * k3 + (b4 - e4) * k4 + (b5 - e5) * k5 +
                   (b6 - e6) * k6 - e7 * k7);
        double en = error_norm(y_new, err);
        if (en <= 1.0 || std::abs(h) <= 1e-14 * (std::abs(t_) + 1.0)) {
            t_prev_ = t_;
            y_prev_ = y_;
            f_prev_ = f_;
            t_ = t_ + h;
            y_ = y_new;
            f_ = k7;  // FSAL
            double fac = (en > 0.0) ? 0.9 * std::pow(en, -0.2) : 5.0;
            h_ = std::abs(h) * std::clamp(fac, 0.2, 5.0);
            if (std::abs(t_ - t_limit) <= 1e-12 * (std::abs(t_limit) + 1.0) ||
                (dir > 0 ? t_ >= t_limit : t_ <= t_limit))
                t_ = t_limit;
            return t_ != t_limit;
        }
        double fac = 0.9 * std::pow(en, -0.2);
        h_ = std::abs(h) * std::clamp(fac, 0.1, 0.9);
    }
}

VecX DormandPrince::interpolate(double tq) const {
    const double h = t_ - t_prev_;
    if (h == 0.0) return y_;
    const double s = (tq - t_prev_) / h;
    const double s2 = s * s, s3 = s2 * s;
    // cubic Hermite
    double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2,
           h11 = s3 - s2;
    return h00 * y_prev_ + (h10 * h) * f_prev_ + h01 * y_ + (h11 * h) * f_;
}

VecX integrate_to(const OdeRhs& rhs, double t0, const VecX& y0, double t1,
                  const OdeOptions& opts) {
    DormandPrince stepper(rhs, t0, y0, opts);
    while (stepper.step(t1)) {}
    return stepper.y();
}

std::vector<VecX> integrate_sampled(const OdeRhs& rhs, double t0, const VecX& y0,
                                    const std::vector<double>& sample_times,
                                    const OdeOptions& opts) {
    std::vector<VecX> out;
    out.reserve(sample_times.size());
    if (sample_times.empty()) return out;
    DormandPrince stepper(rhs, t0, y0, opts);
    const double t_end = sample_times.back();
    size_t next = 0;
    const double dir = (t_end >= t0) ? 1.0 : -1.0;
    while (next < sample_times.size() && dir * (sample_times[next] - t0) <= 0.0) {
        out.push_back(stepper.interpolate(sample_times[next]));
        ++next;
    }
    bool more = true;
    while (next < sample_times.size()) {
        if (more) more = stepper.step(t_end);
        while (next < sample_times.size() && dir * (stepper.t() - sample_times[next]) >= 0.0) {
            out.push_back(stepper.interpolate(sample_times[next]));
            ++next;
        }
        if (!more && next < sample_times.size())
            throw NumericalError("sample time beyond integration range");
    }
    return out;
}

}  // namespace parabolica
