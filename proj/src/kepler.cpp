#include "parabolica/kepler.hpp"

#include <algorithm>
#include <cmath>

#include "parabolica/interpolate.hpp"
#include "parabolica/ode.hpp"
#include "parabolica/quadrature.hpp"

namespace parabolica {

void HomogeneousProblem::validate() const {
    if (!(mu > 0.0)) throw DomainError("mu must be positive");
    if (!(alpha >= 1.0 && alpha < 2.0)) throw DomainError("alpha must lie in [1,2)");
}

double HomogeneousProblem::momentum_limit() const { return std::sqrt(2.0 * mu / alpha); }

double gamma_const(double alpha, double mu) {
    HomogeneousProblem{mu, alpha}.validate();
    return std::pow(std::sqrt(mu / (2.0 * alpha)) * (2.0 + alpha), 2.0 / (2.0 + alpha));
}

double rho_star(const HomogeneousProblem& problem) {
    problem.validate();
    return std::pow(problem.alpha / (2.0 * problem.mu), 1.0 / (2.0 - problem.alpha));
}

double radial_F(const HomogeneousProblem& problem, double rho) {
    problem.validate();
    if (!(rho > 0.0)) throw DomainError("rho must be positive");
    return 0.5 / (rho * rho) - problem.mu / (problem.alpha * std::pow(rho, problem.alpha));
}

double pericentre_radius(const HomogeneousProblem& problem, double c) {
    problem.validate();
    if (c == 0.0) throw DegenerateRectilinear("zero angular momentum has no pericentre");
    return std::pow(problem.alpha * c * c / (2.0 * problem.mu), 1.0 / (2.0 - problem.alpha));
}

namespace {

/// Radial zero-energy machinery for angular momentum c:
/// S(r) = rdot^2 = 2 mu/(a r^a) - c^2/r^2, with the pericentre square-root
/// substitution r = r_peri + e^2 removed through Q(e) = S(r_peri+e^2)/e^2.
/// The pericentre identity c^2 = 2 mu r_peri^(2-a)/a turns S into
/// (2mu/a) r^-2 (r^(2-a) - r_peri^(2-a)), which expm1/log1p evaluate without
/// cancellation at any distance from the pericentre.
struct RadialSystem {
    double mu, a, c, r_peri;

    explicit RadialSystem(const HomogeneousProblem& p, double c_)
        : mu(p.mu), a(p.alpha), c(c_), r_peri(pericentre_radius(p, c_)) {}

    double S(double r) const {
        double gap = std::expm1((2.0 - a) * std::log1p((r - r_peri) / r_peri));
        return (2.0 * mu / a) * std::pow(r_peri, 2.0 - a) * gap / (r * r);
    }
    // Q(e) = S(r_peri + e^2) / e^2, extended smoothly through e = 0.
    double Q(double e) const {
        double u = e * e;
        double r = r_peri + u;
        double ratio = (u == 0.0)
                           ? (2.0 - a) / r_peri
                           : std::expm1((2.0 - a) * std::log1p(u / r_peri)) / u;
        return (2.0 * mu / a) * std::pow(r_peri, 2.0 - a) * ratio / (r * r);
    }

    double time_to(double R) const {
        if (R < r_peri * (1.0 - 1e-12)) throw DomainError("target radius below pericentre");
        if (R <= r_peri) return 0.0;
        double e_max = std::sqrt(R - r_peri);
        return integrate_adaptive([this](double e) { return 2.0 / std::sqrt(Q(e)); }, 0.0, e_max);
    }

    // angle swept from pericentre out to radius R (one branch, unsigned)
    double span_to(double R) const {
        if (R < r_peri * (1.0 - 1e-12)) throw DomainError("target radius below pericentre");
        if (R <= r_peri) return 0.0;
        double e_max = std::sqrt(R - r_peri);
        double ac = std::abs(c);
        return integrate_adaptive(
            [this, ac](double e) {
                double r = r_peri + e * e;
                return 2.0 * ac / (r * r * std::sqrt(Q(e)));
            },
            0.0, e_max);
    }

    // angle swept from radius R out to infinity (one branch, unsigned),
    // via the compactifying substitution eta = r^((a-2)/2).
    double span_tail(double R) const {
        double A = std::pow(r_peri, 0.5 * (a - 2.0));
        double eta_max = std::pow(R, 0.5 * (a - 2.0));
        return (2.0 / (2.0 - a)) *
               integrate_adaptive(
                   [A](double eta) { return 1.0 / std::sqrt((A - eta) * (A + eta)); }, 0.0,
                   eta_max);
    }
};

}  // namespace

double time_to_radius(const HomogeneousProblem& problem, double c, double R_target) {
    problem.validate();
    const double climit = problem.momentum_limit();
    if (!(c * c < climit * climit) || c == 0.0)
        throw NoSolution("angular momentum outside (0, sqrt(2 mu/alpha))");
    RadialSystem sys(problem, 1.0);  // rescaled unit-momentum system
    return sys.time_to(R_target);
}

double span_to_radius(const HomogeneousProblem& problem, double c, double rho) {
    problem.validate();
    if (c == 0.0) throw DegenerateRectilinear("zero angular momentum sweeps no angle");
    RadialSystem sys(problem, c);
    return sys.span_to(rho);
}

double theta_span(const HomogeneousProblem& problem, double c) {
    problem.validate();
    if (c == 0.0) throw DegenerateRectilinear("zero angular momentum sweeps no angle");
    if (!(std::abs(c) < problem.momentum_limit()))
        throw NoSolution("momentum too large for unit boundary radius");
    RadialSystem sys(problem, c);
    return (c > 0 ? 1.0 : -1.0) * 2.0 * sys.span_to(1.0);
}

double theta_span_closed(const HomogeneousProblem& problem, double c) {
    problem.validate();
    if (c == 0.0) throw DegenerateRectilinear("zero angular momentum sweeps no angle");
    if (!(std::abs(c) < problem.momentum_limit()))
        throw NoSolution("momentum too large for unit boundary radius");
    double s = std::asin(std::abs(c) * std::sqrt(problem.alpha / (2.0 * problem.mu)));
    return (c > 0 ? 1.0 : -1.0) * 4.0 / (2.0 - problem.alpha) * (0.5 * kPi - s);
}

double entire_span(const HomogeneousProblem& problem, double c) {
    problem.validate();
    if (c == 0.0) throw DegenerateRectilinear("zero angular momentum sweeps no angle");
    RadialSystem sys(problem, c);
    // split where the compactified far variable sits at half its range
    double R_mid = sys.r_peri * std::pow(2.0, 2.0 / (2.0 - problem.alpha));
    return 2.0 * (sys.span_to(R_mid) + sys.span_tail(R_mid));
}

double entire_span_limit(double alpha) { return 2.0 * kPi / (2.0 - alpha); }

Vec2 KeplerArc::position(size_t i) const {
    const auto& s = samples[i];
    return {s.r * std::cos(s.theta), s.r * std::sin(s.theta)};
}

Vec2 KeplerArc::velocity(size_t i) const {
    const auto& s = samples[i];
    double ct = std::cos(s.theta), st = std::sin(s.theta);
    return {s.r_dot * ct - s.r * st * s.theta_dot, s.r_dot * st + s.r * ct * s.theta_dot};
}

double KeplerArc::energy_residual(size_t i) const {
    const auto& s = samples[i];
    return 0.5 * (s.r_dot * s.r_dot + s.r * s.r * s.theta_dot * s.theta_dot) -
           problem.mu / (problem.alpha * std::pow(s.r, problem.alpha));
}

double KeplerArc::angmom_residual(size_t i) const {
    const auto& s = samples[i];
    return s.r * s.r * s.theta_dot - angular_momentum;
}

KeplerArc rectilinear_arc(const HomogeneousProblem& problem, double t0, const Vec2& direction,
                          Branch branch, double t_begin, double t_end, int n_samples) {
    problem.validate();
    if (std::abs(direction.norm() - 1.0) > 1e-9) throw DomainError("direction must be a unit vector");
    if (!(t_end > t_begin)) throw DomainError("empty time interval");
    if (t_begin < t0 && t_end > t0)
        throw DomainError("no entire rectilinear parabolic arc: interval must not span t0");
    if (branch == Branch::Future && t_begin < t0) throw DomainError("future branch lies after t0");
    if (branch == Branch::Past && t_end > t0) throw DomainError("past branch lies before t0");

    const double g = gamma_const(problem.alpha, problem.mu);
    const double k = 2.0 / (2.0 + problem.alpha);
    const double theta0 = std::atan2(direction.y(), direction.x());

    KeplerArc arc;
    arc.problem = problem;
    arc.angular_momentum = 0.0;
    arc.rho_star_attained = 0.0;
    double h = (t_end - t_begin) / n_samples;
    for (int i = 0; i <= n_samples; ++i) {
        double t = t_begin + i * h;
        double u = std::abs(t - t0);
        if (u == 0.0) continue;  // the collision instant itself is excluded
        ArcSample s;
        s.t = t;
        s.r = g * std::pow(u, k);
        s.r_dot = (t > t0 ? 1.0 : -1.0) * g * k * std::pow(u, k - 1.0);
        s.theta = theta0;
        s.theta_dot = 0.0;
        arc.samples.push_back(s);
    }
    return arc;
}

KeplerArc shoot(const HomogeneousProblem& problem, double theta1, double theta2, int l,
                int n_samples) {
    problem.validate();
    const double target = theta2 - theta1 + 2.0 * kPi * l;
    const double span_max = entire_span_limit(problem.alpha);
    if (target == 0.0) throw DegenerateEndpoints("coincident endpoints with zero rotation");
    if (!(std::abs(target) < span_max))
        throw NoSolutionInClass("|theta2 - theta1 + 2 pi l| must be below 2 pi/(2-alpha)");

    const double sign = (target > 0) ? 1.0 : -1.0;
    const double goal = std::abs(target);
    const double c_max = problem.momentum_limit();

    auto span_of = [&](double c_abs) { return theta_span(problem, c_abs); };

    // Theta is strictly decreasing in |c|: bracket then bisect.
    double lo = 0.5 * c_max;
    while (span_of(lo) <= goal) {
        lo *= 0.5;
        if (lo < 1e-300) throw NumericalError("failed to bracket the shooting map");
    }
    double hi = c_max * (1.0 - 1e-13);
    if (span_of(hi) >= goal) throw NumericalError("failed to bracket the shooting map");
    for (int it = 0; it < 200 && (hi - lo) > 1e-12 * c_max; ++it) {
        double mid = 0.5 * (lo + hi);
        (span_of(mid) > goal ? lo : hi) = mid;
    }
    double c_abs = 0.5 * (lo + hi);
    if (std::abs(span_of(c_abs) - goal) > 1e-10)
        throw NumericalError("shooting bisection did not meet the span tolerance");
    const double c = sign * c_abs;

    // Sample uniformly in pericentre time: integrate the regularised radial
    // variable eta = sqrt(r - r_peri) together with the polar angle.
    RadialSystem sys(problem, c);
    const double T_half = sys.time_to(1.0);
    if (n_samples % 2 != 0) ++n_samples;
    const int half = n_samples / 2;

    std::vector<double> times(half + 1);
    for (int j = 0; j <= half; ++j) times[j] = T_half * j / half;
    OdeRhs rhs = [&sys, c](double, const VecX& y) {
        VecX dy(2);
        double r = sys.r_peri + y[0] * y[0];
        dy[0] = 0.5 * std::sqrt(sys.Q(y[0]));
        dy[1] = c / (r * r);
        return dy;
    };
    VecX y0(2);
    y0 << 0.0, 0.0;
    OdeOptions opts;
    opts.rel_tol = 1e-12;
    opts.abs_tol = 1e-13;
    auto states = integrate_sampled(rhs, 0.0, y0, times, opts);

    const double theta_peri = theta1 + 0.5 * sign * goal;
    KeplerArc arc;
    arc.problem = problem;
    arc.angular_momentum = c;
    arc.rho_star_attained = sys.r_peri;
    arc.rotation_index = l;
    arc.samples.resize(n_samples + 1);
    for (int j = 0; j <= half; ++j) {
        double e = states[j][0];
        double r = sys.r_peri + e * e;
        double dth = states[j][1];  // unsigned sweep from pericentre
        ArcSample fwd;
        fwd.t = times[j];
        fwd.r = r;
        fwd.r_dot = (j == 0) ? 0.0 : std::sqrt(std::max(0.0, sys.S(r)));
        fwd.theta = theta_peri + dth;
        fwd.theta_dot = c / (r * r);
        arc.samples[half + j] = fwd;
        ArcSample bwd = fwd;
        bwd.t = -times[j];
        bwd.theta = theta_peri - dth;
        bwd.r_dot = -fwd.r_dot;
        arc.samples[half - j] = bwd;
    }
    return arc;
}

double action_of_arc(const KeplerArc& arc) {
    const auto& s = arc.samples;
    if (s.size() < 3) throw DomainError("arc too short for quadrature");
    if (arc.angular_momentum != 0.0) {
        // zero energy makes the Lagrangian 2V; integrate radially with the
        // pericentre substitution — uniform time samples cannot resolve the
        // 2V spike once the pericentre gets small
        RadialSystem sys(arc.problem, arc.angular_momentum);
        const double mu = arc.problem.mu, a = arc.problem.alpha;
        double r_lo = s.front().r, r_hi = s.back().r;
        auto branch = [&](double R) {
            if (R <= sys.r_peri) return 0.0;
            return integrate_adaptive(
                [&](double e) {
                    double r = sys.r_peri + e * e;
                    return 4.0 * mu / (a * std::pow(r, a)) / std::sqrt(sys.Q(e));
                },
                0.0, std::sqrt(R - sys.r_peri));
        };
        return branch(r_lo) + branch(r_hi);
    }
    // rectilinear pieces carry no pericentre passage; trapezoid suffices
    auto lagrangian = [&](size_t i) {
        const auto& p = s[i];
        double kin = 0.5 * (p.r_dot * p.r_dot + p.r * p.r * p.theta_dot * p.theta_dot);
        return kin + arc.problem.mu / (arc.problem.alpha * std::pow(p.r, arc.problem.alpha));
    };
    double sum = 0.0;
    for (size_t i = 0; i + 1 < s.size(); ++i)
        sum += 0.5 * (lagrangian(i) + lagrangian(i + 1)) * (s[i + 1].t - s[i].t);
    return sum;
}

double action_bound(const HomogeneousProblem& problem) {
    problem.validate();
    return std::sqrt(2.0 * problem.mu / problem.alpha) * 4.0 / (2.0 - problem.alpha);
}

namespace {

// largest integer strictly below x (with a guard for x sitting on an integer)
int strict_floor(double x) {
    double r = std::round(x);
    if (std::abs(x - r) < 1e-9) return static_cast<int>(r) - 1;
    return static_cast<int>(std::floor(x));
}

}  // namespace

IndexCounters index_counters(double alpha) {
    if (!(alpha >= 1.0 && alpha < 2.0)) throw DomainError("alpha must lie in [1,2)");
    IndexCounters out;
    out.i = std::max(1, strict_floor(2.0 / (2.0 - alpha)));
    out.i_star = std::max(0, strict_floor(1.0 / (2.0 - alpha)));
    return out;
}

int perpendicular_index(const HomogeneousProblem& problem, double L, int n_nodes) {
    problem.validate();
    if (!(L > 0.0)) throw DomainError("L must be positive");
    if (n_nodes < 2) throw DomainError("need at least two nodes");

    // entire arc with unit pericentre radius: c^2 = 2 mu / alpha
    const double c2 = 2.0 * problem.mu / problem.alpha;
    OdeRhs rhs = [&](double, const VecX& y) {
        VecX dy(2);
        dy[0] = y[1];
        dy[1] = c2 / std::pow(y[0], 3) - problem.mu * std::pow(y[0], -problem.alpha - 1.0);
        return dy;
    };
    const int n_dense = std::max(4096, 2 * n_nodes);
    std::vector<double> dense_t(n_dense + 1);
    for (int i = 0; i <= n_dense; ++i) dense_t[i] = L * i / n_dense;
    VecX y0(2);
    y0 << 1.0, 0.0;
    OdeOptions opts;
    opts.rel_tol = 1e-11;
    opts.abs_tol = 1e-12;
    auto states = integrate_sampled(rhs, 0.0, y0, dense_t, opts);
    VecX knots(n_dense + 1);
    MatX vals(1, n_dense + 1);
    for (int i = 0; i <= n_dense; ++i) {
        knots[i] = dense_t[i];
        vals(0, i) = states[i][0];
    }
    CubicSpline r_of_t(knots, vals);

    // finite-difference quadratic form on interior nodes; the negative
    // eigenvalue count comes from the Sturm (LDL) recurrence.
    const int n = n_nodes;
    const double h = 2.0 * L / (n + 1);
    const double off = -1.0 / (h * h);
    int count = 0;
    double d_prev = 0.0;
    for (int i = 1; i <= n; ++i) {
        double t = -L + i * h;
        double r = r_of_t.eval(std::abs(t))[0];
        double q = problem.mu * std::pow(r, -problem.alpha - 2.0);
        double diag = 2.0 / (h * h) - q;
        double d = (i == 1) ? diag : diag - off * off / d_prev;
        if (std::abs(d) < 1e-300) throw NumericalError("singular pivot in index count");
        if (d < 0.0) ++count;
        d_prev = d;
    }
    return count;
}

}  // namespace parabolica
