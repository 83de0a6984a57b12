#pragma once

#include <optional>
#include <vector>

#include "parabolica/errors.hpp"
#include "parabolica/types.hpp"

namespace parabolica {

/// The alpha-homogeneous single-centre problem  x'' = -mu x / |x|^(alpha+2).
struct HomogeneousProblem {
    double mu = 1.0;
    double alpha = 1.0;

    void validate() const;
    double momentum_limit() const;  // sqrt(2 mu / alpha), admissible |c| for unit endpoints
};

struct ArcSample {
    double t;
    double r;
    double theta;
    double r_dot;
    double theta_dot;
};

/// Zero-energy planar arc of the homogeneous problem, sampled uniformly in
/// time and symmetric about the pericentre passage.
struct KeplerArc {
    HomogeneousProblem problem;
    double angular_momentum = 0.0;
    std::vector<ArcSample> samples;
    double rho_star_attained = 0.0;           // pericentre radius of this arc
    std::optional<int> rotation_index;

    Vec2 position(size_t i) const;
    Vec2 velocity(size_t i) const;
    double energy_residual(size_t i) const;   // 1/2(rdot^2 + r^2 thdot^2) - mu/(a r^a)
    double angmom_residual(size_t i) const;   // r^2 thdot - c
};

/// gamma_{alpha,mu} = (sqrt(mu/2alpha) (2+alpha))^(2/(2+alpha)): the
/// prefactor of the parabolic growth law r ~ gamma t^(2/(2+alpha)).
double gamma_const(double alpha, double mu);

/// Pericentre radius of the rescaled unit-momentum system, (alpha/2mu)^(1/(2-alpha)).
double rho_star(const HomogeneousProblem& problem);

/// Radial effective function of the unit-momentum system; F(rho*) = 0,
/// F > 0 below the pericentre radius and F < 0 above it, and the radial
/// speed satisfies rdot = sqrt(-2 F(r)).
double radial_F(const HomogeneousProblem& problem, double rho);

/// Physical pericentre radius for angular momentum c.
double pericentre_radius(const HomogeneousProblem& problem, double c);

/// Time from pericentre to R_target along the rescaled unit-momentum arc
/// (quadrature with the sqrt substitution at the pericentre).
double time_to_radius(const HomogeneousProblem& problem, double c, double R_target);

enum class Branch { Future, Past };

/// Zero-angular-momentum arc r(t) = gamma |t - t0|^(2/(2+alpha)) on
/// [t_begin, t_end], which must sit on one side of t0.
KeplerArc rectilinear_arc(const HomogeneousProblem& problem, double t0, const Vec2& direction,
                          Branch branch, double t_begin, double t_end, int n_samples = 1024);

/// Angle swept between the two unit-radius boundary crossings by the arc of
/// angular momentum c (signed; strictly decreasing in |c|).
double theta_span(const HomogeneousProblem& problem, double c);

/// Same quantity in closed form (arcsin); used as cross-check.
double theta_span_closed(const HomogeneousProblem& problem, double c);

/// Total angle swept by the entire arc, t -> +-infinity, computed by
/// quadrature (pericentre piece + compactified far piece).
double entire_span(const HomogeneousProblem& problem, double c);

/// The limit value 2 pi / (2 - alpha).
double entire_span_limit(double alpha);

/// Angle swept from the pericentre out to radius rho (one branch), by quadrature.
double span_to_radius(const HomogeneousProblem& problem, double c, double rho);

/// Unique (up to time translation) parabolic arc joining the unit-circle
/// points at angles theta1, theta2 with rotation datum l; solvable iff
/// 0 != |theta2 - theta1 + 2 pi l| < 2 pi/(2 - alpha).
KeplerArc shoot(const HomogeneousProblem& problem, double theta1, double theta2, int l,
                int n_samples = 2048);

/// Action integral of the arc (Simpson over the uniform time samples).
double action_of_arc(const KeplerArc& arc);

/// Upper bound sqrt(2 mu/alpha) * 4/(2-alpha) for unit-endpoint arcs.
double action_bound(const HomogeneousProblem& problem);

struct IndexCounters {
    int i;        // max{k >= 1 : k < 2/(2-alpha)}
    int i_star;   // max{k >= 0 : k < 1/(2-alpha)}
};
IndexCounters index_counters(double alpha);

/// Counts the negative eigenvalues of the 1-D quadratic form
///   q(phi) = int_{-L}^{L} phi'^2 - mu |v(t)|^{-(alpha+2)} phi^2 dt
/// on zero-boundary node functions, where v is the entire parabolic arc with
/// unit pericentre radius.
int perpendicular_index(const HomogeneousProblem& problem, double L, int n_nodes);

}  // namespace parabolica
