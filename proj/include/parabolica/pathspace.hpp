#pragma once

#include <utility>
#include <vector>

#include "parabolica/potential.hpp"
#include "parabolica/types.hpp"

namespace parabolica {

/// Sampled path u on the uniform grid t_k = -1 + 2k/n with fixed endpoints.
struct DiscretePath {
    Mat3X nodes;  // 3 x (n+1)

    int n() const { return static_cast<int>(nodes.cols()) - 1; }
    double h() const { return 2.0 / n(); }
    double t(int k) const { return -1.0 + 2.0 * k / n(); }
    Vec3 q_minus() const { return nodes.col(0); }
    Vec3 q_plus() const { return nodes.col(n()); }

    void validate() const;  // n >= 16
};

inline constexpr double kPathCollisionThreshold = 1e-6;

/// Distance of the path polyline (nodes and segment midpoints) to the centre set.
double path_min_distance(const DiscretePath& path, const CentreConfiguration& config);
bool collision_free(const DiscretePath& path, const CentreConfiguration& config,
                    double threshold = kPathCollisionThreshold);

/// Strong-force modification V_beta = V + beta U, where
///   U(x) = sum_i m_i / (2 |x-c_i|^2) Psi(|x-c_i|^2)
/// and Psi is a C^2 quintic cutoff, == 1 on [0, delta*] and == 0 on
/// [2 delta*, inf) in the squared-distance variable.
struct StrongForceModifier {
    double beta = 0.0;
    double delta_star = 0.0;

    double psi(double r) const;
    double psi_d(double r) const;
    double psi_dd(double r) const;
};

double modified_potential(const CentreConfiguration& config, const StrongForceModifier& mod,
                          const Vec3& x);
Vec3 modified_gradient(const CentreConfiguration& config, const StrongForceModifier& mod,
                       const Vec3& x);
Mat3 modified_hessian(const CentreConfiguration& config, const StrongForceModifier& mod,
                      const Vec3& x);

/// Discretized Maupertuis functional M_beta(u) = int |u'|^2 * int V_beta(u):
/// piecewise-linear kinetic term, trapezoid potential term.
double maupertuis_value(const DiscretePath& path, const StrongForceModifier& mod,
                        const CentreConfiguration& config);

/// Exact gradient of the discrete functional; endpoint columns are zero.
Mat3X maupertuis_gradient(const DiscretePath& path, const StrongForceModifier& mod,
                          const CentreConfiguration& config);

/// Exact Hessian with respect to the 3(n-1) interior coordinates.
MatX maupertuis_hessian(const DiscretePath& path, const StrongForceModifier& mod,
                        const CentreConfiguration& config);

/// omega_beta = (int |u'|^2 / (2 int V_beta(u)))^(1/2).
double omega_of(const DiscretePath& path, const StrongForceModifier& mod,
                const CentreConfiguration& config);

/// Zero-energy trajectory in true time with per-sample energy residual.
struct TrueTimeTrajectory {
    VecX times;
    Mat3X positions;
    Mat3X velocities;
    VecX h_residual;   // 1/2 |v|^2 - V_beta(x) per sample
    double omega = 0.0;

    int size() const { return static_cast<int>(times.size()); }
};

/// Reparameterizes u to x(t) = u(t/omega) on [-omega, omega] through a cubic
/// spline of the nodes; oversample controls samples per node interval.
TrueTimeTrajectory to_true_time(const DiscretePath& path, const StrongForceModifier& mod,
                                const CentreConfiguration& config, int oversample = 8);

/// Action integral int (1/2 |xdot|^2 + V(x)) dt over the trajectory samples.
double action_value(const TrueTimeTrajectory& trajectory, const CentreConfiguration& config);

/// Closed loop of paths sharing grid and endpoints, indexed by s_j = 2 pi j / M.
struct PathLoop {
    std::vector<DiscretePath> members;

    int loop_size() const { return static_cast<int>(members.size()); }
    void validate() const;  // M >= 8, common grid/endpoints
};

/// Degrees of the normalized maps (u - c_i)/|u - c_i| around the designated
/// centres, by signed solid-angle summation on the (s,t) grid. Throws
/// UnresolvedDegree when the sum is not within 0.1 of an integer.
std::pair<int, int> loop_degrees(const PathLoop& loop, const CentreConfiguration& config,
                                 int centre_1 = 0, int centre_2 = 1);

/// Degree about a single designated centre.
int loop_degree_about(const PathLoop& loop, const CentreConfiguration& config, int centre);

/// Polyline resampled to n+1 nodes equidistributed in the zero-energy travel
/// time ds/sqrt(2 V); this matches the parameterization of Maupertuis
/// critical points and makes good solver seeds.
DiscretePath path_from_polyline(const std::vector<Vec3>& polyline,
                                const CentreConfiguration& config, int n);

/// Loop of paths winding around centre `around`: each member is the spine
/// q- -> centre -> q+ displaced by a tube of radius `rho` at loop phase
/// 2 pi j / M. Degree +-1 around `around`, 0 around centres off the tube.
PathLoop make_winding_loop(const CentreConfiguration& config, const Vec3& q_minus,
                           const Vec3& q_plus, int around, double rho, int M, int n);

}  // namespace parabolica
