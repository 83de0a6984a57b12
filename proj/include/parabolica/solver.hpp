#pragma once

#include <vector>

#include "parabolica/pathspace.hpp"

namespace parabolica {

struct SolverOptions {
    double tol_grad = 1e-8;          // relative to max(1, |M_beta|)
    int max_iters = 2000;
    int n_nodes = 256;
    int loop_size = 12;
    int beta_halvings = 20;          // schedule 1, 1/2, ..., 2^-halvings, 0
    unsigned long long seed = 0;
    double collision_threshold = kPathCollisionThreshold;
    int verbosity = 0;

    std::vector<double> beta_schedule() const;
};

enum class SolveStatus { Converged, NotConverged, GeneralizedCandidate, IndexViolation };

struct CriticalPoint {
    DiscretePath path;
    double beta = 0.0;
    double gradient_norm = 0.0;      // sup norm of the discrete gradient
    double maupertuis_value = 0.0;
    double omega = 0.0;
    int morse_index = 0;
    double min_centre_distance = 0.0;
    SolveStatus status = SolveStatus::Converged;
    int iterations = 0;
};

/// Morse index of the discrete Hessian: eigenvalues below -1e-8 * ||H||_inf.
int morse_index_of(const DiscretePath& path, const StrongForceModifier& mod,
                   const CentreConfiguration& config);

/// Independent count of the same eigenvalues through Householder
/// tridiagonalization and a Sturm sign sweep.
int negative_count_sturm(const MatX& H, double shift);

/// Descends M_beta over the interior nodes (L-BFGS with a monotone Armijo
/// line search, then damped Newton) until the gradient sup-norm falls below
/// tol_grad * max(1,|M|).
CriticalPoint minimize(const DiscretePath& path, const StrongForceModifier& mod,
                       const CentreConfiguration& config, const SolverOptions& opts);

/// Damped-Newton refinement towards a nearby critical point of any index.
CriticalPoint refine_critical_point(const DiscretePath& path, const StrongForceModifier& mod,
                                    const CentreConfiguration& config, const SolverOptions& opts);

/// Loop relaxation + argmax Newton refinement realizing the min-max level:
/// descends every member, re-tensions the loop in s under a degree guard, and
/// refines the argmax member once it stalls. The returned point carries
/// morse_index <= 1 or the IndexViolation flag.
CriticalPoint saddle_search(PathLoop loop, const StrongForceModifier& mod,
                            const CentreConfiguration& config, const SolverOptions& opts);

/// Warm-started saddle searches along a decreasing beta schedule ending at 0.
/// If the beta = 0 refinement collides, the last collision-free iterate is
/// returned flagged GeneralizedCandidate.
std::vector<CriticalPoint> beta_continuation(const PathLoop& loop,
                                             const CentreConfiguration& config,
                                             double delta_star,
                                             const std::vector<double>& beta_schedule,
                                             const SolverOptions& opts);

// ---------------------------------------------------------------------------
// Sperling regularization (alpha = 1)

/// State of the regularized flow: x is the offset from the designated centre,
/// y = dx/dtau, and w closes the system; dt/dtau = |x|.
struct RegularizedState {
    double tau = 0.0;
    Vec3 x = Vec3::Zero();
    Vec3 y = Vec3::Zero();
    Vec3 w = Vec3::Zero();
};

struct SperlingRhs {
    Vec3 dx, dy, dw;
};

RegularizedState to_regularized(const Vec3& x_phys, const Vec3& v_phys,
                                const CentreConfiguration& config, int centre, double tau = 0.0);

/// Right-hand side of z' = F(z).
SperlingRhs sperling_field(const RegularizedState& state, const CentreConfiguration& config,
                           int centre);

/// Integrates the regularized system across a close approach to the centre
/// (hand-off below delta*/10, exit with a factor-2 hysteresis) and maps back
/// to physical time. Requires alpha == 1.
TrueTimeTrajectory regularized_passage(const TrueTimeTrajectory& trajectory,
                                       const CentreConfiguration& config, int centre,
                                       double delta_star, int n_output = 2049);

/// Blow-up rescaling v(t) = (x(delta^(1+a/2) t + tau_min) - c_i)/delta around
/// the closest approach; residuals against the pure homogeneous problem are
/// reported as diagnostics.
struct BlowUpResult {
    TrueTimeTrajectory rescaled;
    double delta = 0.0;              // closest-approach distance
    double t_closest = 0.0;
    double max_ode_residual = 0.0;   // |v'' + m_i v / |v|^(a+2)| over samples
    double max_energy_mismatch = 0.0;
};
BlowUpResult blow_up_rescale(const TrueTimeTrajectory& trajectory,
                             const CentreConfiguration& config, int centre);

}  // namespace parabolica
