#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "parabolica/solver.hpp"

namespace parabolica {

/// Per-R solution metrics; trajectory times are centred so that the two
/// |x| = K crossings sit symmetrically about t = 0.
struct ContinuationRecord {
    double R = 0.0;
    TrueTimeTrajectory trajectory;
    double omega = 0.0;
    double time_shift = 0.0;            // (t- + t+)/2 removed from raw times
    double min_radius = 0.0;
    VecX min_centre_distances;
    double t_minus = 0.0, t_plus = 0.0; // shifted crossing times of |x| = K
    double Delta = 0.0;                 // (t+ - t-)/2
    double action = 0.0;
    int morse_index = 0;
    double boundary_error = 0.0;
    double max_energy_residual = 0.0;
    SolveStatus status = SolveStatus::Converged;
    bool polished = false;
};

/// High-accuracy multiple-shooting refinement of a discrete critical point
/// into an ODE solution of x'' = grad V(x) with x(+-omega) = q+-.
struct PolishResult {
    TrueTimeTrajectory trajectory;  // raw (uncentred) times
    double omega = 0.0;
    double boundary_error = 0.0;
    double action = 0.0;
    double min_radius = 0.0;
    VecX min_centre_distances;
    bool converged = false;
};
PolishResult polish_to_ode_solution(const CentreConfiguration& config, const Vec3& q_minus,
                                    const Vec3& q_plus, const TrueTimeTrajectory& seed,
                                    int segments = 32, int n_samples = 4096);

/// Morse index of the second variation of the action along the trajectory,
/// d^2A[h] = int |h'|^2 + h^T Hess V(x(t)) h dt on zero-boundary variations.
/// Assembled as a P1 form on a grid graded by the conformal measure
/// sqrt(V) dt, so close approaches stay resolved at any endpoint radius;
/// counted by block-tridiagonal LDL inertia.
int action_index(const TrueTimeTrajectory& trajectory, const CentreConfiguration& config,
                 int n_nodes = 4096);

/// Solves the fixed-endpoint problem at radius R: builds the admissible loop,
/// continues beta -> 0, polishes, measures. `warm` re-uses a previous record.
ContinuationRecord solve_at_R(const CentreConfiguration& config, const Vec3& xi_plus,
                              const Vec3& xi_minus, double R, const SolverOptions& opts,
                              const PotentialConstants& constants,
                              const ContinuationRecord* warm = nullptr);

struct HypothesisReport {
    std::vector<double> R_values;
    std::vector<double> min_radius;
    std::vector<double> centre_floor;    // min over centres of min_t |x - c_i|
    std::vector<double> width;           // t+ - t-
    std::vector<double> omega_gap;       // omega_R - t+
    std::vector<double> cauchy;          // sup distance on [-1,1] between consecutive solves
    std::vector<double> cauchy_ratio;

    bool min_radius_bounded = false;     // last <= 1.1 * median
    bool centre_distances_floored = false;  // floor >= 1e-3 over the schedule
    bool width_bounded = false;          // last <= 1.1 * median
    bool cauchy_halving = false;         // ratios <= 0.6
    bool omega_gap_growing = false;      // strictly increasing

    bool ok() const {
        return min_radius_bounded && centre_distances_floored && width_bounded &&
               cauchy_halving && omega_gap_growing;
    }
};

struct ScheduleResult {
    std::vector<ContinuationRecord> records;
    HypothesisReport report;
};

/// Assembles the hypothesis series and operational checks from solved records.
HypothesisReport build_hypothesis_report(const std::vector<ContinuationRecord>& records);

/// Warm-started solves over an increasing R schedule plus the operational
/// checks of the three approximation hypotheses and the Cauchy trend.
/// Throws HypothesisViolation at the end when a check fails (records are
/// still computed first) unless throw_on_violation is false.
ScheduleResult run_schedule(const CentreConfiguration& config, const Vec3& xi_plus,
                            const Vec3& xi_minus, const std::vector<double>& R_schedule,
                            const SolverOptions& opts, const PotentialConstants& constants,
                            bool throw_on_violation = true);

struct AsymptoticFit {
    double exponent = 0.0;
    double prefactor = 0.0;
    double residual = 0.0;           // rms of the log-log fit
    double window_lo = 0.0, window_hi = 0.0;
    Vec3 direction_end = Vec3::Zero();
    double s_variation_tail = 0.0;   // integral of |sdot| over the window
};

/// Log-log fit of r vs |t| on the outgoing tail window [10K, 0.8 R] in radius.
AsymptoticFit asymptotic_fit(const TrueTimeTrajectory& trajectory, double K, double R);

struct InequalityMargin {
    std::string name;
    double worst_margin = 1e300;
    int samples_checked = 0;

    void take_margin(double m) {
        worst_margin = std::min(worst_margin, m);
        ++samples_checked;
    }
};

struct DiagnosticsReport {
    std::vector<InequalityMargin> margins;
    bool ok(double tolerance = -1e-8) const {
        for (const auto& m : margins)
            if (!(m.worst_margin >= tolerance)) return false;
        return true;
    }
};

/// Pointwise / intervalwise evaluation of the far-field inequality suite
/// (Lagrange-Jacobi, angular momentum rate, travel-time bounds, s-variation)
/// on the samples with |x| >= K.
DiagnosticsReport diagnostics(const ContinuationRecord& record,
                              const CentreConfiguration& config,
                              const PotentialConstants& constants);

struct ScalingReport {
    double slope = 0.0;
    double intercept = 0.0;
    double theory_slope = 0.0;
    double slope_rel_err = 0.0;
    double offset_band = 0.0;              // max |A - slope * X|
    std::vector<double> offsets_vs_theory;  // A_i - theory_slope * X_i
    bool offsets_non_growing = false;
};

/// Fits A(R) against R^(1 - alpha/2) and compares with
/// sqrt(2m/alpha) * 4/(2-alpha).
ScalingReport level_scaling(const std::vector<ContinuationRecord>& records,
                            const CentreConfiguration& config);

}  // namespace parabolica
