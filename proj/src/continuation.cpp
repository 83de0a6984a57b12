#include "parabolica/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "parabolica/interpolate.hpp"
#include "parabolica/ode.hpp"

namespace parabolica {

namespace {

OdeRhs newton_rhs(const CentreConfiguration& config) {
    return [&config](double, const VecX& s) {
        VecX ds(6);
        ds.segment<3>(0) = s.segment<3>(3);
        ds.segment<3>(3) = eval_gradV(config, s.segment<3>(0));
        return ds;
    };
}

// propagate one segment of the fixed-endpoint flow
VecX propagate(const CentreConfiguration& config, const VecX& start, double t0, double t1) {
    OdeOptions opts;
    opts.rel_tol = 1e-12;
    opts.abs_tol = 1e-12;
    return integrate_to(newton_rhs(config), t0, start, t1, opts);
}

}  // namespace

PolishResult polish_to_ode_solution(const CentreConfiguration& config, const Vec3& q_minus,
                                    const Vec3& q_plus, const TrueTimeTrajectory& seed,
                                    int segments, int n_samples) {
    const int S = segments;
    const double v_scale = std::sqrt(2.0 * eval_V(config, q_minus));
    const double x_scale = std::max(1.0, q_minus.norm());

    // unknowns: v0 (3), junction states (6 each), omega (1)
    const int dim = 3 + 6 * (S - 1) + 1;
    VecX u(dim);

    CubicSpline pos(seed.times, seed.positions);
    CubicSpline vel(seed.times, seed.velocities);
    double omega0 = seed.omega;
    {
        Vec3 v0 = vel.eval(-omega0);
        u.segment<3>(0) = v0;
        for (int j = 1; j < S; ++j) {
            double tau = -omega0 + 2.0 * omega0 * j / S;
            u.segment<3>(3 + 6 * (j - 1)) = pos.eval(tau);
            u.segment<3>(3 + 6 * (j - 1) + 3) = vel.eval(tau);
        }
        u[dim - 1] = omega0;
    }

    auto segment_start = [&](const VecX& uu, int j) {
        VecX s(6);
        if (j == 0) {
            s.segment<3>(0) = q_minus;
            s.segment<3>(3) = uu.segment<3>(0);
        } else {
            s = uu.segment<6>(3 + 6 * (j - 1));
        }
        return s;
    };

    auto propagate_segment = [&](const VecX& uu, int j) {
        double omega = uu[dim - 1];
        double t0 = -omega + 2.0 * omega * j / S;
        double t1 = -omega + 2.0 * omega * (j + 1) / S;
        return propagate(config, segment_start(uu, j), t0, t1);
    };

    // residual vector: energy (1), matches (6 each), terminal position (3)
    const int rdim = 1 + 6 * (S - 1) + 3;
    auto residual_from_ends = [&](const VecX& uu, const std::vector<VecX>& ends) {
        VecX r(rdim);
        Vec3 v0 = uu.segment<3>(0);
        r[0] = (0.5 * v0.squaredNorm() - eval_V(config, q_minus)) / (v_scale * v_scale);
        for (int j = 0; j + 1 < S; ++j) {
            VecX diff = ends[j] - uu.segment<6>(3 + 6 * j);
            r.segment<3>(1 + 6 * j) = diff.segment<3>(0) / x_scale;
            r.segment<3>(1 + 6 * j + 3) = diff.segment<3>(3) / v_scale;
        }
        r.segment<3>(rdim - 3) = (ends[S - 1].segment<3>(0) - q_plus) / x_scale;
        return r;
    };
    auto all_ends = [&](const VecX& uu) {
        std::vector<VecX> ends(S);
        for (int j = 0; j < S; ++j) ends[j] = propagate_segment(uu, j);
        return ends;
    };

    std::vector<VecX> ends = all_ends(u);
    VecX r = residual_from_ends(u, ends);
    double rnorm = r.cwiseAbs().maxCoeff();
    const double tol = 1e-10;
    bool converged = rnorm < tol;

    for (int it = 0; it < 30 && !converged; ++it) {
        // assemble the Jacobian column by column (finite differences; only
        // the segments touched by each unknown are re-propagated)
        MatX J = MatX::Zero(rdim, dim);
        for (int p = 0; p < 3; ++p) {  // v0 columns
            double eps = 1e-7 * std::max(0.1 * v_scale, std::abs(u[p]));
            VecX up = u;
            up[p] += eps;
            VecX end0 = propagate_segment(up, 0);
            VecX rp = VecX::Zero(rdim);
            Vec3 v0 = up.segment<3>(0);
            rp[0] = (0.5 * v0.squaredNorm() - eval_V(config, q_minus)) / (v_scale * v_scale);
            if (S > 1) {
                VecX diff = end0 - up.segment<6>(3);
                rp.segment<3>(1) = diff.segment<3>(0) / x_scale;
                rp.segment<3>(4) = diff.segment<3>(3) / v_scale;
                J.col(p).segment(0, 7) = (rp.segment(0, 7) - r.segment(0, 7)) / eps;
            } else {
                rp.segment<3>(rdim - 3) = (end0.segment<3>(0) - q_plus) / x_scale;
                J(0, p) = (rp[0] - r[0]) / eps;
                J.col(p).segment(rdim - 3, 3) =
                    (rp.segment(rdim - 3, 3) - r.segment(rdim - 3, 3)) / eps;
            }
        }
        for (int j = 1; j < S; ++j) {  // junction columns
            for (int q = 0; q < 6; ++q) {
                int col = 3 + 6 * (j - 1) + q;
                double scale_q = (q < 3) ? x_scale : v_scale;
                double eps = 1e-7 * std::max(0.1 * scale_q, std::abs(u[col]));
                // the -X_j part of match j-1 is exact
                J(1 + 6 * (j - 1) + q, col) = -1.0 / scale_q;
                VecX up = u;
                up[col] += eps;
                VecX endj = propagate_segment(up, j);
                if (j + 1 < S) {
                    VecX base = ends[j] - u.segment<6>(3 + 6 * j);
                    VecX pert = endj - u.segment<6>(3 + 6 * j);
                    for (int t = 0; t < 3; ++t) {
                        J(1 + 6 * j + t, col) = (pert[t] - base[t]) / (eps * x_scale);
                        J(1 + 6 * j + 3 + t, col) = (pert[3 + t] - base[3 + t]) / (eps * v_scale);
                    }
                } else {
                    for (int t = 0; t < 3; ++t)
                        J(rdim - 3 + t, col) =
                            (endj[t] - ends[S - 1][t]) / (eps * x_scale);
                }
            }
        }
        {  // omega column
            int col = dim - 1;
            double eps = 1e-7 * std::max(1.0, std::abs(u[col]));
            VecX up = u;
            up[col] += eps;
            std::vector<VecX> endsp = all_ends(up);
            VecX rp = residual_from_ends(up, endsp);
            J.col(col) = (rp - r) / eps;
        }

        VecX step = J.partialPivLu().solve(-r);
        if (!step.allFinite()) break;
        double alpha = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 12; ++bt, alpha *= 0.5) {
            VecX u_try = u + alpha * step;
            if (!(u_try[dim - 1] > 0.0)) continue;
            std::vector<VecX> ends_try;
            VecX r_try;
            try {
                ends_try = all_ends(u_try);
                r_try = residual_from_ends(u_try, ends_try);
            } catch (const Error&) {
                continue;
            }
            if (r_try.cwiseAbs().maxCoeff() < (1.0 - 1e-4 * alpha) * rnorm) {
                u = u_try;
                ends = std::move(ends_try);
                r = r_try;
                rnorm = r.cwiseAbs().maxCoeff();
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        if (rnorm < tol) converged = true;
    }

    // final dense pass: sample uniformly, accumulate the action, track the
    // closest approaches from the integrator's own steps
    PolishResult out;
    out.converged = converged;
    out.omega = u[dim - 1];
    const double omega = out.omega;
    const int m = n_samples;
    out.trajectory.omega = omega;
    out.trajectory.times.resize(m + 1);
    out.trajectory.positions.resize(3, m + 1);
    out.trajectory.velocities.resize(3, m + 1);
    out.trajectory.h_residual.resize(m + 1);
    out.min_centre_distances = VecX::Constant(config.centres.size(), 1e300);
    out.min_radius = 1e300;
    out.action = 0.0;

    OdeRhs rhs_a = [&config](double, const VecX& s) {
        VecX ds(7);
        ds.segment<3>(0) = s.segment<3>(3);
        ds.segment<3>(3) = eval_gradV(config, s.segment<3>(0));
        ds[6] = 0.5 * s.segment<3>(3).squaredNorm() + eval_V(config, s.segment<3>(0));
        return ds;
    };
    auto track_minima = [&](const Vec3& x) {
        out.min_radius = std::min(out.min_radius, x.norm());
        for (size_t i = 0; i < config.centres.size(); ++i)
            out.min_centre_distances[static_cast<int>(i)] =
                std::min(out.min_centre_distances[static_cast<int>(i)],
                         (x - config.centres[i].position).norm());
    };

    int sample_idx = 0;
    for (int j = 0; j < S; ++j) {
        double t0 = -omega + 2.0 * omega * j / S;
        double t1 = -omega + 2.0 * omega * (j + 1) / S;
        VecX s0(7);
        s0.segment<6>(0) = segment_start(u, j);
        s0[6] = out.action;
        OdeOptions oo;
        oo.rel_tol = 1e-12;
        oo.abs_tol = 1e-12;
        DormandPrince stepper(rhs_a, t0, s0, oo);
        auto flush_samples = [&](double t_reached) {
            while (sample_idx <= m) {
                double ts = -omega + 2.0 * omega * sample_idx / m;
                if (ts > t_reached + 1e-14 * omega) break;
                VecX ss = stepper.interpolate(std::min(ts, stepper.t()));
                Vec3 x = ss.segment<3>(0), v = ss.segment<3>(3);
                out.trajectory.times[sample_idx] = ts;
                out.trajectory.positions.col(sample_idx) = x;
                out.trajectory.velocities.col(sample_idx) = v;
                out.trajectory.h_residual[sample_idx] =
                    0.5 * v.squaredNorm() - eval_V(config, x);
                ++sample_idx;
            }
        };
        track_minima(s0.segment<3>(0));
        flush_samples(t0);
        bool more = true;
        while (more) {
            more = stepper.step(t1);
            track_minima(stepper.y().segment<3>(0));
            track_minima(stepper.interpolate(0.5 * (stepper.t_prev() + stepper.t()))
                             .segment<3>(0));
            flush_samples(stepper.t());
        }
        out.action = stepper.y()[6];
    }
    // in case rounding left the final sample unfilled
    while (sample_idx <= m) {
        double ts = -omega + 2.0 * omega * sample_idx / m;
        VecX endstate = ends[S - 1];
        Vec3 x = endstate.segment<3>(0), v = endstate.segment<3>(3);
        out.trajectory.times[sample_idx] = ts;
        out.trajectory.positions.col(sample_idx) = x;
        out.trajectory.velocities.col(sample_idx) = v;
        out.trajectory.h_residual[sample_idx] = 0.5 * v.squaredNorm() - eval_V(config, x);
        ++sample_idx;
    }
    out.boundary_error = (out.trajectory.positions.col(m) - q_plus).norm();
    return out;
}

int action_index(const TrueTimeTrajectory& traj, const CentreConfiguration& config,
                 int n_nodes) {
    const int m = traj.size();
    if (m < 8) throw DomainError("trajectory too short for the index form");
    CubicSpline pos(traj.times, traj.positions);

    // conformal grid: knots equidistributed in sigma with d sigma = sqrt(V) dt
    VecX sigma(m);
    sigma[0] = 0.0;
    for (int j = 1; j < m; ++j) {
        double v0 = std::sqrt(eval_V(config, traj.positions.col(j - 1)));
        double v1 = std::sqrt(eval_V(config, traj.positions.col(j)));
        sigma[j] = sigma[j - 1] + 0.5 * (v0 + v1) * (traj.times[j] - traj.times[j - 1]);
    }
    std::vector<double> knots(n_nodes + 2);
    {
        int idx = 0;
        for (int k = 0; k <= n_nodes + 1; ++k) {
            double target = sigma[m - 1] * k / (n_nodes + 1);
            while (idx + 1 < m && sigma[idx + 1] < target) ++idx;
            double span = sigma[std::min(idx + 1, m - 1)] - sigma[idx];
            double w = span > 0 ? (target - sigma[idx]) / span : 0.0;
            knots[k] = (1.0 - w) * traj.times[idx] + w * traj.times[std::min(idx + 1, m - 1)];
        }
        knots.front() = traj.times[0];
        knots.back() = traj.times[m - 1];
    }

    // P1 stiffness + mass-lumped Hessian term; inertia via block LDL
    std::vector<Mat3> diag(n_nodes);
    std::vector<double> off(n_nodes - 1);
    for (int k = 1; k <= n_nodes; ++k) {
        double hl = knots[k] - knots[k - 1];
        double hr = knots[k + 1] - knots[k];
        Vec3 x = pos.eval(knots[k]);
        diag[k - 1] = (1.0 / hl + 1.0 / hr) * Mat3::Identity() +
                      0.5 * (hl + hr) * eval_hessV(config, x);
        if (k < n_nodes) off[k - 1] = -1.0 / hr;
    }
    // a small relative shift keeps symmetry-induced near-zero modes from
    // flipping the count
    double hscale = 1.0;
    for (const auto& A : diag) hscale = std::max(hscale, A.cwiseAbs().maxCoeff());
    for (int k = 0; k < n_nodes; ++k) {
        double hl = knots[k + 1] - knots[k], hr = knots[k + 2] - knots[k + 1];
        diag[k] += 1e-9 * hscale * 0.5 * (hl + hr) * Mat3::Identity();
    }
    int count = 0;
    Mat3 D = diag[0];
    for (int k = 0;; ++k) {
        Eigen::SelfAdjointEigenSolver<Mat3> es(D);
        for (int i = 0; i < 3; ++i) {
            if (std::abs(es.eigenvalues()[i]) < 1e-280)
                throw NumericalError("singular pivot in the action index form");
            if (es.eigenvalues()[i] < 0.0) ++count;
        }
        if (k + 1 >= n_nodes) break;
        Mat3 Dinv = es.eigenvectors() *
                    es.eigenvalues().cwiseInverse().asDiagonal() *
                    es.eigenvectors().transpose();
        D = diag[k + 1] - (off[k] * off[k]) * Dinv;
    }
    return count;
}

// ---------------------------------------------------------------------------

namespace {

int nodes_for_radius(double R, double K, const SolverOptions& opts) {
    double ratio = R / (10.0 * K);
    int mult = static_cast<int>(std::ceil(std::sqrt(std::max(1.0, ratio))));
    return opts.n_nodes * mult;
}

// seed at a larger R: radial legs spliced onto the previous solution, with
// zero-energy speeds and the matching travel-time parameterization
TrueTimeTrajectory warm_seed_trajectory(const ContinuationRecord& warm,
                                        const CentreConfiguration& config, const Vec3& q_minus,
                                        const Vec3& q_plus) {
    const auto& tr = warm.trajectory;
    std::vector<Vec3> pts;
    const int leg = 64;
    Vec3 old_start = tr.positions.col(0);
    Vec3 old_end = tr.positions.col(tr.size() - 1);
    for (int j = 0; j < leg; ++j)
        pts.push_back(q_minus + (old_start - q_minus) * (static_cast<double>(j) / leg));
    for (int j = 0; j < tr.size(); ++j) pts.push_back(tr.positions.col(j));
    for (int j = 1; j <= leg; ++j)
        pts.push_back(old_end + (q_plus - old_end) * (static_cast<double>(j) / leg));

    const int m = static_cast<int>(pts.size());
    TrueTimeTrajectory seed;
    seed.times.resize(m);
    seed.positions.resize(3, m);
    seed.velocities.resize(3, m);
    seed.h_residual = VecX::Zero(m);
    seed.times[0] = 0.0;
    for (int j = 1; j < m; ++j) {
        Vec3 mid = 0.5 * (pts[j] + pts[j - 1]);
        double speed = std::sqrt(2.0 * eval_V(config, mid));
        seed.times[j] = seed.times[j - 1] + (pts[j] - pts[j - 1]).norm() / speed;
    }
    const double half = 0.5 * seed.times[m - 1];
    for (int j = 0; j < m; ++j) {
        seed.times[j] -= half;
        seed.positions.col(j) = pts[j];
        Vec3 tangent = (j + 1 < m ? pts[j + 1] : pts[j]) - (j > 0 ? pts[j - 1] : pts[j]);
        double tn = tangent.norm();
        if (tn < 1e-300) tangent = Vec3(1, 0, 0);
        else tangent /= tn;
        seed.velocities.col(j) = std::sqrt(2.0 * eval_V(config, pts[j])) * tangent;
    }
    seed.omega = half;
    return seed;
}

struct CrossingTimes {
    double t_minus, t_plus;
};

CrossingTimes crossing_times(const TrueTimeTrajectory& traj, double K, double min_radius) {
    const int m = traj.size();
    VecX r(m);
    for (int j = 0; j < m; ++j) r[j] = traj.positions.col(j).norm();
    if (min_radius >= K) {
        int k = 0;
        for (int j = 1; j < m; ++j)
            if (r[j] < r[k]) k = j;
        return {traj.times[k], traj.times[k]};
    }
    MatX rr(1, m);
    rr.row(0) = r.transpose();
    CubicSpline rs(traj.times, rr);
    auto bisect = [&](double lo, double hi) {
        double flo = rs.eval(lo)[0] - K;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            double fm = rs.eval(mid)[0] - K;
            if ((fm > 0) == (flo > 0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    };
    int first_below = -1, last_below = -1;
    for (int j = 0; j < m; ++j) {
        if (r[j] < K) {
            if (first_below < 0) first_below = j;
            last_below = j;
        }
    }
    if (first_below < 0) {  // the dip below K fell between samples
        int k = 0;
        for (int j = 1; j < m; ++j)
            if (r[j] < r[k]) k = j;
        return {traj.times[k], traj.times[k]};
    }
    double tm = (first_below > 0) ? bisect(traj.times[first_below - 1], traj.times[first_below])
                                  : traj.times[0];
    double tp = (last_below + 1 < m)
                    ? bisect(traj.times[last_below + 1], traj.times[last_below])
                    : traj.times[m - 1];
    return {tm, tp};
}

}  // namespace

ContinuationRecord solve_at_R(const CentreConfiguration& config, const Vec3& xi_plus,
                              const Vec3& xi_minus, double R, const SolverOptions& opts,
                              const PotentialConstants& constants,
                              const ContinuationRecord* warm) {
    if (std::abs(xi_plus.norm() - 1.0) > 1e-9 || std::abs(xi_minus.norm() - 1.0) > 1e-9)
        throw DomainError("asymptotic directions must be unit vectors");
    if ((xi_plus - xi_minus).norm() < 1e-12)
        throw DegenerateDirections("coincident asymptotic directions");
    if (!(R > constants.K)) throw DomainError("R must exceed the certified K");

    const Vec3 q_minus = R * xi_minus;
    const Vec3 q_plus = R * xi_plus;
    const int n = nodes_for_radius(R, constants.K, opts);
    SolverOptions local = opts;
    local.n_nodes = n;

    ContinuationRecord rec;
    rec.R = R;
    rec.status = SolveStatus::Converged;

    PolishResult pol;
    bool have_pol = false;
    if (warm && warm->polished) {
        // at large R the core occupies a vanishing fraction of the uniform
        // grid, so warm solves go straight to the shooting stage
        TrueTimeTrajectory seed = warm_seed_trajectory(*warm, config, q_minus, q_plus);
        pol = polish_to_ode_solution(config, q_minus, q_plus, seed, 48);
        have_pol = pol.converged;
    }
    TrueTimeTrajectory rough;
    if (!have_pol) {
        PathLoop loop =
            make_winding_loop(config, q_minus, q_plus, 0, constants.delta_star, local.loop_size, n);
        auto points = beta_continuation(loop, config, constants.delta_star,
                                        local.beta_schedule(), local);
        const CriticalPoint& final_cp = points.back();
        StrongForceModifier mod{final_cp.beta, constants.delta_star};
        rough = to_true_time(final_cp.path, mod, config, 8);
        rec.status = final_cp.status;
        rec.morse_index = final_cp.morse_index;
        if (final_cp.status != SolveStatus::GeneralizedCandidate) {
            pol = polish_to_ode_solution(config, q_minus, q_plus, rough);
            have_pol = pol.converged;
        }
    }

    if (have_pol) {
        rec.trajectory = std::move(pol.trajectory);
        rec.omega = pol.omega;
        rec.action = pol.action;
        rec.boundary_error = pol.boundary_error;
        rec.min_radius = pol.min_radius;
        rec.min_centre_distances = pol.min_centre_distances;
        rec.polished = true;
        rec.morse_index = action_index(rec.trajectory, config);
    } else {
        rec.trajectory = rough;
        rec.omega = rough.omega;
        rec.polished = false;
    }
    if (!rec.polished) {
        rec.action = action_value(rec.trajectory, config);
        rec.min_radius = 1e300;
        rec.min_centre_distances = VecX::Constant(config.centres.size(), 1e300);
        for (int j = 0; j < rec.trajectory.size(); ++j) {
            Vec3 x = rec.trajectory.positions.col(j);
            rec.min_radius = std::min(rec.min_radius, x.norm());
            for (size_t i = 0; i < config.centres.size(); ++i)
                rec.min_centre_distances[static_cast<int>(i)] =
                    std::min(rec.min_centre_distances[static_cast<int>(i)],
                             (x - config.centres[i].position).norm());
        }
        rec.boundary_error =
            std::max((rec.trajectory.positions.col(0) - q_minus).norm(),
                     (rec.trajectory.positions.col(rec.trajectory.size() - 1) - q_plus).norm());
    }
    rec.max_energy_residual = rec.trajectory.h_residual.cwiseAbs().maxCoeff();

    auto cross = crossing_times(rec.trajectory, constants.K, rec.min_radius);
    rec.time_shift = 0.5 * (cross.t_minus + cross.t_plus);
    for (int j = 0; j < rec.trajectory.size(); ++j) rec.trajectory.times[j] -= rec.time_shift;
    rec.t_minus = cross.t_minus - rec.time_shift;
    rec.t_plus = cross.t_plus - rec.time_shift;
    rec.Delta = 0.5 * (rec.t_plus - rec.t_minus);
    return rec;
}

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double sup_distance_on_window(const ContinuationRecord& a, const ContinuationRecord& b,
                              double t_lo, double t_hi, int n_probe = 256) {
    CubicSpline pa(a.trajectory.times, a.trajectory.positions);
    CubicSpline pb(b.trajectory.times, b.trajectory.positions);
    double worst = 0.0;
    for (int j = 0; j <= n_probe; ++j) {
        double t = t_lo + (t_hi - t_lo) * j / n_probe;
        worst = std::max(worst, (pa.eval(t) - pb.eval(t)).norm());
    }
    return worst;
}

}  // namespace

ScheduleResult run_schedule(const CentreConfiguration& config, const Vec3& xi_plus,
                            const Vec3& xi_minus, const std::vector<double>& R_schedule,
                            const SolverOptions& opts, const PotentialConstants& constants,
                            bool throw_on_violation) {
    if (R_schedule.empty()) throw DomainError("empty R schedule");
    for (size_t i = 0; i + 1 < R_schedule.size(); ++i)
        if (!(R_schedule[i + 1] > R_schedule[i]))
            throw DomainError("R schedule must be increasing");

    ScheduleResult out;
    for (size_t i = 0; i < R_schedule.size(); ++i) {
        const ContinuationRecord* warm = out.records.empty() ? nullptr : &out.records.back();
        out.records.push_back(
            solve_at_R(config, xi_plus, xi_minus, R_schedule[i], opts, constants, warm));
    }
    out.report = build_hypothesis_report(out.records);
    if (throw_on_violation && !out.report.ok())
        throw HypothesisViolation("approximation hypotheses violated on the schedule");
    return out;
}

HypothesisReport build_hypothesis_report(const std::vector<ContinuationRecord>& records) {
    HypothesisReport rep;
    for (const auto& rec : records) {
        rep.R_values.push_back(rec.R);
        rep.min_radius.push_back(rec.min_radius);
        rep.centre_floor.push_back(rec.min_centre_distances.minCoeff());
        rep.width.push_back(rec.t_plus - rec.t_minus);
        rep.omega_gap.push_back(rec.omega - rec.time_shift - rec.t_plus);
    }
    for (size_t i = 0; i + 1 < records.size(); ++i)
        rep.cauchy.push_back(sup_distance_on_window(records[i], records[i + 1], -1.0, 1.0));
    for (size_t i = 0; i + 1 < rep.cauchy.size(); ++i)
        rep.cauchy_ratio.push_back(rep.cauchy[i + 1] / rep.cauchy[i]);

    rep.min_radius_bounded = rep.min_radius.back() <= 1.1 * median(rep.min_radius);
    rep.centre_distances_floored =
        *std::min_element(rep.centre_floor.begin(), rep.centre_floor.end()) >= 1e-3;
    rep.width_bounded = rep.width.back() <= 1.1 * median(rep.width) + 1e-12;
    rep.cauchy_halving = true;
    for (double q : rep.cauchy_ratio)
        if (!(q <= 0.6)) rep.cauchy_halving = false;
    rep.omega_gap_growing = true;
    for (size_t i = 0; i + 1 < rep.omega_gap.size(); ++i)
        if (!(rep.omega_gap[i + 1] > rep.omega_gap[i])) rep.omega_gap_growing = false;
    return rep;
}

AsymptoticFit asymptotic_fit(const TrueTimeTrajectory& trajectory, double K, double R) {
    AsymptoticFit fit;
    fit.window_lo = 10.0 * K;
    fit.window_hi = 0.8 * R;
    if (!(fit.window_hi > fit.window_lo))
        throw InsufficientTail("radius window is empty; increase R");

    std::vector<double> lt, lr;
    double s_var = 0.0;
    Vec3 last_dir = Vec3::Zero();
    const int m = trajectory.size();
    bool started = false;
    for (int j = 0; j < m; ++j) {
        if (trajectory.times[j] <= 0.0) continue;  // outgoing tail
        double r = trajectory.positions.col(j).norm();
        if (r < fit.window_lo || r > fit.window_hi) continue;
        lt.push_back(std::log(trajectory.times[j]));
        lr.push_back(std::log(r));
        Vec3 dir = trajectory.positions.col(j) / r;
        if (started) s_var += (dir - last_dir).norm();
        last_dir = dir;
        started = true;
    }
    if (lt.size() < 16) throw InsufficientTail("not enough samples in the tail window");

    const int n = static_cast<int>(lt.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sx += lt[i];
        sy += lr[i];
        sxx += lt[i] * lt[i];
        sxy += lt[i] * lr[i];
    }
    double denom = n * sxx - sx * sx;
    fit.exponent = (n * sxy - sx * sy) / denom;
    double intercept = (sy - fit.exponent * sx) / n;
    fit.prefactor = std::exp(intercept);
    double rss = 0.0;
    for (int i = 0; i < n; ++i) {
        double e = lr[i] - (intercept + fit.exponent * lt[i]);
        rss += e * e;
    }
    fit.residual = std::sqrt(rss / n);
    fit.direction_end = last_dir;
    fit.s_variation_tail = s_var;
    return fit;
}

DiagnosticsReport diagnostics(const ContinuationRecord& record,
                              const CentreConfiguration& config,
                              const PotentialConstants& constants) {
    const auto& traj = record.trajectory;
    const double K = constants.K;
    const double Cp = constants.C_plus;
    const double a = config.alpha;
    const double m_tot = config.total_mass();
    const int m = traj.size();

    DiagnosticsReport rep;
    InequalityMargin lj{"lagrange_jacobi", 1e300, 0};
    InequalityMargin am{"angular_momentum_rate", 1e300, 0};
    InequalityMargin fa_lower{"travel_time_lower", 1e300, 0};
    InequalityMargin fa_upper{"travel_time_upper", 1e300, 0};
    InequalityMargin fe{"s_variation", 1e300, 0};

    VecX r(m);
    for (int j = 0; j < m; ++j) r[j] = traj.positions.col(j).norm();

    // pointwise inequalities on |x| >= K
    for (int j = 0; j < m; ++j) {
        if (r[j] < K) continue;
        Vec3 x = traj.positions.col(j);
        double Iddot = 2.0 * eval_V(config, x) + eval_gradV(config, x).dot(x);
        lj.take_margin(Iddot - (2.0 - a) * m_tot / (2.0 * a * std::pow(r[j], a)));
        FarField ff = far_field_remainder(config, x);
        am.take_margin(Cp * std::pow(r[j], -a - 2.0) - x.cross(ff.gradW).norm());
    }

    // monotone-r sub-intervals within |x| >= K
    std::vector<std::pair<int, int>> mono;
    {
        int start = -1;
        int dir = 0;
        for (int j = 0; j + 1 < m; ++j) {
            bool inside = r[j] >= K && r[j + 1] >= K;
            int d = (r[j + 1] > r[j]) ? 1 : -1;
            if (!inside) {
                if (start >= 0) mono.emplace_back(start, j);
                start = -1;
                dir = 0;
                continue;
            }
            if (start < 0) {
                start = j;
                dir = d;
            } else if (d != dir) {
                mono.emplace_back(start, j);
                start = j;
                dir = d;
            }
        }
        if (start >= 0) mono.emplace_back(start, m - 1);
    }

    for (auto [j0, j1] : mono) {
        if (j1 - j0 < 8) continue;
        double t0 = traj.times[j0], t1 = traj.times[j1];
        double r0 = r[j0], r1 = r[j1];
        double dt = t1 - t0;
        double pow_gap = std::abs(std::pow(r1, 1.0 + 0.5 * a) - std::pow(r0, 1.0 + 0.5 * a));
        fa_lower.take_margin(dt - pow_gap / ((1.0 + 0.5 * a) * std::sqrt(2.0 * Cp)));
        fa_upper.take_margin(std::sqrt(2.0 * a / ((2.0 - a) * m_tot)) *
                                 std::pow(std::max(r0, r1), 1.0 + 0.5 * a) -
                             dt);

        // s-variation bound on strictly increasing stretches
        if (!(r1 > r0)) continue;
        const double C1 = std::sqrt(2.0 * Cp);
        const double C2 = 2.0 * (1.0 + 0.5 * a) * Cp * std::sqrt(2.0 * Cp) / ((2.0 - a) * m_tot);
        const double C3 = (2.0 - a) * m_tot /
                          (std::pow(2.0, (14.0 - a) / 8.0) * a * (1.0 + 0.5 * a) * std::sqrt(Cp));
        const double C4 = std::pow(2.0, (a + 14.0) / 8.0) / (2.0 - a);
        // tau1 at one quarter, tau2 at half of the stretch
        int jt1 = j0 + (j1 - j0) / 4;
        int jt2 = j0 + (j1 - j0) / 2;
        if (jt1 == j0) ++jt1;
        double r_t1 = r[jt1], r_t2 = r[jt2];
        double gap = std::pow(r_t1, 1.0 + 0.5 * a) - std::pow(r0, 1.0 + 0.5 * a);
        if (!(gap > 0)) continue;
        double lhs = 0.0;
        for (int j = jt2; j < j1; ++j) {
            Vec3 s_now = traj.positions.col(j) / r[j];
            Vec3 s_next = traj.positions.col(j + 1) / r[j + 1];
            lhs += (s_next - s_now).norm();
        }
        double rhs = (C1 * std::pow(r_t1, 1.0 - 0.5 * a) + C2 / gap) /
                     (C3 * gap / std::pow(r_t1, 3.0 * (a + 2.0) / 4.0)) * C4 /
                     std::pow(r_t2, (2.0 - a) / 4.0);
        fe.take_margin(rhs - lhs);
    }

    rep.margins = {lj, am, fa_lower, fa_upper, fe};
    return rep;
}

ScalingReport level_scaling(const std::vector<ContinuationRecord>& records,
                            const CentreConfiguration& config) {
    if (records.size() < 3) throw DomainError("level scaling needs at least three records");
    const double a = config.alpha;
    const double m_tot = config.total_mass();

    ScalingReport rep;
    rep.theory_slope = std::sqrt(2.0 * m_tot / a) * 4.0 / (2.0 - a);

    const int n = static_cast<int>(records.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& rec : records) {
        double X = std::pow(rec.R, 1.0 - 0.5 * a);
        sx += X;
        sy += rec.action;
        sxx += X * X;
        sxy += X * rec.action;
    }
    double denom = n * sxx - sx * sx;
    rep.slope = (n * sxy - sx * sy) / denom;
    rep.intercept = (sy - rep.slope * sx) / n;
    rep.slope_rel_err = std::abs(rep.slope - rep.theory_slope) / rep.theory_slope;

    rep.offset_band = 0.0;
    for (const auto& rec : records) {
        double X = std::pow(rec.R, 1.0 - 0.5 * a);
        rep.offset_band = std::max(rep.offset_band, std::abs(rec.action - rep.slope * X));
        rep.offsets_vs_theory.push_back(rec.action - rep.theory_slope * X);
    }
    double prev_band = std::max(std::abs(rep.offsets_vs_theory[0]),
                                std::abs(rep.offsets_vs_theory[n - 2]));
    rep.offsets_non_growing = std::abs(rep.offsets_vs_theory[n - 1]) <= 1.1 * prev_band + 1e-9;
    return rep;
}

}  // namespace parabolica
