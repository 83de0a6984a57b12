#include "parabolica/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <thread>

#include "parabolica/interpolate.hpp"
#include "parabolica/io.hpp"
#include "parabolica/ode.hpp"

namespace parabolica {

std::vector<double> SolverOptions::beta_schedule() const {
    std::vector<double> betas;
    double b = 1.0;
    for (int k = 0; k <= beta_halvings; ++k) {
        betas.push_back(b);
        b *= 0.5;
    }
    betas.push_back(0.0);
    return betas;
}

namespace {

VecX flatten_interior(const DiscretePath& path) {
    const int n = path.n();
    VecX z(3 * (n - 1));
    for (int k = 1; k < n; ++k) z.segment<3>(3 * (k - 1)) = path.nodes.col(k);
    return z;
}

void unflatten_interior(DiscretePath& path, const VecX& z) {
    const int n = path.n();
    for (int k = 1; k < n; ++k) path.nodes.col(k) = z.segment<3>(3 * (k - 1));
}

double sup_norm(const Mat3X& grad) { return grad.cwiseAbs().maxCoeff(); }

struct Objective {
    const StrongForceModifier& mod;
    const CentreConfiguration& config;
    DiscretePath scratch;

    double value(const DiscretePath& p) const { return maupertuis_value(p, mod, config); }
    VecX grad(const DiscretePath& p) const {
        Mat3X g = maupertuis_gradient(p, mod, config);
        const int n = p.n();
        VecX z(3 * (n - 1));
        for (int k = 1; k < n; ++k) z.segment<3>(3 * (k - 1)) = g.col(k);
        return z;
    }
};

}  // namespace

int negative_count_sturm(const MatX& H, double shift) {
    Eigen::Tridiagonalization<MatX> tri(H);
    VecX diag = tri.diagonal();
    VecX sub = tri.subDiagonal();
    const int d = static_cast<int>(diag.size());
    int count = 0;
    double piv = diag[0] - shift;
    if (piv < 0) ++count;
    for (int i = 1; i < d; ++i) {
        double denom = (std::abs(piv) < 1e-300) ? (piv >= 0 ? 1e-300 : -1e-300) : piv;
        piv = diag[i] - shift - sub[i - 1] * sub[i - 1] / denom;
        if (piv < 0) ++count;
    }
    return count;
}

int morse_index_of(const DiscretePath& path, const StrongForceModifier& mod,
                   const CentreConfiguration& config) {
    MatX H = maupertuis_hessian(path, mod, config);
    double scale = H.cwiseAbs().rowwise().sum().maxCoeff();  // ||H||_inf
    double thresh = -1e-8 * scale;
    Eigen::SelfAdjointEigenSolver<MatX> es(H, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("eigen-solve failure");
    int count = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()[i] < thresh) ++count;
    return count;
}

namespace {

// Largest per-node displacement of a flattened interior step.
double max_node_move(const VecX& dir) {
    double worst = 0.0;
    for (int k = 0; k + 2 < dir.size(); k += 3)
        worst = std::max(worst, dir.segment<3>(k).norm());
    return worst;
}

// Backtracking Armijo step along a descent direction; returns accepted step
// size, or 0 when no feasible decrease was found. The first trial is capped
// so no node can hop across a centre in a single move (that would change the
// loop class without ever tripping the collision guard).
double armijo_step(Objective& obj, DiscretePath& path, double& f, VecX& g_flat,
                   const VecX& dir, const SolverOptions& opts) {
    const double slope = g_flat.dot(dir);
    if (!(slope < 0.0)) return 0.0;
    VecX z0 = flatten_interior(path);
    double move = max_node_move(dir);
    double dmin0 = path_min_distance(path, obj.config);
    double step = std::min(1.0, 0.4 * dmin0 / (move + 1e-300));
    for (int bt = 0; bt < 48; ++bt, step *= 0.5) {
        DiscretePath trial = path;
        unflatten_interior(trial, z0 + step * dir);
        double dmin = path_min_distance(trial, obj.config);
        if (dmin <= opts.collision_threshold) {
            if (obj.mod.beta == 0.0 && step < 1e-8)
                throw CollisionEncountered("descent ran into a centre at beta = 0");
            continue;
        }
        double f_trial = obj.value(trial);
        if (f_trial <= f + 1e-4 * step * slope) {
            path = trial;
            f = f_trial;
            g_flat = obj.grad(path);
            return step;
        }
    }
    return 0.0;
}

// L-BFGS two-loop recursion over stored (s, y) pairs.
VecX lbfgs_direction(const std::deque<std::pair<VecX, VecX>>& mem, const VecX& g) {
    VecX q = -g;
    if (mem.empty()) return q;
    std::vector<double> alphas(mem.size());
    int i = static_cast<int>(mem.size()) - 1;
    for (auto it = mem.rbegin(); it != mem.rend(); ++it, --i) {
        double rho = 1.0 / it->second.dot(it->first);
        alphas[i] = rho * it->first.dot(q);
        q -= alphas[i] * it->second;
    }
    const auto& last = mem.back();
    q *= last.first.dot(last.second) / last.second.squaredNorm();
    i = 0;
    for (auto it = mem.begin(); it != mem.end(); ++it, ++i) {
        double rho = 1.0 / it->second.dot(it->first);
        double beta = rho * it->second.dot(q);
        q += (alphas[i] - beta) * it->first;
    }
    return q;
}

CriticalPoint finish_point(const DiscretePath& path, const StrongForceModifier& mod,
                           const CentreConfiguration& config, SolveStatus status, int iters,
                           bool with_index = true) {
    CriticalPoint cp;
    cp.path = path;
    cp.beta = mod.beta;
    cp.maupertuis_value = maupertuis_value(path, mod, config);
    cp.gradient_norm = sup_norm(maupertuis_gradient(path, mod, config));
    cp.omega = omega_of(path, mod, config);
    cp.morse_index = with_index ? morse_index_of(path, mod, config) : -1;
    cp.min_centre_distance = path_min_distance(path, config);
    cp.status = status;
    cp.iterations = iters;
    return cp;
}

// Damped Newton iteration on the gradient of the discrete functional.
// Converges to the nearby critical point regardless of its index.
bool newton_iterate(DiscretePath& path, const StrongForceModifier& mod,
                    const CentreConfiguration& config, const SolverOptions& opts,
                    int max_iters, int* iters_used) {
    Objective obj{mod, config, path};
    double scale = std::max(1.0, std::abs(obj.value(path)));
    VecX g = obj.grad(path);
    double gnorm = g.cwiseAbs().maxCoeff();
    int it = 0;
    double lambda_boost = 1.0;
    while (gnorm > opts.tol_grad * scale && it < max_iters) {
        ++it;
        MatX H = maupertuis_hessian(path, mod, config);
        double hnorm = H.cwiseAbs().rowwise().sum().maxCoeff();
        bool accepted = false;
        for (int tries = 0; tries < 12 && !accepted; ++tries) {
            double lambda = 1e-8 * hnorm * lambda_boost * std::pow(10.0, tries);
            MatX A = H + lambda * MatX::Identity(H.rows(), H.cols());
            VecX step = A.partialPivLu().solve(-g);
            if (!step.allFinite()) continue;
            // keep the iteration local: no node moves farther than a fraction
            // of its clearance from the centre set
            double cap = 0.4 * path_min_distance(path, config);
            double move = max_node_move(step);
            if (move > cap) step *= cap / move;
            DiscretePath trial = path;
            unflatten_interior(trial, flatten_interior(path) + step);
            if (path_min_distance(trial, config) <= opts.collision_threshold) {
                if (mod.beta == 0.0)
                    throw CollisionEncountered("Newton step ran into a centre at beta = 0");
                continue;
            }
            VecX g_trial;
            try {
                Objective obj2{mod, config, trial};
                g_trial = obj2.grad(trial);
            } catch (const CollisionPath&) {
                continue;
            }
            double gnorm_trial = g_trial.cwiseAbs().maxCoeff();
            if (gnorm_trial < gnorm || gnorm_trial < opts.tol_grad * scale) {
                path = trial;
                g = g_trial;
                gnorm = gnorm_trial;
                accepted = true;
                lambda_boost = std::max(1.0, lambda_boost * 0.5);
            }
        }
        if (!accepted) {
            lambda_boost *= 100.0;
            if (lambda_boost > 1e12) break;
        }
        scale = std::max(1.0, std::abs(obj.value(path)));
    }
    if (iters_used) *iters_used = it;
    return gnorm <= opts.tol_grad * scale;
}

}  // namespace

CriticalPoint refine_critical_point(const DiscretePath& path, const StrongForceModifier& mod,
                                    const CentreConfiguration& config,
                                    const SolverOptions& opts) {
    DiscretePath p = path;
    int iters = 0;
    bool ok = newton_iterate(p, mod, config, opts, opts.max_iters, &iters);
    return finish_point(p, mod, config, ok ? SolveStatus::Converged : SolveStatus::NotConverged,
                        iters);
}

CriticalPoint minimize(const DiscretePath& path0, const StrongForceModifier& mod,
                       const CentreConfiguration& config, const SolverOptions& opts) {
    DiscretePath path = path0;
    path.validate();
    if (!collision_free(path, config, opts.collision_threshold))
        throw CollisionPath("initial path not collision-free");

    Objective obj{mod, config, path};
    double f = obj.value(path);
    VecX g = obj.grad(path);
    double scale = std::max(1.0, std::abs(f));

    std::deque<std::pair<VecX, VecX>> memory;  // (s, y) pairs
    int it = 0;
    for (; it < opts.max_iters; ++it) {
        if (g.cwiseAbs().maxCoeff() < 1e-4 * scale) break;  // hand over to Newton
        VecX dir = lbfgs_direction(memory, g);
        if (dir.dot(g) > -1e-14 * dir.norm() * g.norm()) {
            dir = -g;
            memory.clear();
        }
        VecX z_before = flatten_interior(path);
        VecX g_before = g;
        double step = armijo_step(obj, path, f, g, dir, opts);
        if (step == 0.0) {
            memory.clear();
            step = armijo_step(obj, path, f, g, dir = -g_before, opts);
            if (step == 0.0) break;  // stalled
        }
        VecX s = flatten_interior(path) - z_before;
        VecX y = g - g_before;
        if (s.dot(y) > 1e-14 * s.norm() * y.norm()) {
            memory.emplace_back(s, y);
            if (memory.size() > 10) memory.pop_front();
        }
        scale = std::max(1.0, std::abs(f));
    }

    int newton_iters = 0;
    bool ok = newton_iterate(path, mod, config, opts, opts.max_iters, &newton_iters);
    return finish_point(path, mod, config,
                        ok ? SolveStatus::Converged : SolveStatus::NotConverged,
                        it + newton_iters);
}

namespace {

// a few monotone descent steps on one member; returns new value
double descend_member(DiscretePath& path, const StrongForceModifier& mod,
                      const CentreConfiguration& config, const SolverOptions& opts, int steps) {
    Objective obj{mod, config, path};
    double f = obj.value(path);
    VecX g = obj.grad(path);
    for (int s = 0; s < steps; ++s) {
        if (armijo_step(obj, path, f, g, VecX(-g), opts) == 0.0) break;
    }
    return f;
}

}  // namespace

namespace {

// 1-D ridge localization: maximize M along the piecewise-linear family
// through the argmax member and its loop neighbours (golden section).
DiscretePath ridge_seed(const PathLoop& loop, int argmax, const StrongForceModifier& mod,
                        const CentreConfiguration& config) {
    const int M = loop.loop_size();
    const auto& left = loop.members[(argmax + M - 1) % M];
    const auto& mid = loop.members[argmax];
    const auto& right = loop.members[(argmax + 1) % M];
    auto at = [&](double t) {
        DiscretePath p = mid;
        if (t < 0.0)
            p.nodes = (1.0 + t) * mid.nodes - t * left.nodes;
        else
            p.nodes = (1.0 - t) * mid.nodes + t * right.nodes;
        return p;
    };
    auto value = [&](double t) {
        DiscretePath p = at(t);
        if (!collision_free(p, config)) return -1e300;
        return maupertuis_value(p, mod, config);
    };
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = -1.0, b = 1.0;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = value(x1), f2 = value(x2);
    for (int it = 0; it < 40; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = value(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = value(x1);
        }
    }
    return at(0.5 * (a + b));
}

bool loop_admissible(const PathLoop& loop, const CentreConfiguration& config) {
    try {
        auto d = loop_degrees(loop, config);
        return d.first != 0 && d.second == 0;
    } catch (const UnresolvedDegree&) {
        return false;
    } catch (const CollisionPath&) {
        return false;
    }
}

}  // namespace

CriticalPoint saddle_search(PathLoop loop, const StrongForceModifier& mod,
                            const CentreConfiguration& config, const SolverOptions& opts) {
    loop.validate();
    if (!loop_admissible(loop, config))
        throw DomainError("loop is not admissible: need deg1 != 0 == deg2");

    const int max_rounds = std::max(40, opts.max_iters / 10);
    int restarts = 0;

    for (;;) {
        const int M = loop.loop_size();
        std::vector<double> values(M);
        for (int j = 0; j < M; ++j) values[j] = maupertuis_value(loop.members[j], mod, config);
        double prev_max = std::numeric_limits<double>::infinity();
        int stall = 0;
        int argmax = 0;

        const int workers = std::min(thread_cap(), M);
        for (int round = 0; round < max_rounds; ++round) {
            PathLoop round_backup = loop;
            if (workers <= 1) {
                for (int j = 0; j < M; ++j)
                    values[j] = descend_member(loop.members[j], mod, config, opts, 3);
            } else {
                // members are independent between re-tension barriers; the
                // per-member results do not depend on the thread count
                std::vector<std::thread> pool;
                for (int w = 0; w < workers; ++w)
                    pool.emplace_back([&, w]() {
                        for (int j = w; j < M; j += workers)
                            values[j] = descend_member(loop.members[j], mod, config, opts, 3);
                    });
                for (auto& th : pool) th.join();
            }

            // re-tension sweep: M-lowering neighbour averages
            for (int j = 0; j < M; ++j) {
                const auto& prev = loop.members[(j + M - 1) % M];
                const auto& next = loop.members[(j + 1) % M];
                DiscretePath cand = loop.members[j];
                cand.nodes = 0.5 * (prev.nodes + next.nodes);
                if (!collision_free(cand, config, opts.collision_threshold)) continue;
                double vc = maupertuis_value(cand, mod, config);
                if (vc < values[j]) {
                    loop.members[j] = cand;
                    values[j] = vc;
                }
            }

            // the winding data is the whole point: any move that broke it
            // (steps are capped, but stay paranoid) rolls the round back
            if (!loop_admissible(loop, config)) {
                loop = std::move(round_backup);
                for (int j = 0; j < M; ++j)
                    values[j] = maupertuis_value(loop.members[j], mod, config);
                break;
            }

            argmax = static_cast<int>(std::max_element(values.begin(), values.end()) -
                                      values.begin());
            double vmax = values[argmax];
            double scale = std::max(1.0, std::abs(vmax));
            double gmax = sup_norm(maupertuis_gradient(loop.members[argmax], mod, config));
            if (gmax < 1e-3 * scale) break;
            if (std::abs(prev_max - vmax) < 1e-9 * scale) {
                if (++stall >= 5) break;
            } else {
                stall = 0;
            }
            prev_max = vmax;
        }

        argmax = static_cast<int>(std::max_element(values.begin(), values.end()) -
                                  values.begin());
        const double pass_level = values[argmax];
        DiscretePath seed = ridge_seed(loop, argmax, mod, config);

        DiscretePath refined = seed;
        int iters = 0;
        bool ok = newton_iterate(refined, mod, config, opts, opts.max_iters, &iters);
        if (ok) {
            CriticalPoint cp = finish_point(refined, mod, config, SolveStatus::Converged, iters);
            // a critical point far below the pass level is a minimizer from
            // the wrong basin, not the min-max point
            if (cp.maupertuis_value >= 0.5 * pass_level) {
                if (cp.morse_index > 1) cp.status = SolveStatus::IndexViolation;
                return cp;
            }
        }
        if (++restarts > 2) throw DegreeBroken("saddle search failed to converge after restarts");
        // restart with a denser loop built by interpolating the current one
        PathLoop denser;
        denser.members.reserve(2 * M);
        for (int j = 0; j < M; ++j) {
            denser.members.push_back(loop.members[j]);
            DiscretePath mid = loop.members[j];
            mid.nodes = 0.5 * (loop.members[j].nodes + loop.members[(j + 1) % M].nodes);
            denser.members.push_back(mid);
        }
        if (!loop_admissible(denser, config))
            throw DegreeBroken("densified loop lost its winding data");
        loop = std::move(denser);
    }
}

std::vector<CriticalPoint> beta_continuation(const PathLoop& loop0,
                                             const CentreConfiguration& config,
                                             double delta_star,
                                             const std::vector<double>& beta_schedule,
                                             const SolverOptions& opts) {
    if (beta_schedule.empty()) throw DomainError("empty beta schedule");
    std::vector<CriticalPoint> out;
    PathLoop loop = loop0;

    StrongForceModifier mod{beta_schedule.front(), delta_star};
    out.push_back(saddle_search(loop, mod, config, opts));

    for (size_t k = 1; k < beta_schedule.size(); ++k) {
        StrongForceModifier mk{beta_schedule[k], delta_star};
        DiscretePath warm = out.back().path;
        const double prev_value = out.back().maupertuis_value;
        try {
            CriticalPoint cp = refine_critical_point(warm, mk, config, opts);
            // the levels c_beta decrease with beta but stay bounded below; a
            // large drop means the Newton refinement switched branches
            bool on_branch = cp.maupertuis_value >= 0.4 * prev_value &&
                             cp.maupertuis_value <= 1.05 * prev_value;
            if (cp.status == SolveStatus::Converged && on_branch) {
                if (cp.morse_index > 1) cp.status = SolveStatus::IndexViolation;
                out.push_back(std::move(cp));
                continue;
            }
            // fall back to a loop relaxation under the new beta
            out.push_back(saddle_search(loop, mk, config, opts));
        } catch (const CollisionEncountered&) {
            if (mk.beta == 0.0) {
                CriticalPoint last = out.back();
                last.status = SolveStatus::GeneralizedCandidate;
                out.push_back(std::move(last));
                return out;
            }
            throw;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sperling regularization

RegularizedState to_regularized(const Vec3& x_phys, const Vec3& v_phys,
                                const CentreConfiguration& config, int centre, double tau) {
    const Vec3 c = config.centres[centre].position;
    const double m1 = config.centres[centre].mass;
    RegularizedState z;
    z.tau = tau;
    z.x = x_phys - c;
    double r = z.x.norm();
    z.y = r * v_phys;
    z.w = z.x.dot(v_phys) * v_phys - m1 * z.x / r;
    return z;
}

SperlingRhs sperling_field(const RegularizedState& state, const CentreConfiguration& config,
                           int centre) {
    const Vec3 c = config.centres[centre].position;
    const Vec3 xc = state.x + c;
    const double phi = near_field_remainder(config, centre, xc);
    const Vec3 gphi = near_field_gradient(config, centre, xc);
    SperlingRhs f;
    f.dx = state.y;
    f.dy = state.w + state.x.squaredNorm() * gphi;
    f.dw = state.x.dot(state.y) * gphi + (2.0 * phi + state.x.dot(gphi)) * state.y;
    return f;
}

TrueTimeTrajectory regularized_passage(const TrueTimeTrajectory& traj,
                                       const CentreConfiguration& config, int centre,
                                       double delta_star, int n_output) {
    if (config.alpha != 1.0)
        throw DomainError("the regularized system applies to the Newtonian case alpha = 1");
    const Vec3 c = config.centres[centre].position;
    const double r_in = delta_star / 10.0;
    const double r_out = 2.0 * r_in;

    int k_min = 0;
    double d_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < traj.size(); ++k) {
        double d = (traj.positions.col(k) - c).norm();
        if (d < d_min) {
            d_min = d;
            k_min = k;
        }
    }
    if (!(d_min < r_in))
        throw DomainError("trajectory does not approach the centre below delta*/10");

    int k_in = k_min;
    while (k_in > 0 && (traj.positions.col(k_in) - c).norm() < r_in) --k_in;

    RegularizedState z0 = to_regularized(traj.positions.col(k_in), traj.velocities.col(k_in),
                                         config, centre);
    VecX state(10);
    state.segment<3>(0) = z0.x;
    state.segment<3>(3) = z0.y;
    state.segment<3>(6) = z0.w;
    state[9] = traj.times[k_in];

    OdeRhs rhs = [&config, centre](double, const VecX& s) {
        RegularizedState z;
        z.x = s.segment<3>(0);
        z.y = s.segment<3>(3);
        z.w = s.segment<3>(6);
        SperlingRhs f = sperling_field(z, config, centre);
        VecX ds(10);
        ds.segment<3>(0) = f.dx;
        ds.segment<3>(3) = f.dy;
        ds.segment<3>(6) = f.dw;
        ds[9] = z.x.norm();  // dt/dtau
        return ds;
    };

    OdeOptions opts;
    opts.rel_tol = 1e-12;
    opts.abs_tol = 1e-14;
    DormandPrince stepper(rhs, 0.0, state, opts);
    double tau_end = 0.0;
    bool past_min = false;
    double prev_r = z0.x.norm();
    const double tau_cap = 1e6;
    while (stepper.t() < tau_cap) {
        if (!stepper.step(tau_cap)) break;
        double r = stepper.y().segment<3>(0).norm();
        if (r > prev_r) past_min = true;
        prev_r = r;
        if (past_min && r >= r_out) {
            tau_end = stepper.t();
            break;
        }
    }
    if (tau_end == 0.0) throw NumericalError("regularized passage did not exit the hand-off ball");

    // resample uniformly in tau (half-step offset keeps samples off an exact
    // collision instant)
    std::vector<double> taus(n_output);
    for (int j = 0; j < n_output; ++j)
        taus[j] = tau_end * (j + 0.5) / n_output;
    auto states = integrate_sampled(rhs, 0.0, state, taus, opts);

    TrueTimeTrajectory out;
    out.omega = traj.omega;
    out.times.resize(n_output);
    out.positions.resize(3, n_output);
    out.velocities.resize(3, n_output);
    out.h_residual.resize(n_output);
    for (int j = 0; j < n_output; ++j) {
        Vec3 x = states[j].segment<3>(0);
        Vec3 y = states[j].segment<3>(3);
        double r = std::max(x.norm(), 1e-12);
        out.times[j] = states[j][9];
        out.positions.col(j) = x + c;
        out.velocities.col(j) = y / r;
        out.h_residual[j] =
            0.5 * out.velocities.col(j).squaredNorm() - eval_V(config, out.positions.col(j));
    }
    return out;
}

BlowUpResult blow_up_rescale(const TrueTimeTrajectory& traj, const CentreConfiguration& config,
                             int centre) {
    const Vec3 c = config.centres[centre].position;
    const double a = config.alpha;
    const double mi = config.centres[centre].mass;

    int k_min = 0;
    double d_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < traj.size(); ++k) {
        double d = (traj.positions.col(k) - c).norm();
        if (d < d_min) {
            d_min = d;
            k_min = k;
        }
    }
    double t_min = traj.times[k_min];
    CubicSpline pos(traj.times, traj.positions);
    CubicSpline vel(traj.times, traj.velocities);
    // polish t_min on the spline
    for (int it = 0; it < 60; ++it) {
        double dt = 1e-6 * (1.0 + std::abs(t_min));
        double dm = (pos.eval(t_min - dt) - c).squaredNorm();
        double d0 = (pos.eval(t_min) - c).squaredNorm();
        double dp = (pos.eval(t_min + dt) - c).squaredNorm();
        double g = (dp - dm) / (2 * dt), h = (dp - 2 * d0 + dm) / (dt * dt);
        if (h <= 0 || !std::isfinite(g / h)) break;
        double step = -g / h;
        t_min = std::clamp(t_min + step, traj.times[0], traj.times[traj.size() - 1]);
        if (std::abs(step) < 1e-14 * (1.0 + std::abs(t_min))) break;
    }
    const double delta = (pos.eval(t_min) - c).norm();
    const double tscale = std::pow(delta, 1.0 + 0.5 * a);

    // keep the input's own samples inside the window |v| <= 100 (no state
    // interpolation; only the normalization sample at t = 0 comes from the
    // spline), symmetric about the closest approach
    BlowUpResult out;
    out.delta = delta;
    out.t_closest = t_min;
    out.rescaled.omega = 0.0;
    double span = std::min(t_min - traj.times[0], traj.times[traj.size() - 1] - t_min);
    std::vector<int> keep;
    for (int j = 0; j < traj.size(); ++j) {
        if (std::abs(traj.times[j] - t_min) > span) continue;
        if ((traj.positions.col(j) - c).norm() > 100.0 * delta) continue;
        keep.push_back(j);
    }
    const int mm = static_cast<int>(keep.size()) + 1;
    out.rescaled.times.resize(mm);
    out.rescaled.positions.resize(3, mm);
    out.rescaled.velocities.resize(3, mm);
    out.rescaled.h_residual.resize(mm);
    bool inserted_min = false;
    int col = 0;
    auto emit = [&](double t_phys, const Vec3& x_phys, const Vec3& xdot_phys, bool exact) {
        Vec3 v = (x_phys - c) / delta;
        Vec3 vdot = xdot_phys * std::pow(delta, 0.5 * a);
        out.rescaled.times[col] = (t_phys - t_min) / tscale;
        out.rescaled.positions.col(col) = v;
        out.rescaled.velocities.col(col) = vdot;
        double vn = v.norm();
        double mismatch = 0.5 * vdot.squaredNorm() - mi / (a * std::pow(vn, a));
        out.rescaled.h_residual[col] = mismatch;
        if (exact) {
            out.max_energy_mismatch = std::max(out.max_energy_mismatch, std::abs(mismatch));
            // the input solves x'' = gradV, so v'' = delta^(1+a) gradV(x)
            Vec3 res = std::pow(delta, 1.0 + a) * eval_gradV(config, x_phys) +
                       mi * v / std::pow(vn, a + 2.0);
            out.max_ode_residual = std::max(out.max_ode_residual, res.norm());
        }
        ++col;
    };
    for (int j : keep) {
        if (!inserted_min && traj.times[j] > t_min) {
            emit(t_min, pos.eval(t_min), vel.eval(t_min), false);
            inserted_min = true;
        }
        emit(traj.times[j], traj.positions.col(j), traj.velocities.col(j), true);
    }
    if (!inserted_min) emit(t_min, pos.eval(t_min), vel.eval(t_min), false);
    return out;
}

}  // namespace parabolica
