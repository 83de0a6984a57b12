#include "parabolica/pathspace.hpp"

#include <algorithm>
#include <cmath>

#include "parabolica/interpolate.hpp"

namespace parabolica {

void DiscretePath::validate() const {
    if (n() < 16) throw DomainError("path needs at least 16 intervals");
}

double path_min_distance(const DiscretePath& path, const CentreConfiguration& config) {
    double dmin = std::numeric_limits<double>::infinity();
    const int n = path.n();
    for (int k = 0; k <= n; ++k) {
        for (const auto& c : config.centres)
            dmin = std::min(dmin, (path.nodes.col(k) - c.position).norm());
        if (k < n) {
            Vec3 mid = 0.5 * (path.nodes.col(k) + path.nodes.col(k + 1));
            for (const auto& c : config.centres)
                dmin = std::min(dmin, (mid - c.position).norm());
        }
    }
    return dmin;
}

bool collision_free(const DiscretePath& path, const CentreConfiguration& config,
                    double threshold) {
    return path_min_distance(path, config) > threshold;
}

// ---------------------------------------------------------------------------
// strong-force modifier

namespace {

// quintic smoothstep s(u) = 6u^5 - 15u^4 + 10u^3 with s' = s'' = 0 at 0 and 1
inline double smoothstep(double u) { return u * u * u * (10.0 + u * (-15.0 + 6.0 * u)); }
inline double smoothstep_d(double u) { return 30.0 * u * u * (1.0 + u * (-2.0 + u)); }
inline double smoothstep_dd(double u) { return 60.0 * u * (1.0 + u * (-3.0 + 2.0 * u)); }

}  // namespace

double StrongForceModifier::psi(double r) const {
    if (r <= delta_star) return 1.0;
    if (r >= 2.0 * delta_star) return 0.0;
    return 1.0 - smoothstep((r - delta_star) / delta_star);
}

double StrongForceModifier::psi_d(double r) const {
    if (r <= delta_star || r >= 2.0 * delta_star) return 0.0;
    return -smoothstep_d((r - delta_star) / delta_star) / delta_star;
}

double StrongForceModifier::psi_dd(double r) const {
    if (r <= delta_star || r >= 2.0 * delta_star) return 0.0;
    return -smoothstep_dd((r - delta_star) / delta_star) / (delta_star * delta_star);
}

double modified_potential(const CentreConfiguration& config, const StrongForceModifier& mod,
                          const Vec3& x) {
    double v = eval_V(config, x);
    if (mod.beta == 0.0) return v;
    for (const auto& c : config.centres) {
        double rho = (x - c.position).squaredNorm();
        double psi = mod.psi(rho);
        if (psi > 0.0) v += mod.beta * c.mass / (2.0 * rho) * psi;
    }
    return v;
}

Vec3 modified_gradient(const CentreConfiguration& config, const StrongForceModifier& mod,
                       const Vec3& x) {
    Vec3 g = eval_gradV(config, x);
    if (mod.beta == 0.0) return g;
    for (const auto& c : config.centres) {
        Vec3 d = x - c.position;
        double rho = d.squaredNorm();
        if (rho >= 2.0 * mod.delta_star) continue;
        // U_i = m_i/2 * g(rho), g(rho) = psi(rho)/rho, grad rho = 2 d
        double gp = (mod.psi_d(rho) * rho - mod.psi(rho)) / (rho * rho);
        g += mod.beta * c.mass * gp * d;
    }
    return g;
}

Mat3 modified_hessian(const CentreConfiguration& config, const StrongForceModifier& mod,
                      const Vec3& x) {
    Mat3 h = eval_hessV(config, x);
    if (mod.beta == 0.0) return h;
    for (const auto& c : config.centres) {
        Vec3 d = x - c.position;
        double rho = d.squaredNorm();
        if (rho >= 2.0 * mod.delta_star) continue;
        double psi = mod.psi(rho), psid = mod.psi_d(rho), psidd = mod.psi_dd(rho);
        double gp = (psid * rho - psi) / (rho * rho);
        double gpp = (psidd * rho * rho - 2.0 * psid * rho + 2.0 * psi) / (rho * rho * rho);
        h += mod.beta * c.mass *
             (2.0 * gpp * d * d.transpose() + gp * Mat3::Identity());
    }
    return h;
}

// ---------------------------------------------------------------------------
// discrete Maupertuis functional

namespace {

void require_collision_free(const DiscretePath& path, const CentreConfiguration& config) {
    if (!collision_free(path, config))
        throw CollisionPath("path touches the collision threshold");
}

double kinetic_integral(const DiscretePath& path) {
    double T = 0.0;
    const double h = path.h();
    for (int k = 0; k < path.n(); ++k)
        T += (path.nodes.col(k + 1) - path.nodes.col(k)).squaredNorm() / h;
    return T;
}

double potential_integral(const DiscretePath& path, const StrongForceModifier& mod,
                          const CentreConfiguration& config) {
    const int n = path.n();
    const double h = path.h();
    double W = 0.5 * (modified_potential(config, mod, path.nodes.col(0)) +
                      modified_potential(config, mod, path.nodes.col(n)));
    for (int k = 1; k < n; ++k) W += modified_potential(config, mod, path.nodes.col(k));
    return W * h;
}

}  // namespace

double maupertuis_value(const DiscretePath& path, const StrongForceModifier& mod,
                        const CentreConfiguration& config) {
    path.validate();
    require_collision_free(path, config);
    return kinetic_integral(path) * potential_integral(path, mod, config);
}

Mat3X maupertuis_gradient(const DiscretePath& path, const StrongForceModifier& mod,
                          const CentreConfiguration& config) {
    path.validate();
    require_collision_free(path, config);
    const int n = path.n();
    const double h = path.h();
    const double T = kinetic_integral(path);
    const double W = potential_integral(path, mod, config);

    Mat3X grad = Mat3X::Zero(3, n + 1);
    for (int k = 1; k < n; ++k) {
        Vec3 dT = (2.0 / h) * (2.0 * path.nodes.col(k) - path.nodes.col(k - 1) -
                               path.nodes.col(k + 1));
        Vec3 dW = h * modified_gradient(config, mod, path.nodes.col(k));
        grad.col(k) = W * dT + T * dW;
    }
    return grad;
}

MatX maupertuis_hessian(const DiscretePath& path, const StrongForceModifier& mod,
                        const CentreConfiguration& config) {
    path.validate();
    require_collision_free(path, config);
    const int n = path.n();
    const double h = path.h();
    const double T = kinetic_integral(path);
    const double W = potential_integral(path, mod, config);
    const int dim = 3 * (n - 1);

    VecX gT = VecX::Zero(dim), gW = VecX::Zero(dim);
    for (int k = 1; k < n; ++k) {
        Vec3 dT = (2.0 / h) * (2.0 * path.nodes.col(k) - path.nodes.col(k - 1) -
                               path.nodes.col(k + 1));
        Vec3 dW = h * modified_gradient(config, mod, path.nodes.col(k));
        gT.segment<3>(3 * (k - 1)) = dT;
        gW.segment<3>(3 * (k - 1)) = dW;
    }

    MatX H = MatX::Zero(dim, dim);
    for (int k = 1; k < n; ++k) {
        int b = 3 * (k - 1);
        H.block<3, 3>(b, b) += W * (4.0 / h) * Mat3::Identity() +
                               T * h * modified_hessian(config, mod, path.nodes.col(k));
        if (k + 1 < n) {
            H.block<3, 3>(b, b + 3) += -W * (2.0 / h) * Mat3::Identity();
            H.block<3, 3>(b + 3, b) += -W * (2.0 / h) * Mat3::Identity();
        }
    }
    H += gT * gW.transpose() + gW * gT.transpose();
    return H;
}

double omega_of(const DiscretePath& path, const StrongForceModifier& mod,
                const CentreConfiguration& config) {
    path.validate();
    require_collision_free(path, config);
    double T = kinetic_integral(path);
    if (T < 1e-300) throw DegeneratePath("constant path has no time scale");
    double W = potential_integral(path, mod, config);
    return std::sqrt(T / (2.0 * W));
}

TrueTimeTrajectory to_true_time(const DiscretePath& path, const StrongForceModifier& mod,
                                const CentreConfiguration& config, int oversample) {
    const double omega = omega_of(path, mod, config);  // validates
    const int n = path.n();

    VecX knots(n + 1);
    for (int k = 0; k <= n; ++k) knots[k] = path.t(k);
    CubicSpline spline(knots, path.nodes);

    const int m = oversample * n;
    TrueTimeTrajectory traj;
    traj.omega = omega;
    traj.times.resize(m + 1);
    traj.positions.resize(3, m + 1);
    traj.velocities.resize(3, m + 1);
    traj.h_residual.resize(m + 1);
    for (int j = 0; j <= m; ++j) {
        double s = -1.0 + 2.0 * j / m;
        double t = omega * s;
        Vec3 x = spline.eval(s);
        Vec3 v = spline.deriv(s) / omega;
        traj.times[j] = t;
        traj.positions.col(j) = x;
        traj.velocities.col(j) = v;
        traj.h_residual[j] = 0.5 * v.squaredNorm() - modified_potential(config, mod, x);
    }
    return traj;
}

double action_value(const TrueTimeTrajectory& trajectory, const CentreConfiguration& config) {
    const int m = trajectory.size();
    if (m < 2) throw DomainError("trajectory too short for quadrature");
    double sum = 0.0;
    auto lagr = [&](int j) {
        return 0.5 * trajectory.velocities.col(j).squaredNorm() +
               eval_V(config, trajectory.positions.col(j));
    };
    double prev = lagr(0);
    for (int j = 1; j < m; ++j) {
        double cur = lagr(j);
        sum += 0.5 * (prev + cur) * (trajectory.times[j] - trajectory.times[j - 1]);
        prev = cur;
    }
    return sum;
}

// ---------------------------------------------------------------------------
// loops and degrees

void PathLoop::validate() const {
    if (loop_size() < 8) throw DomainError("loop needs at least 8 members");
    const int n = members.front().n();
    for (const auto& u : members) {
        if (u.n() != n) throw DomainError("loop members must share the grid");
        if ((u.q_minus() - members.front().q_minus()).norm() > 1e-12 ||
            (u.q_plus() - members.front().q_plus()).norm() > 1e-12)
            throw DomainError("loop members must share endpoints");
    }
}

namespace {

// signed solid angle of the spherical triangle (a,b,c) (Van Oosterom-Strackee)
double triangle_solid_angle(const Vec3& a, const Vec3& b, const Vec3& c) {
    double num = a.dot(b.cross(c));
    double den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    return 2.0 * std::atan2(num, den);
}

int degree_about(const PathLoop& loop, const Vec3& centre) {
    const int M = loop.loop_size();
    const int n = loop.members.front().n();
    // normalized grid map
    MatX dirs_x(M, n + 1), dirs_y(M, n + 1), dirs_z(M, n + 1);
    for (int j = 0; j < M; ++j)
        for (int k = 0; k <= n; ++k) {
            Vec3 d = loop.members[j].nodes.col(k) - centre;
            double r = d.norm();
            if (r < 1e-14) throw CollisionPath("loop member touches the centre");
            d /= r;
            dirs_x(j, k) = d.x();
            dirs_y(j, k) = d.y();
            dirs_z(j, k) = d.z();
        }
    auto dir = [&](int j, int k) {
        j = ((j % M) + M) % M;
        return Vec3(dirs_x(j, k), dirs_y(j, k), dirs_z(j, k));
    };
    double total = 0.0;
    for (int j = 0; j < M; ++j)
        for (int k = 0; k < n; ++k) {
            Vec3 A = dir(j, k), B = dir(j + 1, k), C = dir(j + 1, k + 1), D = dir(j, k + 1);
            total += triangle_solid_angle(A, B, C) + triangle_solid_angle(A, C, D);
        }
    double deg = total / (4.0 * kPi);
    double rounded = std::round(deg);
    if (std::abs(deg - rounded) >= 0.1)
        throw UnresolvedDegree("solid-angle sum not close to an integer; refine the grid");
    return static_cast<int>(rounded);
}

}  // namespace

std::pair<int, int> loop_degrees(const PathLoop& loop, const CentreConfiguration& config,
                                 int centre_1, int centre_2) {
    loop.validate();
    if (centre_1 < 0 || centre_2 < 0 ||
        centre_1 >= static_cast<int>(config.centres.size()) ||
        centre_2 >= static_cast<int>(config.centres.size()))
        throw DomainError("designated centre index out of range");
    int d1 = degree_about(loop, config.centres[centre_1].position);
    int d2 = degree_about(loop, config.centres[centre_2].position);
    return {d1, d2};
}

int loop_degree_about(const PathLoop& loop, const CentreConfiguration& config, int centre) {
    loop.validate();
    if (centre < 0 || centre >= static_cast<int>(config.centres.size()))
        throw DomainError("designated centre index out of range");
    return degree_about(loop, config.centres[centre].position);
}

// ---------------------------------------------------------------------------
// construction helpers

DiscretePath path_from_polyline(const std::vector<Vec3>& polyline,
                                const CentreConfiguration& config, int n) {
    if (polyline.size() < 2) throw DomainError("polyline needs at least two points");
    // cumulative zero-energy travel time along the polyline: dt = ds / sqrt(2V)
    const int segments_per_edge = 16;
    std::vector<double> cum{0.0};
    std::vector<Vec3> pts{polyline.front()};
    for (size_t e = 0; e + 1 < polyline.size(); ++e) {
        for (int j = 1; j <= segments_per_edge; ++j) {
            Vec3 p = polyline[e] + (polyline[e + 1] - polyline[e]) *
                                       (static_cast<double>(j) / segments_per_edge);
            Vec3 mid = 0.5 * (p + pts.back());
            double speed = std::sqrt(2.0 * std::max(eval_V(config, mid), 1e-12));
            cum.push_back(cum.back() + (p - pts.back()).norm() / speed);
            pts.push_back(p);
        }
    }
    DiscretePath path;
    path.nodes.resize(3, n + 1);
    const double total = cum.back();
    size_t idx = 0;
    for (int k = 0; k <= n; ++k) {
        double target = total * k / n;
        while (idx + 1 < cum.size() && cum[idx + 1] < target) ++idx;
        if (idx + 1 >= cum.size()) {
            path.nodes.col(k) = pts.back();
            continue;
        }
        double span = cum[idx + 1] - cum[idx];
        double w = span > 0.0 ? (target - cum[idx]) / span : 0.0;
        path.nodes.col(k) = (1.0 - w) * pts[idx] + w * pts[idx + 1];
    }
    path.nodes.col(0) = polyline.front();
    path.nodes.col(n) = polyline.back();
    return path;
}

PathLoop make_winding_loop(const CentreConfiguration& config, const Vec3& q_minus,
                           const Vec3& q_plus, int around, double rho, int M, int n) {
    if (around < 0 || around >= static_cast<int>(config.centres.size()))
        throw DomainError("winding centre index out of range");
    const Vec3 c = config.centres[around].position;
    const Vec3 chord = (q_plus - q_minus).normalized();

    auto build = [&](const Vec3& seed) {
        Vec3 e1 = (seed - seed.dot(chord) * chord).normalized();
        Vec3 e2 = chord.cross(e1);
        PathLoop loop;
        loop.members.reserve(M);
        for (int j = 0; j < M; ++j) {
            double phase = 2.0 * kPi * j / M;
            Vec3 offset = std::cos(phase) * e1 + std::sin(phase) * e2;
            // spine q- -> c -> q+ sampled densely, bulged sideways by rho
            std::vector<Vec3> poly;
            const int half = 64;
            for (int i = 0; i <= 2 * half; ++i) {
                double s = static_cast<double>(i) / (2 * half);  // 0..1 along the spine
                Vec3 base = s <= 0.5 ? Vec3(q_minus + (c - q_minus) * (2.0 * s))
                                     : Vec3(c + (q_plus - c) * (2.0 * s - 1.0));
                double bump = std::sin(kPi * s);
                poly.push_back(base + rho * bump * offset);
            }
            loop.members.push_back(path_from_polyline(poly, config, n));
        }
        return loop;
    };

    // the tube plane must stay transverse to both spine legs; try a few
    // frame seeds and keep the first one whose degrees come out right
    std::vector<Vec3> seeds = {Vec3(0, 0, 1), Vec3(0, 1, 0), Vec3(1, 0, 0),
                               Vec3(1, 1, 1).normalized()};
    for (const Vec3& seed : seeds) {
        if (std::abs(seed.normalized().dot(chord)) > 0.9) continue;
        PathLoop loop = build(seed);
        bool admissible = true;
        try {
            for (size_t i = 0; i < config.centres.size() && admissible; ++i) {
                int d = loop_degree_about(loop, config, static_cast<int>(i));
                if (static_cast<int>(i) == around ? std::abs(d) != 1 : d != 0)
                    admissible = false;
            }
        } catch (const Error&) {
            admissible = false;
        }
        if (admissible) return loop;
    }
    throw DegreeBroken("could not build an admissible winding loop for this geometry");
}

}  // namespace parabolica
