#include "parabolica/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace parabolica {

double CentreConfiguration::total_mass() const {
    double m = 0.0;
    for (const auto& c : centres) m += c.mass;
    return m;
}

double CentreConfiguration::max_centre_norm() const {
    double xi = 0.0;
    for (const auto& c : centres) xi = std::max(xi, c.position.norm());
    return xi;
}

void CentreConfiguration::validate() const {
    if (!(alpha >= 1.0 && alpha < 2.0)) throw InvalidConfiguration("alpha must lie in [1,2)");
    if (centres.empty()) throw InvalidConfiguration("no centres given");
    for (const auto& c : centres)
        if (!(c.mass > 0.0)) throw InvalidConfiguration("masses must be positive");
    for (size_t i = 0; i < centres.size(); ++i)
        for (size_t j = i + 1; j < centres.size(); ++j)
            if ((centres[i].position - centres[j].position).norm() < 1e-12)
                throw InvalidConfiguration("duplicate centres");
}

CentreConfiguration normalize(const CentreConfiguration& config) {
    config.validate();
    Vec3 centroid = Vec3::Zero();
    for (const auto& c : config.centres) centroid += c.mass * c.position;
    centroid /= config.total_mass();
    CentreConfiguration out = config;
    for (auto& c : out.centres) c.position -= centroid;
    return out;
}

namespace {

void check_not_colliding(const CentreConfiguration& config, const Vec3& x, int skip = -1) {
    for (size_t i = 0; i < config.centres.size(); ++i) {
        if (static_cast<int>(i) == skip) continue;
        if ((x - config.centres[i].position).norm() < kCollisionEvalThreshold)
            throw CollisionEvaluation("evaluation at a centre");
    }
}

}  // namespace

double eval_V(const CentreConfiguration& config, const Vec3& x) {
    check_not_colliding(config, x);
    double v = 0.0;
    for (const auto& c : config.centres)
        v += c.mass / (config.alpha * std::pow((x - c.position).norm(), config.alpha));
    return v;
}

Vec3 eval_gradV(const CentreConfiguration& config, const Vec3& x) {
    check_not_colliding(config, x);
    Vec3 g = Vec3::Zero();
    for (const auto& c : config.centres) {
        Vec3 d = x - c.position;
        g -= c.mass * std::pow(d.norm(), -config.alpha - 2.0) * d;
    }
    return g;
}

Mat3 eval_hessV(const CentreConfiguration& config, const Vec3& x) {
    check_not_colliding(config, x);
    Mat3 h = Mat3::Zero();
    const double a = config.alpha;
    for (const auto& c : config.centres) {
        Vec3 d = x - c.position;
        double r = d.norm();
        h += c.mass * ((a + 2.0) * std::pow(r, -a - 4.0) * d * d.transpose() -
                       std::pow(r, -a - 2.0) * Mat3::Identity());
    }
    return h;
}

FarField far_field_remainder(const CentreConfiguration& config, const Vec3& x) {
    double r = x.norm();
    if (r < kCollisionEvalThreshold) throw CollisionEvaluation("far-field split at the origin");
    const double a = config.alpha;
    const double m = config.total_mass();
    FarField out;
    out.W = eval_V(config, x) - m / (a * std::pow(r, a));
    out.gradW = eval_gradV(config, x) + m * std::pow(r, -a - 2.0) * x;
    return out;
}

double near_field_remainder(const CentreConfiguration& config, int centre, const Vec3& x) {
    check_not_colliding(config, x, centre);
    double v = 0.0;
    for (size_t i = 0; i < config.centres.size(); ++i) {
        if (static_cast<int>(i) == centre) continue;
        const auto& c = config.centres[i];
        v += c.mass / (config.alpha * std::pow((x - c.position).norm(), config.alpha));
    }
    return v;
}

Vec3 near_field_gradient(const CentreConfiguration& config, int centre, const Vec3& x) {
    check_not_colliding(config, x, centre);
    Vec3 g = Vec3::Zero();
    for (size_t i = 0; i < config.centres.size(); ++i) {
        if (static_cast<int>(i) == centre) continue;
        Vec3 d = x - config.centres[i].position;
        g -= config.centres[i].mass * std::pow(d.norm(), -config.alpha - 2.0) * d;
    }
    return g;
}

Mat3 near_field_hessian(const CentreConfiguration& config, int centre, const Vec3& x) {
    check_not_colliding(config, x, centre);
    Mat3 h = Mat3::Zero();
    const double a = config.alpha;
    for (size_t i = 0; i < config.centres.size(); ++i) {
        if (static_cast<int>(i) == centre) continue;
        Vec3 d = x - config.centres[i].position;
        double r = d.norm();
        h += config.centres[i].mass * ((a + 2.0) * std::pow(r, -a - 4.0) * d * d.transpose() -
                                       std::pow(r, -a - 2.0) * Mat3::Identity());
    }
    return h;
}

const CertificateEntry& PotentialConstants::entry(const std::string& name) const {
    for (const auto& e : certificate)
        if (e.inequality == name) return e;
    throw DomainError("no certificate entry named " + name);
}

namespace {

// Product grid on the unit sphere, n_theta x 2*n_theta points.
std::vector<Vec3> sphere_grid(int n_theta) {
    std::vector<Vec3> pts;
    pts.reserve(static_cast<size_t>(n_theta) * 2 * n_theta);
    for (int i = 0; i < n_theta; ++i) {
        double th = kPi * (i + 0.5) / n_theta;
        for (int j = 0; j < 2 * n_theta; ++j) {
            double ph = 2.0 * kPi * j / (2 * n_theta);
            pts.emplace_back(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                             std::cos(th));
        }
    }
    return pts;
}

struct MarginAccumulator {
    double worst = std::numeric_limits<double>::infinity();
    void take(double margin) { worst = std::min(worst, margin); }
};

}  // namespace

PotentialConstants certify_constants(const CentreConfiguration& config, int grid_resolution) {
    config.validate();
    Vec3 centroid = Vec3::Zero();
    for (const auto& c : config.centres) centroid += c.mass * c.position;
    if (centroid.norm() > 1e-9 * (1.0 + config.max_centre_norm()))
        throw InvalidConfiguration("configuration must be normalized before certification");

    const double a = config.alpha;
    const double m = config.total_mass();
    const double Xi = config.max_centre_norm();
    const int n_radii = 64;
    const auto sphere = sphere_grid(grid_resolution);

    PotentialConstants out;

    // --- delta*: geometric constraints first, then shrink until the two
    // near-centre inequalities hold on the sampled balls. The shrink search
    // runs on a coarse grid; the final value is verified at full resolution.
    double min_gap = std::numeric_limits<double>::infinity();
    double min_slack = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < config.centres.size(); ++i) {
        min_slack = std::min(min_slack, Xi + 1.0 - config.centres[i].position.norm());
        for (size_t j = i + 1; j < config.centres.size(); ++j)
            min_gap = std::min(min_gap,
                               (config.centres[i].position - config.centres[j].position).norm());
    }
    double delta = 0.995 * std::min({1.0, std::isfinite(min_gap) ? min_gap / 4.0 : 1.0, min_slack});

    std::vector<double> phi_at_centre(config.centres.size());
    for (size_t i = 0; i < config.centres.size(); ++i)
        phi_at_centre[i] =
            near_field_remainder(config, static_cast<int>(i), config.centres[i].position);

    MarginAccumulator near_convexity, near_domination;
    auto near_margins = [&](double d, bool record) {
        // deltastar2: (2-a)/a * m_i r^-a + 2 Phi_i(c_i) + gradPhi_i(x).(x-c_i) > 0
        // deltastar3: V(x) <= 3 m_i / (2 a r^a)  on 0 < |x-c_i| <= d
        const auto& pts = record ? sphere : sphere_grid(8);
        const int radii = record ? n_radii : 12;
        double worst2 = std::numeric_limits<double>::infinity();
        double worst3 = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < config.centres.size(); ++i) {
            const Vec3 ci = config.centres[i].position;
            const double mi = config.centres[i].mass;
            for (int k = 0; k < radii; ++k) {
                double rho = d * std::pow(1e-4, static_cast<double>(radii - 1 - k) / (radii - 1));
                for (const Vec3& s : pts) {
                    Vec3 x = ci + rho * s;
                    Vec3 gphi = near_field_gradient(config, static_cast<int>(i), x);
                    double lhs2 = (2.0 - a) / a * mi * std::pow(rho, -a) +
                                  2.0 * phi_at_centre[i] + gphi.dot(x - ci);
                    worst2 = std::min(worst2, lhs2);
                    double lhs3 = 1.5 * mi / (a * std::pow(rho, a)) - eval_V(config, x);
                    worst3 = std::min(worst3, lhs3);
                }
            }
        }
        if (record) {
            near_convexity.take(worst2);
            near_domination.take(worst3);
        }
        return std::min(worst2, worst3);
    };
    for (int it = 0; it < 200 && near_margins(delta, false) <= 0.0; ++it) delta *= 0.7;
    while (near_margins(delta, true) <= 0.0) {
        near_convexity = MarginAccumulator{};
        near_domination = MarginAccumulator{};
        delta *= 0.7;
        if (delta < 1e-8) throw CertificationFailure("could not certify a positive delta*");
    }
    out.delta_star = delta;

    // deltastar geometric margins
    MarginAccumulator geo;
    for (size_t i = 0; i < config.centres.size(); ++i) {
        geo.take(Xi + 1.0 - config.centres[i].position.norm() - delta);
        for (size_t j = i + 1; j < config.centres.size(); ++j)
            geo.take((config.centres[i].position - config.centres[j].position).norm() -
                     2.0 * delta);
    }
    if (geo.worst <= 0.0) throw CertificationFailure("delta* geometric constraints violated");

    // --- K: smallest grid point where the fixed-constant inequality
    // 2|W| + |gradW . x| <= (2-a) m / (4 a |x|^a) holds on the shell [K,10K].
    auto shell_ok = [&](double K, double* worst_margin) {
        double worst = std::numeric_limits<double>::infinity();
        for (int k = 0; k < n_radii; ++k) {
            double r = K * std::pow(10.0, static_cast<double>(k) / (n_radii - 1));
            for (const Vec3& s : sphere) {
                Vec3 x = r * s;
                FarField ff = far_field_remainder(config, x);
                double margin = (2.0 - a) * m / (4.0 * a * std::pow(r, a)) -
                                (2.0 * std::abs(ff.W) + std::abs(ff.gradW.dot(x)));
                worst = std::min(worst, margin);
            }
        }
        if (worst_margin) *worst_margin = worst;
        return worst > 0.0;
    };
    const double K_cap = 1e4 * (Xi + 1.0);
    double K = (Xi + 1.0) * 1.001;
    double w2_margin = 0.0;
    while (!shell_ok(K, &w2_margin)) {
        K *= 1.25;
        if (K > K_cap) throw CertificationFailure("no admissible K below the cap");
    }
    out.K = K;

    // --- C+/C- from shell extrema, with the safety factors.
    double supW = 0.0, supGradW = 0.0, supV = 0.0, supSqrtDev = 0.0;
    double infV = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n_radii; ++k) {
        double r = K * std::pow(10.0, static_cast<double>(k) / (n_radii - 1));
        for (const Vec3& s : sphere) {
            Vec3 x = r * s;
            FarField ff = far_field_remainder(config, x);
            double V = eval_V(config, x);
            supW = std::max(supW, std::abs(ff.W) * std::pow(r, a + 2.0));
            supGradW = std::max(supGradW, ff.gradW.norm() * std::pow(r, a + 3.0));
            supV = std::max(supV, V * std::pow(r, a));
            infV = std::min(infV, V * std::pow(r, a));
            double dev = std::abs(std::sqrt(V) - std::sqrt(m / a) * std::pow(r, -a / 2.0));
            supSqrtDev = std::max(supSqrtDev, dev * std::pow(r, 2.0 + a / 2.0));
        }
    }
    double C_plus = 2.0 * std::max({supW, supGradW, supV, supSqrtDev});
    if (C_plus <= 0.0) C_plus = 1e-12;  // exact single-centre case: any positive C+ certifies
    double C_minus = 0.5 * infV;
    out.C_plus = C_plus;
    out.C_minus = C_minus;

    // --- margins per inequality for the certificate.
    MarginAccumulator mW, mGradW, mW2, mVlow, mVhigh, mKlow, mKhigh;
    mW2.take(w2_margin);
    for (int k = 0; k < n_radii; ++k) {
        double r = K * std::pow(10.0, static_cast<double>(k) / (n_radii - 1));
        for (const Vec3& s : sphere) {
            Vec3 x = r * s;
            FarField ff = far_field_remainder(config, x);
            double V = eval_V(config, x);
            mW.take(C_plus * std::pow(r, -a - 2.0) - std::abs(ff.W));
            mGradW.take(C_plus * std::pow(r, -a - 3.0) - ff.gradW.norm());
            mVlow.take(V - C_minus * std::pow(r, -a));
            mVhigh.take(C_plus * std::pow(r, -a) - V);
            double head = std::sqrt(m / a) * std::pow(r, -a / 2.0);
            double tail = C_plus * std::pow(r, -2.0 - a / 2.0);
            mKlow.take(std::sqrt(V) - (head - tail));
            mKhigh.take(head + tail - std::sqrt(V));
        }
    }

    const int res = grid_resolution;
    out.certificate = {
        {"deltastar", res, geo.worst},
        {"deltastar2", res, near_convexity.worst},
        {"deltastar3", res, near_domination.worst},
        {"stimaW", res, mW.worst},
        {"stimaW_grad", res, mGradW.worst},
        {"stimaW2", res, mW2.worst},
        {"stimaV_lower", res, mVlow.worst},
        {"stimaV_upper", res, mVhigh.worst},
        {"stimak_lower", res, mKlow.worst},
        {"stimak_upper", res, mKhigh.worst},
    };
    for (const auto& e : out.certificate)
        if (!(e.worst_margin > 0.0))
            throw CertificationFailure("non-positive certificate margin for " + e.inequality);
    return out;
}

}  // namespace parabolica
