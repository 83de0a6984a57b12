#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "parabolica/kepler.hpp"

using namespace parabolica;

TEST_CASE("gamma_const frozen values") {
    // (3/sqrt(2))^(2/3) and 3^(2/3), evaluated independently at high precision
    CHECK(gamma_const(1.0, 1.0) == doctest::Approx(1.6509636244473133).epsilon(1e-14));
    CHECK(gamma_const(1.0, 2.0) == doctest::Approx(2.0800838230519041).epsilon(1e-14));
    CHECK(gamma_const(1.5, 1.0) == doctest::Approx(1.4947744532835774).epsilon(1e-14));
}

TEST_CASE("gamma_const scaling in mu") {
    for (double alpha : {1.0, 1.3, 1.7}) {
        double lhs = gamma_const(alpha, 4.0);
        double rhs = std::pow(4.0, 1.0 / (2.0 + alpha)) * gamma_const(alpha, 1.0);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-14));
    }
}

TEST_CASE("rho_star and the radial function") {
    HomogeneousProblem p1{1.0, 1.0};
    CHECK(rho_star(p1) == doctest::Approx(0.5).epsilon(1e-15));
    HomogeneousProblem p15{1.0, 1.5};
    CHECK(rho_star(p15) == doctest::Approx(0.5625).epsilon(1e-14));

    for (const auto& p : {p1, p15}) {
        double rs = rho_star(p);
        CHECK(std::abs(radial_F(p, rs)) < 1e-14);
        CHECK(radial_F(p, 0.5 * rs) > 0.0);
        CHECK(radial_F(p, 2.0 * rs) < 0.0);
    }
}

TEST_CASE("time_to_radius: Barker values for the Newtonian parabola") {
    HomogeneousProblem p{1.0, 1.0};
    CHECK(time_to_radius(p, 1.0, 1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(time_to_radius(p, 1.0, 2.0) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
    CHECK(time_to_radius(p, 0.3, rho_star(p)) == doctest::Approx(0.0));
}

TEST_CASE("time_to_radius is monotone and matches direct radial integration") {
    HomogeneousProblem p{1.0, 1.0};
    double prev = 0.0;
    for (double R : {0.6, 0.8, 1.0, 1.5, 2.5}) {
        double T = time_to_radius(p, 0.9, R);
        CHECK(T > prev);
        prev = T;
    }
    // independent oracle: the radial motion solves r'' = c^2/r^3 - mu r^-(a+1),
    // regular at the pericentre; -2F(r) stays the first integral of this flow
    double rs = rho_star(p);
    double r = rs, v = 0.0, t = 0.0;
    const double h = 1e-5;
    auto acc = [&](double rr) { return 1.0 / (rr * rr * rr) - p.mu * std::pow(rr, -p.alpha - 1.0); };
    while (r < 2.0) {
        double k1x = v, k1v = acc(r);
        double k2x = v + 0.5 * h * k1v, k2v = acc(r + 0.5 * h * k1x);
        double k3x = v + 0.5 * h * k2v, k3v = acc(r + 0.5 * h * k2x);
        double k4x = v + h * k3v, k4v = acc(r + h * k3x);
        double r_new = r + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
        double v_new = v + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
        if (r_new >= 2.0) {
            t += (2.0 - r) / v;  // short final fraction of one step
            r = r_new;
            break;
        }
        r = r_new;
        v = v_new;
        t += h;
        if ((static_cast<long>(t / h) % 20000) == 0)
            CHECK(std::abs(0.5 * v * v + radial_F(p, r)) < 1e-9);  // first integral
    }
    CHECK(t == doctest::Approx(time_to_radius(p, 1.0, 2.0)).epsilon(1e-6));
}

TEST_CASE("time_to_radius rejects bad arguments") {
    HomogeneousProblem p{1.0, 1.0};
    CHECK_THROWS_AS(time_to_radius(p, 1.5, 1.0), NoSolution);  // c^2 >= 2 mu / alpha
    CHECK_THROWS_AS(time_to_radius(p, 0.9, 0.25), DomainError);
}

TEST_CASE("theta_span quadrature agrees with the closed form") {
    for (double alpha : {1.0, 1.25, 1.5, 1.75}) {
        HomogeneousProblem p{1.3, alpha};
        double cmax = p.momentum_limit();
        for (double f : {0.1, 0.4, 0.7, 0.95}) {
            double c = f * cmax;
            CHECK(theta_span(p, c) == doctest::Approx(theta_span_closed(p, c)).epsilon(1e-11));
            CHECK(theta_span(p, -c) == doctest::Approx(-theta_span(p, c)).epsilon(1e-12));
        }
    }
    HomogeneousProblem p{1.0, 1.0};
    CHECK(theta_span(p, 1.0) == doctest::Approx(kPi).epsilon(1e-12));
}

TEST_CASE("theta_span is strictly decreasing in |c|") {
    HomogeneousProblem p{1.0, 1.4};
    double prev = entire_span_limit(1.4);
    for (double f : {0.05, 0.2, 0.4, 0.6, 0.8, 0.95}) {
        double s = theta_span(p, f * p.momentum_limit());
        CHECK(s < prev);
        prev = s;
    }
    CHECK_THROWS_AS(theta_span(p, 0.0), DegenerateRectilinear);
}

TEST_CASE("entire span equals 2 pi/(2 - alpha)") {
    CHECK(entire_span_limit(1.0) == doctest::Approx(2 * kPi).epsilon(1e-15));
    CHECK(entire_span_limit(1.5) == doctest::Approx(4 * kPi).epsilon(1e-15));
    for (double alpha : {1.0, 1.25, 1.5, 1.75}) {
        for (double mu : {1.0, 3.0}) {
            HomogeneousProblem p{mu, alpha};
            double c = 0.5 * p.momentum_limit();
            CHECK(std::abs(entire_span(p, c) - entire_span_limit(alpha)) < 1e-8);
        }
    }
}

TEST_CASE("rectilinear arc satisfies the radial law") {
    HomogeneousProblem p{1.0, 1.0};
    auto arc = rectilinear_arc(p, 0.0, Vec2(1, 0), Branch::Future, 0.0, 2.0, 512);
    const double g = gamma_const(1.0, 1.0);
    const double k = 2.0 / 3.0;
    // r(1) = gamma
    bool found = false;
    for (const auto& s : arc.samples)
        if (std::abs(s.t - 1.0) < 1e-12) {
            CHECK(s.r == doctest::Approx(g).epsilon(1e-14));
            found = true;
        }
    CHECK(found);
    // substitute into the equation of motion: r'' = -mu r^-(alpha+1) with
    // the analytic second derivative of the power law
    for (const auto& s : arc.samples) {
        if (s.t < 0.3) continue;
        double rdd = g * k * (k - 1.0) * std::pow(s.t, k - 2.0);
        double rhs = -p.mu * std::pow(s.r, -p.alpha - 1.0);
        CHECK(std::abs(rdd - rhs) <= 1e-12 * std::abs(rhs));
    }
}

TEST_CASE("no entire rectilinear arc") {
    HomogeneousProblem p{1.0, 1.0};
    CHECK_THROWS_AS(rectilinear_arc(p, 0.0, Vec2(1, 0), Branch::Future, -1.0, 1.0),
                    DomainError);
}

TEST_CASE("shoot: Newtonian half parabola") {
    HomogeneousProblem p{1.0, 1.0};
    auto arc = shoot(p, 0.0, kPi, 0);
    CHECK(arc.angular_momentum == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(arc.rho_star_attained == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(std::abs(arc.samples.front().r - 1.0) < 1e-9);
    CHECK(std::abs(arc.samples.back().r - 1.0) < 1e-9);
    CHECK(std::abs(arc.samples.front().theta - 0.0) < 1e-9);
    CHECK(std::abs(arc.samples.back().theta - kPi) < 1e-9);
}

TEST_CASE("shoot: class solvability matches the span window") {
    HomogeneousProblem p1{1.0, 1.0};
    CHECK_THROWS_AS(shoot(p1, 0.0, kPi, 1), NoSolutionInClass);   // 3 pi > 2 pi
    CHECK_THROWS_AS(shoot(p1, 0.0, 0.0, 0), DegenerateEndpoints);
    HomogeneousProblem p15{1.0, 1.5};
    auto arc = shoot(p15, 0.0, kPi, 1);  // 3 pi < 4 pi
    CHECK(theta_span(p15, arc.angular_momentum) == doctest::Approx(3 * kPi).epsilon(1e-9));
    CHECK(arc.angular_momentum == doctest::Approx(0.4418847653807890).epsilon(1e-9));
}

TEST_CASE("shoot arcs conserve energy and angular momentum") {
    HomogeneousProblem p{2.0, 1.3};
    auto arc = shoot(p, 0.3, 2.0, 0, 512);
    int min_count = 0;
    for (size_t i = 0; i < arc.samples.size(); ++i) {
        CHECK(std::abs(arc.energy_residual(i)) < 1e-9);
        CHECK(std::abs(arc.angmom_residual(i)) < 1e-9);
        if (i > 0 && i + 1 < arc.samples.size() &&
            arc.samples[i].r < arc.samples[i - 1].r && arc.samples[i].r < arc.samples[i + 1].r)
            ++min_count;
    }
    CHECK(min_count == 1);  // single interior pericentre
}

TEST_CASE("shoot arc re-integrated from the pericentre reproduces the endpoints") {
    for (double alpha : {1.0, 1.5}) {
        HomogeneousProblem p{1.0, alpha};
        auto arc = shoot(p, 0.0, 2.5, 0, 1024);
        size_t ip = arc.samples.size() / 2;
        oracles::PlanarState s{arc.position(ip), arc.velocity(ip)};
        double T = arc.samples.back().t;
        auto fwd = oracles::rk4_homogeneous(p, s, T, 200000);
        CHECK((fwd.x - arc.position(arc.samples.size() - 1)).norm() < 1e-6);
        auto bwd = oracles::rk4_homogeneous(p, s, -T, 200000);
        CHECK((bwd.x - arc.position(0)).norm() < 1e-6);
    }
}

TEST_CASE("shooting momentum agrees with the closed-form inverse") {
    // uniqueness cross-check: invert Theta(c) analytically
    for (double alpha : {1.0, 1.5, 1.8}) {
        HomogeneousProblem p{1.0, alpha};
        double target = 0.8 * entire_span_limit(alpha);
        auto arc = shoot(p, 0.0, target - 2 * kPi * std::floor(target / (2 * kPi)),
                         static_cast<int>(std::floor(target / (2 * kPi))));
        double c_closed = p.momentum_limit() *
                          std::sin(kPi / 2 - target * (2.0 - alpha) / 4.0);
        CHECK(arc.angular_momentum == doctest::Approx(c_closed).epsilon(1e-10));
    }
}

TEST_CASE("action of the unit-boundary parabola and the Bolza bound") {
    HomogeneousProblem p{1.0, 1.0};
    auto arc = shoot(p, 0.0, kPi, 0);
    // closed form: A(c) = 4 sqrt(2 - c^2) = 4 at c = 1
    CHECK(action_of_arc(arc) == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(action_bound(p) == doctest::Approx(5.6568542494923802).epsilon(1e-14));

    HomogeneousProblem p15{1.0, 1.5};
    auto arc2 = shoot(p15, 0.0, kPi, 1, 8192);
    CHECK(action_of_arc(arc2) == doctest::Approx(8.5344335487068323).epsilon(1e-7));
    CHECK(action_bound(p15) == doctest::Approx(9.2376043070340122).epsilon(1e-14));
    CHECK(action_of_arc(arc2) < action_bound(p15));
}

TEST_CASE("zero-energy arcs: action equals twice the potential integral") {
    HomogeneousProblem p{1.0, 1.4};
    auto arc = shoot(p, 0.0, 2.0, 0, 1024);
    double twoV = 0.0;
    const size_t n = arc.samples.size() - 1;
    double h = (arc.samples.back().t - arc.samples.front().t) / n;
    for (size_t i = 0; i <= n; ++i) {
        double w = (i == 0 || i == n) ? 0.5 : 1.0;
        twoV += w * 2.0 * p.mu / (p.alpha * std::pow(arc.samples[i].r, p.alpha)) * h;
    }
    CHECK(action_of_arc(arc) == doctest::Approx(twoV).epsilon(1e-6));
}

TEST_CASE("index counters") {
    CHECK(index_counters(1.0).i == 1);
    CHECK(index_counters(1.25).i == 2);
    CHECK(index_counters(1.5).i == 3);
    CHECK(index_counters(1.75).i == 7);
    CHECK(index_counters(1.0).i_star == 0);
    CHECK(index_counters(1.4).i_star == 1);
    CHECK(index_counters(1.5).i_star == 1);
    CHECK(index_counters(1.6).i_star == 2);
}

TEST_CASE("perpendicular index: small domains are coercive") {
    HomogeneousProblem p{1.0, 1.0};
    CHECK(perpendicular_index(p, 0.5, 512) == 0);
}

TEST_CASE("perpendicular index reaches the paper's counters") {
    HomogeneousProblem p1{1.0, 1.0};
    CHECK(perpendicular_index(p1, 200.0, 4096) >= 1);
    HomogeneousProblem p15{1.0, 1.5};
    CHECK(perpendicular_index(p15, 700.0, 4096) >= 3);
    HomogeneousProblem p125{1.0, 1.25};
    CHECK(perpendicular_index(p125, 200.0, 4096) == 2);
}

TEST_CASE("self-intersection count of the entire arc equals i_star") {
    for (double alpha : {1.0, 1.4, 1.6}) {
        HomogeneousProblem p{1.0, alpha};
        double c = 0.5 * p.momentum_limit();
        double rp = pericentre_radius(p, c);
        // geometric polyline of the entire arc from the span integrals
        std::vector<Vec2> pts;
        const int N = 1500;
        const double r_max = 1e4 * rp;
        for (int i = N; i >= 1; --i) {
            double r = rp * std::pow(r_max / rp, static_cast<double>(i) / N);
            double th = -span_to_radius(p, c, r);
            pts.emplace_back(r * std::cos(th), r * std::sin(th));
        }
        for (int i = 1; i <= N; ++i) {
            double r = rp * std::pow(r_max / rp, static_cast<double>(i) / N);
            double th = span_to_radius(p, c, r);
            pts.emplace_back(r * std::cos(th), r * std::sin(th));
        }
        CHECK(oracles::self_intersections(pts) == index_counters(alpha).i_star);
    }
}
