#include <doctest.h>

#include "oracles.hpp"
#include "parabolica/potential.hpp"

using namespace parabolica;

namespace {

CentreConfiguration two_centres(double alpha = 1.0) {
    CentreConfiguration cfg;
    cfg.alpha = alpha;
    cfg.centres = {{Vec3(1, 0, 0), 1.0}, {Vec3(-1, 0, 0), 1.0}};
    return cfg;
}

CentreConfiguration single_centre(double alpha = 1.0, double mass = 1.0) {
    CentreConfiguration cfg;
    cfg.alpha = alpha;
    cfg.centres = {{Vec3::Zero(), mass}};
    return cfg;
}

}  // namespace

TEST_CASE("normalize: already centred configurations are unchanged") {
    auto cfg = normalize(two_centres());
    CHECK(cfg.centres[0].position.isApprox(Vec3(1, 0, 0), 1e-15));
    CHECK(cfg.centres[1].position.isApprox(Vec3(-1, 0, 0), 1e-15));
}

TEST_CASE("normalize: equal masses shift by the midpoint") {
    CentreConfiguration cfg;
    cfg.alpha = 1.0;
    cfg.centres = {{Vec3(2, 0, 0), 1.0}, {Vec3(0, 0, 0), 1.0}};
    auto out = normalize(cfg);
    CHECK(out.centres[0].position.isApprox(Vec3(1, 0, 0), 1e-15));
    CHECK(out.centres[1].position.isApprox(Vec3(-1, 0, 0), 1e-15));
}

TEST_CASE("normalize: weighted centroid lands at the origin") {
    CentreConfiguration cfg;
    cfg.alpha = 1.5;
    cfg.centres = {{Vec3(1, 0, 0), 2.0}, {Vec3(0, 1, 0), 1.0}};
    auto out = normalize(cfg);
    // centroid was (2/3, 1/3, 0)
    CHECK(out.centres[0].position.isApprox(Vec3(1, 0, 0) - Vec3(2.0 / 3, 1.0 / 3, 0), 1e-14));
    Vec3 moment = Vec3::Zero();
    for (const auto& c : out.centres) moment += c.mass * c.position;
    CHECK(moment.norm() < 1e-12);
}

TEST_CASE("normalize rejects duplicate centres and bad masses") {
    CentreConfiguration cfg;
    cfg.alpha = 1.0;
    cfg.centres = {{Vec3(1, 0, 0), 1.0}, {Vec3(1, 0, 0), 1.0}};
    CHECK_THROWS_AS(normalize(cfg), InvalidConfiguration);
    cfg.centres = {{Vec3(1, 0, 0), -1.0}};
    CHECK_THROWS_AS(normalize(cfg), InvalidConfiguration);
    cfg.centres = {{Vec3(1, 0, 0), 1.0}};
    cfg.alpha = 2.0;
    CHECK_THROWS_AS(normalize(cfg), InvalidConfiguration);
}

TEST_CASE("eval_V: single centre, alpha = 1, r = 2") {
    auto cfg = single_centre();
    CHECK(eval_V(cfg, Vec3(2, 0, 0)) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("eval_V: two symmetric centres at the midpoint") {
    auto cfg = two_centres();
    CHECK(eval_V(cfg, Vec3(0, 0, 0)) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("eval_V throws at a centre") {
    auto cfg = two_centres();
    CHECK_THROWS_AS(eval_V(cfg, Vec3(1, 0, 0)), CollisionEvaluation);
    CHECK_THROWS_AS(eval_gradV(cfg, Vec3(1 + 1e-14, 0, 0)), CollisionEvaluation);
}

TEST_CASE("gradient and Hessian match finite differences") {
    auto cfg = two_centres(1.5);
    auto gen = oracles::rng(7);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    int tested = 0;
    while (tested < 25) {
        Vec3 x(u(gen), u(gen), u(gen));
        bool ok = true;
        for (const auto& c : cfg.centres)
            if ((x - c.position).norm() < 0.3) ok = false;
        if (!ok) continue;
        ++tested;
        Vec3 g = eval_gradV(cfg, x);
        Vec3 g_fd = oracles::fd_gradient([&](const Vec3& y) { return eval_V(cfg, y); }, x);
        CHECK((g - g_fd).norm() <= 1e-6 * g.norm());
        Mat3 H = eval_hessV(cfg, x);
        for (int i = 0; i < 3; ++i) {
            Vec3 row_fd = oracles::fd_gradient(
                [&, i](const Vec3& y) { return eval_gradV(cfg, y)[i]; }, x);
            CHECK((H.row(i).transpose() - row_fd).norm() <= 1e-5 * (H.norm() + 1.0));
        }
    }
}

TEST_CASE("homogeneity of the single-centre potential") {
    for (double alpha : {1.0, 1.5, 1.9}) {
        auto cfg = single_centre(alpha);
        Vec3 x(0.7, -1.1, 0.4);
        for (double lam : {2.0, 5.0, 0.25})
            CHECK(eval_V(cfg, lam * x) ==
                  doctest::Approx(std::pow(lam, -alpha) * eval_V(cfg, x)).epsilon(1e-13));
    }
}

TEST_CASE("far field: single centre has identically zero remainder") {
    auto cfg = single_centre(1.5);
    auto ff = far_field_remainder(cfg, Vec3(3, 1, -2));
    CHECK(std::abs(ff.W) < 1e-15);
    CHECK(ff.gradW.norm() < 1e-15);
}

TEST_CASE("far field: W decays like |x|^-(alpha+2) along a ray") {
    auto cfg = two_centres(1.0);
    double prev_scaled = 0.0;
    for (double r = 1e3; r <= 1e6; r *= 2.0) {
        Vec3 x = r * Vec3(0.6, 0.64, 0.48).normalized();
        auto ff = far_field_remainder(cfg, x);
        double scaled = std::abs(ff.W) * std::pow(r, cfg.alpha + 2.0);
        CHECK(scaled < 10.0);  // bounded as |x| doubles
        if (prev_scaled > 0.0) CHECK(scaled < 2.0 * prev_scaled + 1e-9);
        prev_scaled = scaled;
    }
}

TEST_CASE("splitting consistency between far and near fields") {
    auto cfg = two_centres(1.5);
    const double m = cfg.total_mass();
    auto gen = oracles::rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        Vec3 x = 5.0 * oracles::random_unit(gen) + Vec3(0, 0, 2);
        double V = eval_V(cfg, x);
        auto ff = far_field_remainder(cfg, x);
        CHECK(m / (cfg.alpha * std::pow(x.norm(), cfg.alpha)) + ff.W ==
              doctest::Approx(V).epsilon(1e-12));
        for (int i = 0; i < 2; ++i) {
            double head = cfg.centres[i].mass /
                          (cfg.alpha * std::pow((x - cfg.centres[i].position).norm(), cfg.alpha));
            CHECK(head + near_field_remainder(cfg, i, x) == doctest::Approx(V).epsilon(1e-12));
        }
    }
}

TEST_CASE("gradW consistency with finite differences of W") {
    auto cfg = two_centres(1.0);
    Vec3 x(4, 3, 5);
    auto ff = far_field_remainder(cfg, x);
    Vec3 fd = oracles::fd_gradient(
        [&](const Vec3& y) { return far_field_remainder(cfg, y).W; }, x);
    CHECK((ff.gradW - fd).norm() <= 1e-6 * (ff.gradW.norm() + 1e-12));
}

TEST_CASE("near field: single centre remainder vanishes") {
    auto cfg = single_centre(1.0);
    CHECK(near_field_remainder(cfg, 0, Vec3(0.3, 0, 0)) == doctest::Approx(0.0));
}

TEST_CASE("near field: value at the centre is the other term") {
    auto cfg = two_centres(1.0);
    // at c_1 = (1,0,0) the remaining term is m_2/(1 * |2|^1) = 1/2
    CHECK(near_field_remainder(cfg, 0, Vec3(1, 0, 0)) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("near field remainder is continuous across the centre") {
    auto cfg = two_centres(1.5);
    Vec3 c1(1, 0, 0);
    Vec3 dir1 = Vec3(0.3, 0.9, 0.1).normalized();
    Vec3 dir2 = -dir1;
    // limits along the two rays by linear extrapolation to the centre
    auto limit_along = [&](const Vec3& d) {
        double eps = 1e-6;
        return 2.0 * near_field_remainder(cfg, 0, c1 + eps * d) -
               near_field_remainder(cfg, 0, c1 + 2 * eps * d);
    };
    CHECK(std::abs(limit_along(dir1) - limit_along(dir2)) < 1e-10);
    CHECK_THROWS_AS(near_field_remainder(cfg, 0, Vec3(-1, 0, 0)), CollisionEvaluation);
}

TEST_CASE("certify_constants: single centre") {
    auto cfg = normalize(single_centre(1.0));
    auto pc = certify_constants(cfg);
    CHECK(pc.K == doctest::Approx(1.001).epsilon(1e-6));  // Xi + 1 + eps grid point
    CHECK(pc.C_plus > 0.0);
    CHECK(pc.delta_star > 0.0);
    for (const auto& e : pc.certificate) CHECK(e.worst_margin > 0.0);
}

TEST_CASE("certify_constants: two equal centres") {
    auto cfg = normalize(two_centres(1.0));
    auto pc = certify_constants(cfg);
    const double m = cfg.total_mass();

    // C- <= V |x|^alpha <= C+ brackets the total mass for alpha = 1
    CHECK(pc.C_minus <= m);
    CHECK(pc.C_plus >= m);

    // non-overlap: |c_i - c_j| > 2 delta*
    CHECK((cfg.centres[0].position - cfg.centres[1].position).norm() > 2.0 * pc.delta_star);

    // spot-check the certified far-field bound at |x| = 1e3
    Vec3 x = 1e3 * Vec3(0.1, 0.7, 0.7).normalized();
    auto ff = far_field_remainder(cfg, x);
    CHECK(std::abs(ff.W) <= pc.C_plus * std::pow(x.norm(), -cfg.alpha - 2.0));

    for (const auto& e : pc.certificate) CHECK(e.worst_margin > 0.0);
}

TEST_CASE("certify_constants requires a normalized configuration") {
    CentreConfiguration cfg;
    cfg.alpha = 1.0;
    cfg.centres = {{Vec3(2, 0, 0), 1.0}, {Vec3(0, 0, 0), 3.0}};
    CHECK_THROWS_AS(certify_constants(cfg), InvalidConfiguration);
}
