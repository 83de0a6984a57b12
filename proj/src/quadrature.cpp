#include "parabolica/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "parabolica/errors.hpp"

namespace parabolica {

namespace {

GaussRule build_rule(int n) {
    // Newton iteration on Legendre polynomials, symmetric roots.
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
    static std::map<int, GaussRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, build_rule(n)).first;
    return it->second;
}

double integrate_gl(const std::function<double(double)>& f, double a, double b, int order) {
    const GaussRule& rule = gauss_legendre(order);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double sum = 0.0;
    for (int i = 0; i < order; ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return half * sum;
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol, double abs_tol, int max_depth) {
    if (a == b) return 0.0;
    const double total_len = std::abs(b - a);
    double rough = std::abs(integrate_gl(f, a, b, 64));

    struct Panel {
        double a, b;
        int depth;
    };
    std::vector<Panel> stack{{a, b, 0}};
    double total = 0.0;
    long panels_done = 0;
    while (!stack.empty()) {
        Panel p = stack.back();
        stack.pop_back();
        if (++panels_done > 200000)
            throw NumericalError("adaptive quadrature panel budget exhausted");
        double fine = integrate_gl(f, p.a, p.b, 128);
        double coarse = integrate_gl(f, p.a, p.b, 64);
        double err = std::abs(fine - coarse);
        // tolerance share proportional to panel length, floored at round-off
        double tol = std::max(abs_tol, rel_tol * std::max(rough, std::abs(total))) *
                     (std::abs(p.b - p.a) / total_len);
        double floor = 1e-15 * std::abs(fine) + 1e-300;
        if (err <= std::max(tol, floor) || p.depth >= max_depth) {
            total += fine;
            continue;
        }
        double mid = 0.5 * (p.a + p.b);
        stack.push_back({p.a, mid, p.depth + 1});
        stack.push_back({mid, p.b, p.depth + 1});
    }
    return total;
}

}  // namespace parabolica
