#include "fbsde/riccati.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace fbsde {

namespace {

std::array<double, 2> rhs(const std::array<double, 2>& y) {
    const double a = y[0], c = y[1];
    return {3.0 - c - 2.0 * a * a, 1.0 - a - 2.0 * a * c};
}

double interpolate(const std::vector<double>& t, const std::vector<double>& v, double x) {
    const auto n = t.size();
    const double dt = t[1] - t[0];
    double pos = (x - t.front()) / dt;
    auto i = static_cast<long>(std::floor(pos));
    // 4-point Lagrange stencil clamped to the grid
    long lo = i - 1;
    if (lo < 0) lo = 0;
    if (lo + 3 >= static_cast<long>(n)) lo = static_cast<long>(n) - 4;
    double out = 0.0;
    for (long j = lo; j < lo + 4; ++j) {
        double w = 1.0;
        for (long k = lo; k < lo + 4; ++k) {
            if (k == j) continue;
            w *= (x - t[k]) / (t[j] - t[k]);
        }
        out += w * v[j];
    }
    return out;
}

}  // namespace

double RiccatiSolution::a_at(double time) const { return interpolate(t, a, time); }
double RiccatiSolution::c_at(double time) const { return interpolate(t, c, time); }

RiccatiSolution solve_riccati_example31(int steps) {
    if (steps < 100) throw std::invalid_argument("riccati: need at least 100 steps");
    RiccatiSolution sol;
    sol.steps = steps;
    sol.t.resize(steps + 1);
    sol.a.resize(steps + 1);
    sol.c.resize(steps + 1);

    const double h = -1.0 / steps;  // backward from t = 1
    std::array<double, 2> y{-1.0, 0.0};
    sol.t[steps] = 1.0;
    sol.a[steps] = y[0];
    sol.c[steps] = y[1];
    for (int i = steps - 1; i >= 0; --i) {
        const auto k1 = rhs(y);
        const auto k2 = rhs({y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]});
        const auto k3 = rhs({y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]});
        const auto k4 = rhs({y[0] + h * k3[0], y[1] + h * k3[1]});
        y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        sol.t[i] = static_cast<double>(i) / steps;
        sol.a[i] = y[0];
        sol.c[i] = y[1];
        if (!std::isfinite(y[0]) || !std::isfinite(y[1]) || std::abs(y[0] - 0.5) < 1e-3)
            sol.singular = true;
    }
    sol.y0_factor = sol.a[0];
    return sol;
}

double oracle_y0(double x0, int steps) {
    RiccatiSolution sol = solve_riccati_example31(steps);
    if (sol.singular) throw std::runtime_error("riccati: singular solution, oracle unusable");
    return sol.y0_factor * x0;
}

OracleFunctionals oracle_functional(int steps) {
    auto sol = std::make_shared<RiccatiSolution>(solve_riccati_example31(steps));
    if (sol->singular) throw std::runtime_error("riccati: singular solution, oracle unusable");

    OracleFunctionals out;
    out.u = scalar_functional([sol](const Path& p) {
        if (p.dim() != 2) throw std::invalid_argument("oracle functional: expected joint dim 2");
        const double t = p.end_time();
        const PathView xcomp = PathView(p).components(1, 1);
        const double x = xcomp.last()[0];
        const double A = path_integral(xcomp)[0];
        return sol->a_at(t) * x + sol->c_at(t) * A;
    });
    out.v = scalar_functional([sol](const Path& p) {
        if (p.dim() != 2) throw std::invalid_argument("oracle functional: expected joint dim 2");
        const double t = p.end_time();
        const PathView xcomp = PathView(p).components(1, 1);
        const double A = path_integral(xcomp)[0];
        const double a = sol->a_at(t);
        return a * A / (1.0 - 2.0 * a);
    });
    return out;
}

void write_riccati_csv(const RiccatiSolution& sol, const std::string& filename) {
    std::ofstream os(filename);
    if (!os) throw std::runtime_error("cannot open " + filename);
    os << "t,a,c\n";
    char buf[100];
    for (std::size_t i = 0; i < sol.t.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", sol.t[i], sol.a[i], sol.c[i]);
        os << buf;
    }
}

}  // namespace fbsde
