#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "fbsde/riccati.hpp"

using namespace fbsde;

// Reference value of a(0) at 1e4 integration steps, frozen before the main
// solver was built. The LSMC acceptance run is compared against this number.
static constexpr double kA0Reference = -1.3683726524520237;

TEST_CASE("terminal values and derivatives") {
    RiccatiSolution sol = solve_riccati_example31(1000);
    CHECK(sol.a.back() == -1.0);
    CHECK(sol.c.back() == 0.0);
    CHECK_FALSE(sol.singular);

    // a'(1) = 3 - c - 2a^2 = 1, c'(1) = 1 - a - 2ac = 2 at the terminal point
    const double h = 1e-5;
    RiccatiSolution fine = solve_riccati_example31(100000);
    const double ap = (fine.a_at(1.0) - fine.a_at(1.0 - h)) / h;
    const double cp = (fine.c_at(1.0) - fine.c_at(1.0 - h)) / h;
    CHECK(ap == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(cp == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("richardson consistency and frozen reference") {
    RiccatiSolution a = solve_riccati_example31(1000);
    RiccatiSolution b = solve_riccati_example31(2000);
    CHECK(std::abs(a.y0_factor - b.y0_factor) <= 1e-8);

    RiccatiSolution ref = solve_riccati_example31(10000);
    CHECK(ref.y0_factor == doctest::Approx(kA0Reference).epsilon(1e-12));
    // trajectory stays well below the 1/2 singularity
    for (double av : ref.a) CHECK(av < -0.9);
}

TEST_CASE("oracle_y0") {
    CHECK(oracle_y0(0.0, 1000) == 0.0);
    const double y1 = oracle_y0(1.0, 1000);
    CHECK(oracle_y0(2.0, 1000) == doctest::Approx(2.0 * y1));
    CHECK_THROWS_AS(solve_riccati_example31(10), std::invalid_argument);
}

TEST_CASE("oracle functionals") {
    OracleFunctionals fn = oracle_functional(2000);

    // terminal values a(1) = -1, c(1) = 0 make u(flat path at x, t=1) = -x
    const int K = 100;
    const double dt = 1.0 / K;
    Eigen::VectorXd start(2);
    start << 0.0, 1.7;
    Path flat = Path::constant(2, dt, start, K + 1);
    CHECK(fn.u(flat)[0] ==
          doctest::Approx(-1.7 + 0.0 * 1.7).epsilon(1e-9));

    // zero path maps to zero
    Path zero = Path::constant(2, dt, Eigen::VectorXd::Zero(2), K / 2);
    CHECK(fn.u(zero)[0] == 0.0);
    CHECK(fn.v(zero)[0] == 0.0);

    // the implicit equation v (1 - 2a) = a A holds by construction
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    RiccatiSolution sol = solve_riccati_example31(2000);
    for (int t = 0; t < 100; ++t) {
        const std::size_t pts = 2 + rng() % (K / 2);
        std::vector<double> data(pts * 2);
        for (auto& v : data) v = g(rng);
        Path p(2, dt, std::move(data));
        const double tv = p.end_time();
        const double A = path_integral(PathView(p).components(1, 1))[0];
        const double v = fn.v(p)[0];
        CHECK(v * (1.0 - 2.0 * sol.a_at(tv)) - sol.a_at(tv) * A ==
              doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("csv export") {
    RiccatiSolution sol = solve_riccati_example31(200);
    const std::string file = "riccati_test_tmp.csv";
    write_riccati_csv(sol, file);
    std::ifstream is(file);
    std::string header;
    std::getline(is, header);
    CHECK(header == "t,a,c");
    int rows = 0;
    std::string line;
    while (std::getline(is, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 201);
    std::remove(file.c_str());
}
