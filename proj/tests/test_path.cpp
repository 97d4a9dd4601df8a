#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fbsde/path.hpp"

using namespace fbsde;

namespace {

Eigen::VectorXd vec1(double x) { return Eigen::VectorXd::Constant(1, x); }

Path scalar_path(double dt, std::initializer_list<double> vals) {
    return {1, dt, std::vector<double>(vals)};
}

Path random_path(std::mt19937_64& rng, int dim, double dt, int max_steps) {
    std::uniform_int_distribution<int> len(1, max_steps);
    std::normal_distribution<double> g(0.0, 1.0);
    const int pts = len(rng) + 1;
    std::vector<double> data(static_cast<std::size_t>(pts) * dim);
    for (double& v : data) v = g(rng);
    return {dim, dt, std::move(data)};
}

}  // namespace

TEST_CASE("path invariants") {
    Path p = scalar_path(0.5, {1.0, 2.0, 3.0});
    CHECK(p.points() == 3);
    CHECK(p.end_time() == doctest::Approx(1.0));
    CHECK(p.value(1)[0] == 2.0);
    CHECK_THROWS_AS(Path(1, 0.5, {}), std::invalid_argument);
    CHECK_THROWS_AS(Path(0, 0.5, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(Path(1, -1.0, {1.0}), std::invalid_argument);
    std::vector<double> bad{1.0, std::nan("")};
    CHECK_THROWS_AS(Path(1, 0.5, bad), std::invalid_argument);
}

TEST_CASE("sup_norm") {
    CHECK(sup_norm(Path::constant(3, 0.1, Eigen::VectorXd::Zero(3), 7)) == 0.0);
    Eigen::VectorXd v(2);
    v << 3.0, 4.0;
    CHECK(sup_norm(Path::constant(2, 0.1, v, 4)) == doctest::Approx(5.0));
    // brute-force max over grid points
    Path p = scalar_path(0.25, {1.0, -7.0, 2.0});
    CHECK(sup_norm(p) == doctest::Approx(7.0));
}

TEST_CASE("d_infty basics") {
    Path p = scalar_path(0.5, {0.0, 1.0, 0.0});
    CHECK(d_infty(p, p) == 0.0);

    Path a = Path::constant(1, 0.5, vec1(1.0), 3);  // on [0,1]
    Path b = Path::constant(1, 0.5, vec1(1.0), 5);  // on [0,2]
    CHECK(d_infty(a, b) == doctest::Approx(1.0));

    Path x = scalar_path(0.5, {0.0, 1.0, 0.0});
    Path y = scalar_path(0.5, {0.0, 0.0, 2.0});
    CHECK(d_infty(x, y) == doctest::Approx(2.0));

    Path wrongdim = Path::constant(2, 0.5, Eigen::VectorXd::Zero(2), 3);
    CHECK_THROWS_AS(d_infty(p, wrongdim), std::invalid_argument);
    Path wrongstep = Path::constant(1, 0.25, vec1(0.0), 3);
    CHECK_THROWS_AS(d_infty(p, wrongstep), std::invalid_argument);
}

TEST_CASE("d_infty metric axioms on random triples") {
    std::mt19937_64 rng(2024);
    int zero_checks = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int dim = 1 + static_cast<int>(rng() % 3);
        const double dt = 0.25;
        Path a = random_path(rng, dim, dt, 8);
        Path b = random_path(rng, dim, dt, 8);
        Path c = random_path(rng, dim, dt, 8);
        const double ab = d_infty(a, b);
        const double ba = d_infty(b, a);
        const double ac = d_infty(a, c);
        const double bc = d_infty(b, c);
        CHECK(ab >= 0.0);
        CHECK(ab == ba);
        CHECK(ac <= ab + bc + 1e-12);
        CHECK(d_infty(a, a) == 0.0);
        // zero distance iff equal end time and equal stopped values
        if (ab == 0.0) {
            ++zero_checks;
            CHECK(a.end_time() == b.end_time());
        }
    }
    (void)zero_checks;
}

TEST_CASE("vertical_bump") {
    Path p = scalar_path(0.5, {1.0, 2.0});
    Path same = vertical_bump(p, vec1(0.0));
    CHECK(d_infty(p, same) == 0.0);

    Path single = scalar_path(1.0, {5.0});
    CHECK(vertical_bump(single, vec1(2.0)).last()[0] == doctest::Approx(7.0));

    // d_infty(bump(p,x), p) = |x| when end times match
    std::mt19937_64 rng(7);
    for (int t = 0; t < 50; ++t) {
        Path q = random_path(rng, 2, 0.1, 6);
        Eigen::VectorXd x(2);
        x << 0.3, -0.4;
        CHECK(d_infty(vertical_bump(q, x), q) == doctest::Approx(0.5));
    }

    CHECK_THROWS_AS(vertical_bump(p, Eigen::VectorXd::Zero(2)), std::invalid_argument);

    // additivity is exact
    Path q = scalar_path(0.5, {1.0, 2.0, -1.0});
    Path b1 = vertical_bump(vertical_bump(q, vec1(0.25)), vec1(0.5));
    Path b2 = vertical_bump(q, vec1(0.75));
    CHECK(d_infty(b1, b2) == 0.0);
}

TEST_CASE("horizontal_extend") {
    Path p = scalar_path(0.5, {1.0, 2.0});
    Path same = horizontal_extend(p, p.end_time());
    CHECK(same.points() == p.points());

    Path ext = horizontal_extend(p, 1.5);
    CHECK(ext.points() == 4);
    CHECK(ext.value(2)[0] == 2.0);
    CHECK(ext.value(3)[0] == 2.0);
    CHECK(sup_norm(ext) == doctest::Approx(sup_norm(p)));

    CHECK_THROWS_AS(horizontal_extend(p, 0.25), std::invalid_argument);

    // transitivity: extend(extend(p,s),r) == extend(p,r)
    Path e1 = horizontal_extend(horizontal_extend(p, 1.0), 2.0);
    Path e2 = horizontal_extend(p, 2.0);
    CHECK(d_infty(e1, e2) == 0.0);
}

TEST_CASE("restrict") {
    Path p = scalar_path(0.5, {1.0, 2.0, 3.0});
    Path full = restrict(p, p.end_time());
    CHECK(d_infty(full, p) == 0.0);

    Path half = restrict(p, 0.5);
    CHECK(half.points() == 2);
    CHECK(half.value(1)[0] == 2.0);

    CHECK_THROWS_AS(restrict(p, 0.3), std::invalid_argument);
    CHECK_THROWS_AS(restrict(p, 2.0), std::invalid_argument);

    // restrict + extend reproduces the stopped path; d_infty against the
    // original equals the sup deviation after the stop
    std::mt19937_64 rng(11);
    for (int t = 0; t < 200; ++t) {
        Path q = random_path(rng, 1, 0.25, 8);
        const std::size_t cut = rng() % q.points();
        const double tcut = static_cast<double>(cut) * q.grid_step();
        Path stopped = horizontal_extend(restrict(q, tcut), q.end_time());
        double dev = 0.0;
        for (std::size_t k = cut; k < q.points(); ++k)
            dev = std::max(dev, (q.value(k) - q.value(cut)).norm());
        CHECK(d_infty(stopped, q) == doctest::Approx(dev));
        // prefix plus original suffix reconstructs the path exactly
        Path rebuilt = restrict(q, tcut);
        for (std::size_t k = cut + 1; k < q.points(); ++k) rebuilt.append(q.value(k));
        CHECK(d_infty(rebuilt, q) == 0.0);
    }
}

TEST_CASE("running_integral") {
    Path z = Path::constant(1, 0.25, vec1(0.0), 5);
    CHECK(sup_norm(running_integral(z)) == 0.0);

    Path c = Path::constant(1, 0.25, vec1(2.0), 5);
    Path A = running_integral(c);
    for (std::size_t k = 0; k < 5; ++k)
        CHECK(A.value(k)[0] == doctest::Approx(2.0 * 0.25 * static_cast<double>(k)));

    Path p = scalar_path(0.5, {1.0, 2.0, 4.0});
    Path Ap = running_integral(p);
    CHECK(Ap.value(0)[0] == 0.0);
    CHECK(Ap.value(1)[0] == doctest::Approx(0.5));
    CHECK(Ap.value(2)[0] == doctest::Approx(1.5));
    CHECK(path_integral(p)[0] == doctest::Approx(1.5));

    // linearity to machine precision
    std::mt19937_64 rng(17);
    for (int t = 0; t < 100; ++t) {
        Path a = random_path(rng, 2, 0.125, 6);
        Path b = random_path(rng, 2, 0.125, 6);
        const std::size_t n = std::min(a.points(), b.points());
        std::vector<double> mixed;
        for (std::size_t k = 0; k < n; ++k) {
            Eigen::VectorXd v = 2.0 * a.value(k) - 0.5 * b.value(k);
            mixed.insert(mixed.end(), v.data(), v.data() + v.size());
        }
        Path mix(2, 0.125, std::move(mixed));
        Path Am = running_integral(mix);
        Path Aa = running_integral(restrict(a, static_cast<double>(n - 1) * 0.125));
        Path Ab = running_integral(restrict(b, static_cast<double>(n - 1) * 0.125));
        for (std::size_t k = 0; k < n; ++k)
            CHECK((Am.value(k) - 2.0 * Aa.value(k) + 0.5 * Ab.value(k)).norm() ==
                  doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("csv round trip") {
    Path p(2, 0.25, {1.0, -2.0, 0.5, 3.25, 7.0, -0.125});
    std::stringstream ss;
    write_path_csv(p, ss);
    Path q = read_path_csv(ss);
    CHECK(q.dim() == p.dim());
    CHECK(q.points() == p.points());
    CHECK(d_infty(p, q) == 0.0);

    std::stringstream bad("x,v1\n0,1\n");
    CHECK_THROWS(read_path_csv(bad));
    std::stringstream nonuniform("t,v1\n0,1\n0.5,2\n1.5,3\n");
    CHECK_THROWS(read_path_csv(nonuniform));
}

TEST_CASE("path pair grid check") {
    Path a = scalar_path(0.5, {1.0, 2.0});
    Path b = scalar_path(0.25, {1.0, 2.0});
    CHECK_THROWS_AS(PathPair(a, b), std::invalid_argument);
    PathPair ok(a, a);
    CHECK(ok.first.points() == 2);
}

TEST_CASE("component views") {
    Path joint(3, 0.5, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
    PathView tail = PathView(joint).components(1, 2);
    CHECK(tail.value(0)[0] == 2.0);
    CHECK(tail.value(1)[1] == 6.0);
    Path mat = materialize(tail);
    CHECK(mat.dim() == 2);
    CHECK(mat.value(1)[0] == 5.0);
}
