#include <doctest.h>

#include <random>

#include "fbsde/regression.hpp"

using namespace fbsde;

TEST_CASE("basis rows") {
    CHECK(basis_size(2, 2) == 5);
    Eigen::VectorXd f(2);
    f << 2.0, 3.0;
    Eigen::VectorXd row(5);
    basis_row(f, 2, row);
    CHECK(row[0] == 1.0);
    CHECK(row[1] == 2.0);
    CHECK(row[2] == 4.0);
    CHECK(row[3] == 3.0);
    CHECK(row[4] == 9.0);
}

TEST_CASE("exact recovery of a polynomial target") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    const int M = 4000;
    Eigen::MatrixXd feats(M, 1);
    Eigen::MatrixXd target(M, 1);
    for (int i = 0; i < M; ++i) {
        const double x = g(rng);
        feats(i, 0) = x;
        target(i, 0) = 3.0 - 2.0 * x + 0.5 * x * x;
    }
    StepDesign des(feats, 2, 0);
    Eigen::MatrixXd coef = des.fit(target);
    CHECK(coef(0, 0) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(coef(1, 0) == doctest::Approx(-2.0).epsilon(1e-10));
    CHECK(coef(2, 0) == doctest::Approx(0.5).epsilon(1e-10));
    Eigen::MatrixXd pred = des.predict(coef);
    CHECK((pred - target).norm() <= 1e-9 * target.norm());
}

TEST_CASE("degenerate features collapse to the mean") {
    Eigen::MatrixXd feats = Eigen::MatrixXd::Constant(100, 2, 1.5);
    Eigen::MatrixXd target(100, 1);
    for (int i = 0; i < 100; ++i) target(i, 0) = static_cast<double>(i);
    StepDesign des(feats, 2, 3);
    CHECK(des.mean_only());
    Eigen::MatrixXd coef = des.fit(target);
    CHECK(coef(0, 0) == doctest::Approx(49.5));
    for (int j = 1; j < coef.rows(); ++j) CHECK(coef(j, 0) == 0.0);
}

TEST_CASE("collinear columns are truncated, not fatal") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    const int M = 500;
    Eigen::MatrixXd feats(M, 2);
    for (int i = 0; i < M; ++i) {
        const double x = g(rng);
        feats(i, 0) = x;
        feats(i, 1) = 2.0 * x;  // exactly dependent
    }
    Eigen::MatrixXd target = feats.col(0);
    StepDesign des(feats, 1, 0);
    Eigen::MatrixXd coef = des.fit(target);
    Eigen::MatrixXd pred = des.predict(coef);
    CHECK((pred - target).norm() <= 1e-9 * target.norm());
    CHECK(des.condition() <= 1e12);
}

TEST_CASE("non-finite input is rejected") {
    Eigen::MatrixXd feats = Eigen::MatrixXd::Ones(10, 1);
    feats(3, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(StepDesign(feats, 1, 7), RegressionError);
}
