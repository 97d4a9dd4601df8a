#include <doctest.h>

#include <cmath>

#include "fbsde/conditions.hpp"

using namespace fbsde;

TEST_CASE("constants validation") {
    AssumptionConstants ok{22.0, 1.0, 1.0, 1.0};
    validate_constants(ok, 1, 1);
    CHECK_THROWS_AS(validate_constants({0.0, 1.0, 1.0, 1.0}, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(validate_constants({1.0, 0.0, 0.0, 1.0}, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(validate_constants({1.0, 1.0, 0.0, 0.0}, 1, 1), std::invalid_argument);
    // m > n requires beta1 > 0 and mu1 > 0
    CHECK_THROWS_AS(validate_constants({1.0, 0.0, 1.0, 1.0}, 1, 2), std::invalid_argument);
    // n > m requires beta2 > 0 and mu1 > 0
    CHECK_THROWS_AS(validate_constants({1.0, 1.0, 0.0, 1.0}, 2, 1), std::invalid_argument);
}

TEST_CASE("path lipschitz estimates") {
    CoefficientSet ex = registry_get("example31");
    CheckReport rep = estimate_path_lipschitz(ex, 2000, 42);
    CHECK(rep.trials == 2000);
    CHECK(rep.estimated_constant <= 22.0);
    CHECK(rep.estimated_constant > 1.0);  // the bound is not vacuous

    // constant-in-path coefficients give ratio 0
    CoefficientSet dec = registry_get("decoupled_identity");
    CheckReport zero = estimate_path_lipschitz(dec, 500, 42);
    CHECK(zero.estimated_constant == 0.0);

    // kappa-lifted driver is bounded by kappa^2 on [0,1]
    const double kappa = 3.0;
    CoefficientSet lifted = registry_get("custom_lifted", {{"kappa", kappa}});
    CheckReport lift = estimate_path_lipschitz(lifted, 2000, 7);
    CHECK(lift.estimated_constant <= kappa * kappa);
}

TEST_CASE("determinism and trial-prefix monotonicity") {
    CoefficientSet ex = registry_get("example31");
    CheckReport a = estimate_path_lipschitz(ex, 500, 99);
    CheckReport b = estimate_path_lipschitz(ex, 500, 99);
    CHECK(a.estimated_constant == b.estimated_constant);
    CHECK(a.worst_margin == b.worst_margin);
    CheckReport big = estimate_path_lipschitz(ex, 1000, 99);
    CHECK(big.estimated_constant >= a.estimated_constant);
}

TEST_CASE("u lipschitz estimates") {
    CoefficientSet ex = registry_get("example31");
    CheckReport rep = estimate_u_lipschitz(ex, 2000, 42);
    CHECK(rep.estimated_constant <= 2.0 * std::sqrt(2.0) + 1e-6);
    CHECK(rep.estimated_constant == doctest::Approx(2.0).epsilon(1e-9));

    CoefficientSet lifted = registry_get("custom_lifted", {{"kappa", 1.0}});
    CheckReport zero = estimate_u_lipschitz(lifted, 500, 42);
    CHECK(zero.estimated_constant == 0.0);

    // the dissipative base responds to u with unit gain
    CoefficientSet base = continuation_set(registry_get("example31"), 0.0, 1.0, 1.0);
    CheckReport one = estimate_u_lipschitz(base, 500, 42);
    CHECK(one.estimated_constant == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("g lipschitz estimates") {
    CoefficientSet ex = registry_get("example31");  // g(x) = -x
    CheckReport rep = estimate_g_lipschitz(ex, 1000, 4);
    CHECK(rep.estimated_constant == doctest::Approx(1.0).epsilon(1e-12));

    CoefficientSet demo = registry_get("example32_demo");
    CheckReport demo_rep = estimate_g_lipschitz(demo, 1000, 4);
    CHECK(demo_rep.estimated_constant == doctest::Approx(1.0).epsilon(1e-12));

    CoefficientSet constg = registry_get("example31");
    constg.g = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(1); };
    CheckReport zero = estimate_g_lipschitz(constg, 500, 4);
    CHECK(zero.estimated_constant == 0.0);
}

TEST_CASE("monotonicity") {
    CoefficientSet ex = registry_get("example31");
    AssumptionConstants good{22.0, 1.0, 1.0, 1.0};
    CheckReport rep = check_monotonicity(ex, good, 2000, 11);
    CHECK(rep.violations == 0);
    CHECK(rep.worst_margin >= -1e-10);

    // identical tuples give slack 0: covered via direct sampling of a pair
    // with zero perturbation amplitude
    SamplerOptions tiny;
    tiny.amplitude = 0.0;
    CheckReport degen = check_monotonicity(ex, good, 16, 11, tiny);
    CHECK(degen.violations == 0);
    CHECK(degen.worst_margin == 0.0);

    // beta1 = 4 is too greedy: adversarial x-only perturbations violate
    AssumptionConstants greedy{22.0, 4.0, 1.0, 1.0};
    CheckReport bad = check_monotonicity(ex, greedy, 2000, 11);
    CHECK(bad.violations > 0);
    CHECK(bad.worst_margin < 0.0);
}

TEST_CASE("g monotonicity") {
    CoefficientSet ex = registry_get("example31");  // g = -x
    CheckReport rep = check_g_monotonicity(ex, 1.0, 1000, 5);
    CHECK(rep.violations == 0);
    CHECK(rep.worst_margin == 0.0);  // slack is identically zero for g = -x

    CoefficientSet strong = ex;
    strong.g = [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return -2.0 * x; };
    CheckReport pos = check_g_monotonicity(strong, 1.0, 1000, 5);
    CHECK(pos.violations == 0);
    CHECK(pos.worst_margin >= 0.0);

    CoefficientSet wrong = ex;
    wrong.g = [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x; };
    CheckReport bad = check_g_monotonicity(wrong, 1.0, 1000, 5);
    CHECK(bad.violations == bad.trials - bad.skipped);
}

TEST_CASE("report text format") {
    CoefficientSet ex = registry_get("example31");
    CheckReport rep = estimate_g_lipschitz(ex, 10, 1);
    std::string text = reports_to_text({rep});
    CHECK(text.find("check = g_lipschitz") != std::string::npos);
    CHECK(text.find("violations = 0") != std::string::npos);
    CHECK(text.find("sampler_seed = 1") != std::string::npos);
}
