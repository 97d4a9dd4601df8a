#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fbsde/coefficients.hpp"

namespace fbsde {

// Constants of the structural conditions: integral Lipschitz constant c1 and
// the coercivity weights (beta1, beta2, mu1).
struct AssumptionConstants {
    double c1 = 1.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double mu1 = 0.0;
};

// Sign and positivity rules, including the dimension-dependent ones
// (m > n requires beta1 > 0 and mu1 > 0; n > m requires beta2 > 0 and
// mu1 > 0). Throws std::invalid_argument.
void validate_constants(const AssumptionConstants& k, int n, int m);

struct CheckReport {
    std::string check;
    long trials = 0;
    long violations = 0;
    long skipped = 0;             // zero-denominator samples
    double worst_margin = 0.0;    // most negative slack seen (0 if none)
    double estimated_constant = 0.0;
    std::uint64_t sampler_seed = 0;
};

// Sampler shape shared by all estimators. Path pairs are a Brownian base plus
// a structured perturbation cycling through three families: independent
// Brownian, a single-point bump at a random grid index, and a low-frequency
// sinusoid. Controls are Gaussian per grid point. Per-trial substreams are
// derived from (seed, trial), so reports are reproducible and prefix-stable
// in the trial count.
struct SamplerOptions {
    int grid_steps = 64;
    double horizon = 1.0;
    double amplitude = 1.0;
};

// max over trials of
//   int |f(x1,u1)-f(x2,u1)|^2 dt / int |x1-x2|^2 dt.
CheckReport estimate_path_lipschitz(const CoefficientSet& cs, long trials,
                                    std::uint64_t seed, const SamplerOptions& opts = {});

// max pointwise |f(x,u1)-f(x,u2)| / |u1-u2| over sampled times.
CheckReport estimate_u_lipschitz(const CoefficientSet& cs, long trials, std::uint64_t seed,
                                 const SamplerOptions& opts = {});

// max |g(x1)-g(x2)| / |x1-x2| over sampled terminal points.
CheckReport estimate_g_lipschitz(const CoefficientSet& cs, long trials, std::uint64_t seed,
                                 const SamplerOptions& opts = {});

// slack = int [f(x1,u1)-f(x2,u2), (x1-x2, u1-u2)] dt
//         - int [beta1 |G dx|^2 + beta2 (|G^T dy|^2 + |G^T dz|^2)] dt;
// violations count slack < -1e-10 * (1 + |lhs| + |rhs|).
CheckReport check_monotonicity(const CoefficientSet& cs, const AssumptionConstants& k,
                               long trials, std::uint64_t seed,
                               const SamplerOptions& opts = {});

// slack = -mu1 |G dx|^2 - <g(x1)-g(x2), G dx>.
CheckReport check_g_monotonicity(const CoefficientSet& cs, double mu1, long trials,
                                 std::uint64_t seed, const SamplerOptions& opts = {});

// key = value document, one block per report, blank-line separated.
std::string reports_to_text(const std::vector<CheckReport>& reports);

}  // namespace fbsde
