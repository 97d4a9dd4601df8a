#pragma once

#include <Eigen/Core>
#include <vector>

#include "fbsde/coefficients.hpp"
#include "fbsde/path.hpp"
#include "fbsde/ppde_types.hpp"
#include "fbsde/solver.hpp"

namespace fbsde {

// eps = 1e-4 * (1 + sup-norm), balanced for first-order central differences.
double default_vertical_step(const Path& p);
// Larger step for the second difference, which loses ~eps^2 to cancellation.
double default_hessian_step(const Path& p);

// Central finite differences over endpoint bumps: rows index outputs,
// columns index bump directions.
Eigen::MatrixXd vertical_derivative(const PathFunctional& f, const Path& p, double eps);

// 4-point cross stencil, symmetrized; one n x n matrix per output component.
std::vector<Eigen::MatrixXd> second_vertical_derivative(const PathFunctional& f,
                                                        const Path& p, double eps);

// One-sided difference over flat extension by dt (a positive grid multiple).
Eigen::VectorXd horizontal_derivative(const PathFunctional& f, const Path& p, double dt);

// | f(p) - f(p_0) - sum_k D_t f dt - sum_k D_x f . dX_k - 1/2 sum_k tr(D_xx f dQV_k) |
// with derivatives at prefix paths. By default dQV_k is the realized
// increment product dX_k dX_k^T; a model bracket (one matrix per step) can be
// supplied instead. Scalar functionals only.
double ito_residual(const PathFunctional& f, const Path& p, double eps, double dt,
                    const std::vector<Eigen::MatrixXd>* model_qv = nullptr);

// Joint system on (W, X): drift (0, b), diffusion (I_d, sigma), terminal
// read from the last n components. G lifts to (0 | G).
struct LiftedCoefficients {
    CoefficientSet base;
    CoefficientSet lifted;
};
LiftedCoefficients lift_coefficients(const CoefficientSet& cs);

struct PpdeResidual {
    Eigen::VectorXd residual;     // D_t u + L u - h(p, u, v)
    double consistency_gap = 0.0; // |v - D_x u sigma~|
};

// Residual of the path equation at p (an element of the joint path space),
// with all derivatives taken by the finite differences above. u must claim
// C12 regularity.
PpdeResidual ppde_residual(const PathFunctional& u, const PathFunctional& v,
                           const LiftedCoefficients& lc, const Path& p, double eps,
                           double dt);

struct FeynmanKacReport {
    Eigen::VectorXd u_value;     // u at the prefix
    Eigen::VectorXd y_estimate;  // solver value at the prefix time
    double stderr_est = 0.0;
    double gap = 0.0;            // |u - y|
    double gap_in_se = 0.0;      // gap / stderr (0 stderr reported as inf gap_in_se when gap > 0)
};

// Solves the lifted system conditioned on the prefix (features seeded from
// it, fresh noise beyond its end time) and compares u(prefix) with the
// estimated backward value at that time. A prefix ending at the horizon
// compares u directly against the terminal map.
FeynmanKacReport feynman_kac_check(const PathFunctional& u, const CoefficientSet& cs,
                                   const Path& prefix, const Discretization& disc,
                                   const ContinuationSchedule& schedule);

}  // namespace fbsde
