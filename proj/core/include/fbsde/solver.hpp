#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbsde/coefficients.hpp"
#include "fbsde/path.hpp"

namespace fbsde {

struct Discretization {
    int num_steps = 1;      // K, grid t_k = k * horizon / K
    double horizon = 1.0;   // T
    int num_paths = 2;      // M
    int basis_degree = 1;   // monomial degree of the regression basis
    std::uint64_t seed = 0;

    double dt() const { return horizon / num_steps; }
    void validate() const;
};

// Frozen Brownian increments, identical across all solver iterations.
// Entries are N(0, dt); paths come in antithetic pairs (path 2j+1 mirrors
// path 2j), an odd final path is drawn independently.
class BrownianGrid {
public:
    BrownianGrid(const Discretization& disc, int brownian_dim);

    int steps() const { return steps_; }
    int paths() const { return paths_; }
    int dim() const { return dim_; }
    double dt() const { return dt_; }
    std::uint64_t seed() const { return seed_; }

    Eigen::Map<const Eigen::VectorXd> increment(int path, int step) const {
        const std::size_t off =
            (static_cast<std::size_t>(path) * steps_ + static_cast<std::size_t>(step)) * dim_;
        return {incr_.data() + off, dim_};
    }

private:
    int steps_, paths_, dim_;
    double dt_;
    std::uint64_t seed_;
    std::vector<double> incr_;  // path-major [m][k][j]
};

// Per-step regressed control field: ytilde and z as polynomials in the
// declared features, with prediction envelopes used to guard evaluation
// outside the fitted range.
struct StepField {
    Eigen::MatrixXd coef_y;  // basis x m
    Eigen::MatrixXd coef_z;  // basis x (m*d)
    Eigen::VectorXd y_lo, y_hi, z_lo, z_hi;
    bool fitted = false;
};

struct FieldPolicy {
    int m = 0, d = 0, degree = 1, feature_dim = 0;
    std::vector<StepField> steps;

    bool empty() const { return steps.empty(); }
    // ytilde/z at feature vector f, clipped to the step's envelope.
    ControlPair eval(std::size_t k, const Eigen::Ref<const Eigen::VectorXd>& feats) const;
};

struct LevelTrace {
    double alpha = 1.0;
    double delta = 1.0;
    double relaxation = 1.0;
    int inner_iterations = 0;
    double final_residual = 0.0;
    bool converged = false;
    std::vector<double> residual_history;
    std::vector<double> contraction_ratios;
};

struct ConvergenceTrace {
    std::vector<LevelTrace> levels;
};

struct SolutionEstimate {
    std::vector<Path> X;  // per path, K+1 points, dim n
    std::vector<Path> Y;  // per path, K+1 points, dim m
    std::vector<Path> Z;  // per path, K points, dim m*d (row-major m x d)
    Eigen::VectorXd y0;   // cross-path value of Y at the first solved step
    double y0_stderr = 0.0;
    ConvergenceTrace diagnostics;
    FieldPolicy field;    // final decoupling field (reused for warm starts)
};

struct ContinuationSchedule {
    enum class Mode { direct, homotopy };
    Mode mode = Mode::homotopy;
    double delta_init = 0.25;
    double delta_min = 0.01;
    double inner_tol = 1e-8;
    int max_inner_iters = 60;
    double relaxation = 0.25;       // field blend weight per inner iteration
    double relaxation_min = 0.02;   // halved on repeated level failures before giving up
    double coarse_tol = 1e-7;       // intermediate homotopy levels
    void validate() const;
};

struct SimulationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonConvergenceError : std::runtime_error {
    ConvergenceTrace trace;
    NonConvergenceError(const std::string& msg, ConvergenceTrace t)
        : std::runtime_error(msg), trace(std::move(t)) {}
};

// Process-valued controls on the grid (value of (Y,Z) at (k, path)).
struct GridControls {
    std::vector<Path> Y;  // dim m, at least K points
    std::vector<Path> Z;  // dim m*d, at least K points
};
GridControls zero_controls(const Discretization& disc, int m, int d);

// Euler scheme X_{k+1} = X_k + b(prefix, u_k) dt + sigma(prefix, u_k) dW_k,
// path by path; the path argument of the coefficients is the prefix built so
// far. Throws SimulationError naming the step on non-finite states.
std::vector<Path> simulate_forward(const CoefficientSet& cs, const GridControls& controls,
                                   const BrownianGrid& bg, const Eigen::VectorXd& x0);
// Same scheme with controls read from a regressed field evaluated at the
// current state; optional prefix conditions the start (paths begin as copies
// of it and features accumulate from it).
std::vector<Path> simulate_forward(const CoefficientSet& cs, const FieldPolicy& field,
                                   const BrownianGrid& bg, const Eigen::VectorXd& x0,
                                   const Path* prefix = nullptr);

struct BackwardResult {
    std::vector<Path> Y;
    std::vector<Path> Z;
    FieldPolicy field;  // raw per-step fits
};

// Backward least squares sweep: Y_K = g(X_K); descending k fits ytilde_k,
// then z_k from the variance-reduced target (Y_{k+1} - ytilde_k) dW_k / dt,
// then Y_k = ytilde_k - h(prefix, ytilde_k, z_k) dt.
BackwardResult backward_lsmc(const CoefficientSet& cs, const std::vector<Path>& X,
                             const BrownianGrid& bg, int basis_degree, std::size_t k0 = 0);

// Damped decoupling-field iteration with frozen noise. Residual
//   R_i = E int |U_i - U_{i-1}|^2 dt + E|X_i(T)-X_{i-1}(T)|^2 + E int |X_i-X_{i-1}|^2 dt
// stops at R_i <= tol * (1 + R_0) from the second iteration on; throws
// NonConvergenceError (carrying the trace) when max_iters is exceeded.
SolutionEstimate picard_solve(const CoefficientSet& cs, const Discretization& disc,
                              const BrownianGrid& bg, const Eigen::VectorXd& x0,
                              const SolutionEstimate* init, double tol, int max_iters,
                              double relaxation = 0.25, const Path* prefix = nullptr);

// Linear dissipative system: drift -beta2 G^T y + b0(t), diffusion
// -beta2 G^T z + sigma0(t), driver -beta1 G x(t) + h0(t), terminal
// lambda G x + g0(x).
struct LinearBaseSpec {
    double beta1 = 0.0;
    double beta2 = 0.0;
    double lambda = 0.0;
    std::function<Eigen::VectorXd(double)> b0;      // nullable = zero
    std::function<Eigen::MatrixXd(double)> sigma0;  // nullable = zero
    std::function<Eigen::VectorXd(double)> h0;      // nullable = zero
    TerminalFn g0;                                  // nullable = zero
};
SolutionEstimate solve_linear_base(const LinearBaseSpec& spec, int n, int m, int d,
                                   const Eigen::MatrixXd& G, const Discretization& disc,
                                   const BrownianGrid& bg, const Eigen::VectorXd& x0,
                                   double tol = 1e-8, int max_iters = 60,
                                   double relaxation = 0.25);

struct AssumptionConstants;  // conditions.hpp

// Continuation solve: advances alpha from 0 to 1 over blended problems,
// warm-starting each level from the previous solution; delta halves on a
// failed level (floor delta_min), then the relaxation halves. Direct mode
// runs the target problem in a single level.
SolutionEstimate solve_fbsde(const CoefficientSet& cs, const AssumptionConstants& constants,
                             const Discretization& disc, const Eigen::VectorXd& x0,
                             const ContinuationSchedule& schedule,
                             const Path* prefix = nullptr,
                             const BrownianGrid* shared_grid = nullptr);

}  // namespace fbsde
