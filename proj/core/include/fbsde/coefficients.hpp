#pragma once

#include <Eigen/Core>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fbsde/path.hpp"

namespace fbsde {

// Value of the backward pair at one time: y in R^m, z in R^{m x d}.
struct ControlPair {
    Eigen::VectorXd y;
    Eigen::MatrixXd z;

    static ControlPair zero(int m, int d) {
        return {Eigen::VectorXd::Zero(m), Eigen::MatrixXd::Zero(m, d)};
    }
};

using VectorCoeffFn = std::function<Eigen::VectorXd(const PathView&, const ControlPair&)>;
using MatrixCoeffFn = std::function<Eigen::MatrixXd(const PathView&, const ControlPair&)>;
using TerminalFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Path statistics a coefficient set declares it reads. The solver's
// regression basis is built from these.
enum class PathFeature { terminal_value, running_integral };

struct CoefficientSet {
    int n = 0;  // forward dimension
    int m = 0;  // backward dimension
    int d = 0;  // Brownian dimension
    Eigen::MatrixXd G;  // m x n, full rank
    VectorCoeffFn b;      // drift, R^n
    MatrixCoeffFn sigma;  // diffusion, n x d
    VectorCoeffFn h;      // backward driver, R^m
    TerminalFn g;         // terminal map, R^n -> R^m
    std::vector<PathFeature> feature_spec;
    double horizon = 1.0;  // natural time horizon of the problem
};

// Checks dimensions, full rank of G (singular value tolerance 1e-10) and
// spot-checks the functionals for finite values. Throws std::invalid_argument.
void validate_coefficients(const CoefficientSet& cs);

// Assembled value (G^T h, G b, G sigma).
struct FTriple {
    Eigen::VectorXd hpart;  // R^n
    Eigen::VectorXd bpart;  // R^m
    Eigen::MatrixXd spart;  // m x d
};

// <y1,y2> + tr(z1 z2^T)
double bracket(const ControlPair& u1, const ControlPair& u2);

// {tr(z z^T)}^{1/2}
double matrix_norm(const Eigen::MatrixXd& z);

// |u| = bracket(u,u)^{1/2}
double control_norm(const ControlPair& u);

// <hpart, xhat> + <bpart, yhat> + tr(spart zhat^T)
double fbracket(const FTriple& f, const Eigen::VectorXd& xhat, const ControlPair& uhat);

FTriple assemble_f(const CoefficientSet& cs, const PathView& x, const ControlPair& u);

// Difference of assembled values at two (path, control) tuples.
FTriple assemble_f_diff(const CoefficientSet& cs, const PathView& x1, const ControlPair& u1,
                        const PathView& x2, const ControlPair& u2);

// Blend toward the dissipative linear system:
//   b^a = a b + (1-a) beta2 (-G^T y)      sigma^a = a sigma + (1-a) beta2 (-G^T z)
//   h^a = a h + (1-a) beta1 (-G x(t))     g^a = a g + (1-a) beta1 (G x)
// At the endpoints the inactive side is not evaluated at all.
CoefficientSet continuation_set(const CoefficientSet& cs, double alpha, double beta1,
                                double beta2);

// Lifts a pointwise function of (running integral, y, z) to a path functional
// evaluated at (path_integral(x), y, z).
VectorCoeffFn integral_lift(std::function<Eigen::VectorXd(const Eigen::VectorXd&, const ControlPair&)> f);
MatrixCoeffFn integral_lift_matrix(std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const ControlPair&)> f);

// Built-in problems: example31, example32_demo, linear_base,
// decoupled_identity, custom_lifted. Throws on unknown names, unknown or
// missing parameters.
CoefficientSet registry_get(const std::string& name,
                            const std::map<std::string, double>& params = {});
std::vector<std::string> registry_names();

}  // namespace fbsde
