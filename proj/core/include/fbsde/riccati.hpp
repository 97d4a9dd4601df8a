#pragma once

#include <string>
#include <vector>

#include "fbsde/ppde_types.hpp"

namespace fbsde {

// Backward solution of the scalar ODE system
//   a' = 3 - c - 2 a^2,  c' = 1 - a - 2 a c,  a(1) = -1, c(1) = 0
// on [0,1]. It is the reduction of the built-in fully coupled problem
// "example31" under the ansatz Y = a(t) X + c(t) A with A = int_0^t X ds,
// Z = a A / (1 - 2a); matching the X-, A- and diffusion terms of both
// equations yields exactly these ODEs and terminal values.
struct RiccatiSolution {
    std::vector<double> t;  // ascending grid on [0,1]
    std::vector<double> a;
    std::vector<double> c;
    bool singular = false;  // blow-up or a(t) within 1e-3 of 1/2
    double y0_factor = 0.0;  // a(0)
    int steps = 0;

    // Local cubic interpolation on the solution grid.
    double a_at(double time) const;
    double c_at(double time) const;
};

// Classical 4th-order integration with the given number of steps (>= 100).
RiccatiSolution solve_riccati_example31(int steps);

// a(0) * x0; throws if the solution is singular.
double oracle_y0(double x0, int steps);

// Reference functionals on the lifted joint path (dim d+n = 2):
//   u(p) = a(t) X(t) + c(t) A(t),   v(p) = a(t) A(t) / (1 - 2 a(t))
// with X the second component and A its left-Riemann running integral.
struct OracleFunctionals {
    PathFunctional u;
    PathFunctional v;
};
OracleFunctionals oracle_functional(int steps = 10000);

// CSV with columns t,a,c.
void write_riccati_csv(const RiccatiSolution& sol, const std::string& filename);

}  // namespace fbsde
