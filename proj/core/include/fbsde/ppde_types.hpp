#pragma once

#include <Eigen/Core>
#include <functional>

#include "fbsde/path.hpp"

namespace fbsde {

// Claimed regularity of a path functional: C12 means once horizontally and
// twice vertically differentiable with continuous derivatives.
enum class Smoothness { C0, C12 };

struct PathFunctional {
    std::function<Eigen::VectorXd(const Path&)> eval;
    Smoothness smoothness = Smoothness::C12;
    double bump_scale = 0.0;  // preferred vertical step; 0 = automatic
    int output_dim = 1;

    Eigen::VectorXd operator()(const Path& p) const { return eval(p); }
};

inline PathFunctional scalar_functional(std::function<double(const Path&)> f,
                                        Smoothness s = Smoothness::C12) {
    PathFunctional pf;
    pf.eval = [f = std::move(f)](const Path& p) {
        return Eigen::VectorXd::Constant(1, f(p)).eval();
    };
    pf.smoothness = s;
    pf.output_dim = 1;
    return pf;
}

}  // namespace fbsde
