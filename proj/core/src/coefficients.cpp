#include "fbsde/coefficients.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <set>
#include <stdexcept>

namespace fbsde {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    return m.allFinite();
}

}  // namespace

void validate_coefficients(const CoefficientSet& cs) {
    require(cs.n > 0 && cs.m > 0 && cs.d > 0, "coefficients: dimensions must be positive");
    require(cs.G.rows() == cs.m && cs.G.cols() == cs.n, "coefficients: G must be m x n");
    require(cs.b && cs.sigma && cs.h && cs.g, "coefficients: all functionals must be set");
    require(cs.horizon > 0.0, "coefficients: horizon must be positive");

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(cs.G);
    const int full = std::min(cs.m, cs.n);
    require(svd.singularValues()[full - 1] > 1e-10, "coefficients: G is rank deficient");

    // spot check on a short probe path
    Path probe = Path::constant(cs.n, cs.horizon / 4.0, Eigen::VectorXd::Ones(cs.n), 3);
    ControlPair u{Eigen::VectorXd::Constant(cs.m, 0.5),
                  Eigen::MatrixXd::Constant(cs.m, cs.d, 0.25)};
    const Eigen::VectorXd bv = cs.b(probe, u);
    const Eigen::MatrixXd sv = cs.sigma(probe, u);
    const Eigen::VectorXd hv = cs.h(probe, u);
    const Eigen::VectorXd gv = cs.g(Eigen::VectorXd::Ones(cs.n));
    require(bv.size() == cs.n && all_finite(bv), "coefficients: b probe failed");
    require(sv.rows() == cs.n && sv.cols() == cs.d && all_finite(sv),
            "coefficients: sigma probe failed");
    require(hv.size() == cs.m && all_finite(hv), "coefficients: h probe failed");
    require(gv.size() == cs.m && all_finite(gv), "coefficients: g probe failed");
}

double bracket(const ControlPair& u1, const ControlPair& u2) {
    if (u1.y.size() != u2.y.size() || u1.z.rows() != u2.z.rows() ||
        u1.z.cols() != u2.z.cols())
        throw std::invalid_argument("bracket: dimension mismatch");
    return u1.y.dot(u2.y) + u1.z.cwiseProduct(u2.z).sum();
}

double matrix_norm(const Eigen::MatrixXd& z) {
    return std::sqrt((z * z.transpose()).trace());
}

double control_norm(const ControlPair& u) { return std::sqrt(bracket(u, u)); }

double fbracket(const FTriple& f, const Eigen::VectorXd& xhat, const ControlPair& uhat) {
    return f.hpart.dot(xhat) + f.bpart.dot(uhat.y) + f.spart.cwiseProduct(uhat.z).sum();
}

FTriple assemble_f(const CoefficientSet& cs, const PathView& x, const ControlPair& u) {
    if (x.dim != cs.n) throw std::invalid_argument("assemble_f: path dimension mismatch");
    return {cs.G.transpose() * cs.h(x, u), cs.G * cs.b(x, u), cs.G * cs.sigma(x, u)};
}

FTriple assemble_f_diff(const CoefficientSet& cs, const PathView& x1, const ControlPair& u1,
                        const PathView& x2, const ControlPair& u2) {
    FTriple f1 = assemble_f(cs, x1, u1);
    FTriple f2 = assemble_f(cs, x2, u2);
    return {f1.hpart - f2.hpart, f1.bpart - f2.bpart, f1.spart - f2.spart};
}

CoefficientSet continuation_set(const CoefficientSet& cs, double alpha, double beta1,
                                double beta2) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("continuation_set: alpha out of [0,1]");
    if (alpha == 1.0) return cs;

    CoefficientSet out = cs;
    const Eigen::MatrixXd G = cs.G;
    const Eigen::MatrixXd Gt = cs.G.transpose();
    const double lin = (1.0 - alpha);
    const auto b0 = cs.b;
    const auto s0 = cs.sigma;
    const auto h0 = cs.h;
    const auto g0 = cs.g;

    if (alpha == 0.0) {
        out.b = [beta2, Gt](const PathView&, const ControlPair& u) -> Eigen::VectorXd {
            return beta2 * (-(Gt * u.y));
        };
        out.sigma = [beta2, Gt](const PathView&, const ControlPair& u) -> Eigen::MatrixXd {
            return beta2 * (-(Gt * u.z));
        };
        out.h = [beta1, G](const PathView& x, const ControlPair&) -> Eigen::VectorXd {
            return beta1 * (-(G * x.last()));
        };
        out.g = [beta1, G](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            return beta1 * (G * x);
        };
        return out;
    }

    out.b = [alpha, lin, beta2, Gt, b0](const PathView& x, const ControlPair& u) {
        return (alpha * b0(x, u) + (lin * beta2) * (-(Gt * u.y))).eval();
    };
    out.sigma = [alpha, lin, beta2, Gt, s0](const PathView& x, const ControlPair& u) {
        return (alpha * s0(x, u) + (lin * beta2) * (-(Gt * u.z))).eval();
    };
    out.h = [alpha, lin, beta1, G, h0](const PathView& x, const ControlPair& u) {
        return (alpha * h0(x, u) + (lin * beta1) * (-(G * x.last()))).eval();
    };
    out.g = [alpha, lin, beta1, G, g0](const Eigen::VectorXd& x) {
        return (alpha * g0(x) + (lin * beta1) * (G * x)).eval();
    };
    return out;
}

VectorCoeffFn integral_lift(
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const ControlPair&)> f) {
    return [f = std::move(f)](const PathView& x, const ControlPair& u) {
        return f(path_integral(x), u);
    };
}

MatrixCoeffFn integral_lift_matrix(
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const ControlPair&)> f) {
    return [f = std::move(f)](const PathView& x, const ControlPair& u) {
        return f(path_integral(x), u);
    };
}

namespace {

double param(const std::map<std::string, double>& params, const std::string& key,
             double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

void reject_unknown(const std::map<std::string, double>& params,
                    const std::set<std::string>& known, const std::string& problem) {
    for (const auto& [k, v] : params) {
        (void)v;
        if (!known.count(k))
            throw std::invalid_argument("registry: unknown parameter '" + k + "' for " + problem);
    }
}

CoefficientSet make_example31() {
    CoefficientSet cs;
    cs.n = cs.m = cs.d = 1;
    cs.G = Eigen::MatrixXd::Identity(1, 1);
    cs.horizon = 1.0;
    cs.b = [](const PathView& x, const ControlPair& u) -> Eigen::VectorXd {
        return path_integral(x) + 2.0 * u.y;
    };
    cs.sigma = [](const PathView& x, const ControlPair& u) -> Eigen::MatrixXd {
        return path_integral(x) + 2.0 * u.z;
    };
    cs.h = [](const PathView& x, const ControlPair&) -> Eigen::VectorXd {
        return path_integral(x) + 3.0 * x.last();
    };
    cs.g = [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return -x; };
    cs.feature_spec = {PathFeature::terminal_value, PathFeature::running_integral};
    return cs;
}

// Linear instance of the integral-lifted family: hhat = kh*a, bhat = kb*y,
// shat = ks*z applied at a = int_0^t x ds; terminal -x.
CoefficientSet make_example32_demo(const std::map<std::string, double>& params) {
    reject_unknown(params, {"kappa_h", "kappa_b", "kappa_s"}, "example32_demo");
    const double kh = param(params, "kappa_h", 1.0);
    const double kb = param(params, "kappa_b", 1.0);
    const double ks = param(params, "kappa_s", 1.0);
    CoefficientSet cs;
    cs.n = cs.m = cs.d = 1;
    cs.G = Eigen::MatrixXd::Identity(1, 1);
    cs.horizon = 1.0;
    cs.h = integral_lift([kh](const Eigen::VectorXd& a, const ControlPair&) -> Eigen::VectorXd {
        return kh * a;
    });
    cs.b = integral_lift([kb](const Eigen::VectorXd&, const ControlPair& u) -> Eigen::VectorXd {
        return kb * u.y;
    });
    cs.sigma = integral_lift_matrix(
        [ks](const Eigen::VectorXd&, const ControlPair& u) -> Eigen::MatrixXd {
            return ks * u.z;
        });
    cs.g = [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return -x; };
    cs.feature_spec = {PathFeature::terminal_value, PathFeature::running_integral};
    return cs;
}

CoefficientSet make_linear_base(const std::map<std::string, double>& params) {
    reject_unknown(params, {"beta1", "beta2", "lambda", "g0"}, "linear_base");
    const double beta1 = param(params, "beta1", 1.0);
    const double beta2 = param(params, "beta2", 1.0);
    const double lambda = param(params, "lambda", beta1);
    const double g0 = param(params, "g0", 0.0);
    CoefficientSet cs;
    cs.n = cs.m = cs.d = 1;
    cs.G = Eigen::MatrixXd::Identity(1, 1);
    cs.horizon = 1.0;
    cs.b = [beta2](const PathView&, const ControlPair& u) -> Eigen::VectorXd {
        return -beta2 * u.y;
    };
    cs.sigma = [beta2](const PathView&, const ControlPair& u) -> Eigen::MatrixXd {
        return -beta2 * u.z;
    };
    cs.h = [beta1](const PathView& x, const ControlPair&) -> Eigen::VectorXd {
        return -beta1 * x.last();
    };
    cs.g = [lambda, g0](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return lambda * x + Eigen::VectorXd::Constant(1, g0);
    };
    cs.feature_spec = {PathFeature::terminal_value};
    return cs;
}

CoefficientSet make_decoupled_identity(const std::map<std::string, double>& params) {
    reject_unknown(params, {"dim"}, "decoupled_identity");
    const int n = static_cast<int>(param(params, "dim", 1.0));
    if (n < 1) throw std::invalid_argument("registry: decoupled_identity dim must be >= 1");
    CoefficientSet cs;
    cs.n = cs.m = cs.d = n;
    cs.G = Eigen::MatrixXd::Identity(n, n);
    cs.horizon = 1.0;
    cs.b = [n](const PathView&, const ControlPair&) -> Eigen::VectorXd {
        return Eigen::VectorXd::Zero(n);
    };
    cs.sigma = [n](const PathView&, const ControlPair&) -> Eigen::MatrixXd {
        return Eigen::MatrixXd::Identity(n, n);
    };
    cs.h = [n](const PathView&, const ControlPair&) -> Eigen::VectorXd {
        return Eigen::VectorXd::Zero(n);
    };
    cs.g = [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x; };
    cs.feature_spec = {PathFeature::terminal_value};
    return cs;
}

// Driver-only lifted problem h = kappa * int_0^t x ds, frozen forward.
CoefficientSet make_custom_lifted(const std::map<std::string, double>& params) {
    reject_unknown(params, {"kappa"}, "custom_lifted");
    auto it = params.find("kappa");
    if (it == params.end())
        throw std::invalid_argument("registry: custom_lifted requires parameter 'kappa'");
    const double kappa = it->second;
    CoefficientSet cs;
    cs.n = cs.m = cs.d = 1;
    cs.G = Eigen::MatrixXd::Identity(1, 1);
    cs.horizon = 1.0;
    cs.b = [](const PathView&, const ControlPair&) -> Eigen::VectorXd {
        return Eigen::VectorXd::Zero(1);
    };
    cs.sigma = [](const PathView&, const ControlPair&) -> Eigen::MatrixXd {
        return Eigen::MatrixXd::Zero(1, 1);
    };
    cs.h = integral_lift(
        [kappa](const Eigen::VectorXd& a, const ControlPair&) -> Eigen::VectorXd {
            return kappa * a;
        });
    cs.g = [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return -x; };
    cs.feature_spec = {PathFeature::terminal_value, PathFeature::running_integral};
    return cs;
}

}  // namespace

CoefficientSet registry_get(const std::string& name,
                            const std::map<std::string, double>& params) {
    CoefficientSet cs;
    if (name == "example31") {
        reject_unknown(params, {}, name);
        cs = make_example31();
    } else if (name == "example32_demo") {
        cs = make_example32_demo(params);
    } else if (name == "linear_base") {
        cs = make_linear_base(params);
    } else if (name == "decoupled_identity") {
        cs = make_decoupled_identity(params);
    } else if (name == "custom_lifted") {
        cs = make_custom_lifted(params);
    } else {
        throw std::invalid_argument("registry: unknown problem '" + name + "'");
    }
    validate_coefficients(cs);
    return cs;
}

std::vector<std::string> registry_names() {
    return {"example31", "example32_demo", "linear_base", "decoupled_identity",
            "custom_lifted"};
}

}  // namespace fbsde
