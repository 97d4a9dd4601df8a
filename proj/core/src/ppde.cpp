#include "fbsde/ppde.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fbsde/conditions.hpp"

namespace fbsde {

double default_vertical_step(const Path& p) { return 1e-4 * (1.0 + sup_norm(p)); }
double default_hessian_step(const Path& p) { return 2e-3 * (1.0 + sup_norm(p)); }

namespace {

Eigen::VectorXd eval_checked(const PathFunctional& f, const Path& p) {
    Eigen::VectorXd v = f.eval(p);
    if (!v.allFinite()) throw std::runtime_error("path functional returned non-finite value");
    return v;
}

}  // namespace

Eigen::MatrixXd vertical_derivative(const PathFunctional& f, const Path& p, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("vertical_derivative: eps must be positive");
    const int n = p.dim();
    Eigen::MatrixXd jac;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        e[i] = eps;
        const Eigen::VectorXd up = eval_checked(f, vertical_bump(p, e));
        e[i] = -eps;
        const Eigen::VectorXd dn = eval_checked(f, vertical_bump(p, e));
        if (jac.size() == 0) jac.resize(up.size(), n);
        jac.col(i) = (up - dn) / (2.0 * eps);
    }
    return jac;
}

std::vector<Eigen::MatrixXd> second_vertical_derivative(const PathFunctional& f,
                                                        const Path& p, double eps) {
    if (!(eps > 0.0))
        throw std::invalid_argument("second_vertical_derivative: eps must be positive");
    const int n = p.dim();
    const Eigen::VectorXd f0 = eval_checked(f, p);
    const auto outs = static_cast<int>(f0.size());
    std::vector<Eigen::MatrixXd> hess(outs, Eigen::MatrixXd::Zero(n, n));

    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        e.setZero();
        e[i] = eps;
        const Eigen::VectorXd up = eval_checked(f, vertical_bump(p, e));
        e[i] = -eps;
        const Eigen::VectorXd dn = eval_checked(f, vertical_bump(p, e));
        for (int o = 0; o < outs; ++o)
            hess[o](i, i) = (up[o] - 2.0 * f0[o] + dn[o]) / (eps * eps);
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            e.setZero();
            e[i] = eps; e[j] += eps;
            const Eigen::VectorXd pp = eval_checked(f, vertical_bump(p, e));
            e.setZero();
            e[i] = eps; e[j] -= eps;
            const Eigen::VectorXd pm = eval_checked(f, vertical_bump(p, e));
            e.setZero();
            e[i] = -eps; e[j] += eps;
            const Eigen::VectorXd mp = eval_checked(f, vertical_bump(p, e));
            e.setZero();
            e[i] = -eps; e[j] -= eps;
            const Eigen::VectorXd mm = eval_checked(f, vertical_bump(p, e));
            for (int o = 0; o < outs; ++o)
                hess[o](i, j) = (pp[o] - pm[o] - mp[o] + mm[o]) / (4.0 * eps * eps);
        }
    }
    for (auto& h : hess) h = 0.5 * (h + h.transpose()).eval();
    return hess;
}

Eigen::VectorXd horizontal_derivative(const PathFunctional& f, const Path& p, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("horizontal_derivative: dt must be positive");
    const Path ext = horizontal_extend(p, p.end_time() + dt);
    return (eval_checked(f, ext) - eval_checked(f, p)) / dt;
}

double ito_residual(const PathFunctional& f, const Path& p, double eps, double dt,
                    const std::vector<Eigen::MatrixXd>* model_qv) {
    if (f.output_dim != 1)
        throw std::invalid_argument("ito_residual: scalar functionals only");
    const std::size_t K = p.steps();
    if (model_qv != nullptr && model_qv->size() != K)
        throw std::invalid_argument("ito_residual: model bracket needs one matrix per step");

    Path prefix = materialize(PathView(p).prefix(0));
    prefix.reserve_points(p.points());
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double dtv = horizontal_derivative(f, prefix, dt)[0];
        const Eigen::MatrixXd dxv = vertical_derivative(f, prefix, eps);
        const Eigen::MatrixXd hess = second_vertical_derivative(f, prefix, eps)[0];
        const Eigen::VectorXd dX = p.value(k + 1) - p.value(k);
        const Eigen::MatrixXd qv =
            model_qv != nullptr ? (*model_qv)[k] : Eigen::MatrixXd(dX * dX.transpose());
        sum += dtv * p.grid_step();
        sum += dxv.row(0).dot(dX);
        sum += 0.5 * hess.cwiseProduct(qv).sum();
        prefix.append(p.value(k + 1));
    }
    const double total = eval_checked(f, p)[0] - eval_checked(f, materialize(PathView(p).prefix(0)))[0];
    return std::abs(total - sum);
}

LiftedCoefficients lift_coefficients(const CoefficientSet& cs) {
    LiftedCoefficients out;
    out.base = cs;
    CoefficientSet& L = out.lifted;
    const int n = cs.n, m = cs.m, d = cs.d;
    L.n = d + n;
    L.m = m;
    L.d = d;
    L.G = Eigen::MatrixXd::Zero(m, d + n);
    L.G.rightCols(n) = cs.G;
    L.horizon = cs.horizon;
    L.feature_spec = cs.feature_spec;

    auto base_b = cs.b;
    auto base_s = cs.sigma;
    auto base_h = cs.h;
    auto base_g = cs.g;
    L.b = [base_b, n, d](const PathView& joint, const ControlPair& u) -> Eigen::VectorXd {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(d + n);
        v.tail(n) = base_b(joint.components(d, n), u);
        return v;
    };
    L.sigma = [base_s, n, d](const PathView& joint, const ControlPair& u) -> Eigen::MatrixXd {
        Eigen::MatrixXd s(d + n, d);
        s.topRows(d) = Eigen::MatrixXd::Identity(d, d);
        s.bottomRows(n) = base_s(joint.components(d, n), u);
        return s;
    };
    L.h = [base_h, n, d](const PathView& joint, const ControlPair& u) -> Eigen::VectorXd {
        return base_h(joint.components(d, n), u);
    };
    L.g = [base_g, n, d](const Eigen::VectorXd& xw) -> Eigen::VectorXd {
        return base_g(xw.tail(n));
    };
    return out;
}

PpdeResidual ppde_residual(const PathFunctional& u, const PathFunctional& v,
                           const LiftedCoefficients& lc, const Path& p, double eps,
                           double dt) {
    if (u.smoothness != Smoothness::C12)
        throw std::invalid_argument("ppde_residual: u must claim C12 smoothness");
    const CoefficientSet& L = lc.lifted;
    if (p.dim() != L.n)
        throw std::invalid_argument("ppde_residual: path dimension must match the joint space");

    const Eigen::VectorXd uval = u.eval(p);
    const Eigen::VectorXd vval = v.eval(p);
    const int m = L.m, d = L.d;
    ControlPair ctrl;
    ctrl.y = uval;
    ctrl.z = Eigen::Map<const Eigen::MatrixXd>(vval.data(), d, m).transpose();

    const Eigen::VectorXd bt = L.b(p, ctrl);
    const Eigen::MatrixXd st = L.sigma(p, ctrl);
    const Eigen::MatrixXd a = st * st.transpose();

    const Eigen::VectorXd dtu = horizontal_derivative(u, p, dt);
    const Eigen::MatrixXd dxu = vertical_derivative(u, p, eps);
    const std::vector<Eigen::MatrixXd> hess = second_vertical_derivative(u, p, eps);
    const Eigen::VectorXd hval = L.h(p, ctrl);

    PpdeResidual out;
    out.residual.resize(uval.size());
    for (int o = 0; o < uval.size(); ++o) {
        out.residual[o] = dtu[o] + 0.5 * hess[o].cwiseProduct(a).sum() +
                          dxu.row(o).dot(bt) - hval[o];
    }
    const Eigen::MatrixXd zimpl = dxu * st;  // m x d
    Eigen::MatrixXd vmat = ctrl.z;
    out.consistency_gap = (zimpl - vmat).norm();
    return out;
}

FeynmanKacReport feynman_kac_check(const PathFunctional& u, const CoefficientSet& cs,
                                   const Path& prefix, const Discretization& disc,
                                   const ContinuationSchedule& schedule) {
    const LiftedCoefficients lc = lift_coefficients(cs);
    if (prefix.dim() != lc.lifted.n)
        throw std::invalid_argument("feynman_kac_check: prefix must live on the joint space");
    const double dt = disc.dt();
    if (std::abs(prefix.grid_step() - dt) > 1e-9 * std::max(1.0, dt))
        throw std::invalid_argument("feynman_kac_check: prefix grid step mismatch");
    if (prefix.end_time() > disc.horizon + 1e-9)
        throw std::invalid_argument("feynman_kac_check: prefix extends past the horizon");

    FeynmanKacReport rep;
    rep.u_value = u.eval(prefix);

    if (prefix.steps() >= static_cast<std::size_t>(disc.num_steps)) {
        rep.y_estimate = lc.lifted.g(prefix.last());
        rep.stderr_est = 0.0;
        rep.gap = (rep.u_value - rep.y_estimate).norm();
        rep.gap_in_se = rep.gap > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        return rep;
    }

    AssumptionConstants constants;
    constants.c1 = 1.0;
    constants.beta1 = 1.0;
    constants.beta2 = 1.0;
    constants.mu1 = 1.0;
    const SolutionEstimate est =
        solve_fbsde(lc.lifted, constants, disc, prefix.last(), schedule, &prefix);
    rep.y_estimate = est.y0;
    rep.stderr_est = est.y0_stderr;
    rep.gap = (rep.u_value - rep.y_estimate).norm();
    rep.gap_in_se = rep.stderr_est > 0.0 ? rep.gap / rep.stderr_est
                    : (rep.gap > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    return rep;
}

}  // namespace fbsde
