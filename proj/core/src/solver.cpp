#include "fbsde/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>

#include "fbsde/conditions.hpp"
#include "fbsde/parallel.hpp"
#include "fbsde/regression.hpp"

namespace fbsde {

namespace {

int feature_dim(const CoefficientSet& cs) {
    return cs.n * static_cast<int>(cs.feature_spec.size());
}

// Features read at one grid time: current value and/or running integral.
void fill_features(const CoefficientSet& cs, const Eigen::Ref<const Eigen::VectorXd>& xk,
                   const Eigen::Ref<const Eigen::VectorXd>& ak,
                   Eigen::Ref<Eigen::VectorXd> out) {
    int off = 0;
    for (PathFeature f : cs.feature_spec) {
        switch (f) {
            case PathFeature::terminal_value: out.segment(off, cs.n) = xk; break;
            case PathFeature::running_integral: out.segment(off, cs.n) = ak; break;
        }
        off += cs.n;
    }
}

struct ResidualParts {
    std::vector<double> du;   // per path: sum_k |U - U_prev|^2 dt
    std::vector<double> dxT;  // per path: |X(T) - X_prev(T)|^2
    std::vector<double> dx;   // per path: sum_{k<K} |X - X_prev|^2 dt
};

double mean_of(std::vector<double>& buf) {
    return parallel::pairwise_sum(buf) / static_cast<double>(buf.size());
}

}  // namespace

void Discretization::validate() const {
    if (num_steps < 1) throw std::invalid_argument("discretization: num_steps must be >= 1");
    if (!(horizon > 0.0)) throw std::invalid_argument("discretization: horizon must be positive");
    if (num_paths < 2) throw std::invalid_argument("discretization: num_paths must be >= 2");
    if (basis_degree < 1 || basis_degree > 6)
        throw std::invalid_argument("discretization: basis_degree must be in [1,6]");
}

void ContinuationSchedule::validate() const {
    if (!(delta_init > 0.0 && delta_init <= 1.0))
        throw std::invalid_argument("schedule: delta_init must be in (0,1]");
    if (!(delta_min > 0.0)) throw std::invalid_argument("schedule: delta_min must be positive");
    if (delta_min > delta_init)
        throw std::invalid_argument("schedule: delta_min must not exceed delta_init");
    if (!(inner_tol > 0.0)) throw std::invalid_argument("schedule: inner_tol must be positive");
    if (max_inner_iters < 2)
        throw std::invalid_argument("schedule: max_inner_iters must be >= 2");
    if (!(relaxation > 0.0 && relaxation <= 1.0))
        throw std::invalid_argument("schedule: relaxation must be in (0,1]");
    if (!(relaxation_min > 0.0 && relaxation_min <= relaxation))
        throw std::invalid_argument("schedule: relaxation_min must be in (0, relaxation]");
}

BrownianGrid::BrownianGrid(const Discretization& disc, int brownian_dim)
    : steps_(disc.num_steps), paths_(disc.num_paths), dim_(brownian_dim), dt_(disc.dt()),
      seed_(disc.seed) {
    disc.validate();
    if (dim_ < 1) throw std::invalid_argument("brownian grid: dimension must be positive");
    incr_.resize(static_cast<std::size_t>(steps_) * paths_ * dim_);
    std::mt19937_64 rng(seed_);
    std::normal_distribution<double> normal(0.0, std::sqrt(dt_));
    const std::size_t block = static_cast<std::size_t>(steps_) * dim_;
    for (int p = 0; p + 1 < paths_; p += 2) {
        double* a = incr_.data() + static_cast<std::size_t>(p) * block;
        double* b = a + block;
        for (std::size_t i = 0; i < block; ++i) {
            a[i] = normal(rng);
            b[i] = -a[i];
        }
    }
    if (paths_ % 2 == 1) {
        double* a = incr_.data() + static_cast<std::size_t>(paths_ - 1) * block;
        for (std::size_t i = 0; i < block; ++i) a[i] = normal(rng);
    }
}

ControlPair FieldPolicy::eval(std::size_t k,
                              const Eigen::Ref<const Eigen::VectorXd>& feats) const {
    ControlPair u = ControlPair::zero(m, d);
    if (k >= steps.size() || !steps[k].fitted) return u;
    const StepField& f = steps[k];
    Eigen::VectorXd row(basis_size(feature_dim, degree));
    basis_row(feats, degree, row);
    Eigen::VectorXd y = f.coef_y.transpose() * row;
    Eigen::VectorXd z = f.coef_z.transpose() * row;
    for (int i = 0; i < y.size(); ++i) y[i] = std::clamp(y[i], f.y_lo[i], f.y_hi[i]);
    for (int i = 0; i < z.size(); ++i) z[i] = std::clamp(z[i], f.z_lo[i], f.z_hi[i]);
    u.y = std::move(y);
    u.z = Eigen::Map<const Eigen::MatrixXd>(z.data(), d, m).transpose();
    return u;
}

GridControls zero_controls(const Discretization& disc, int m, int d) {
    GridControls c;
    const Eigen::VectorXd zy = Eigen::VectorXd::Zero(m);
    const Eigen::VectorXd zz = Eigen::VectorXd::Zero(m * d);
    c.Y.reserve(disc.num_paths);
    c.Z.reserve(disc.num_paths);
    for (int p = 0; p < disc.num_paths; ++p) {
        c.Y.push_back(Path::constant(m, disc.dt(), zy, disc.num_steps + 1));
        c.Z.push_back(Path::constant(m * d, disc.dt(), zz, disc.num_steps));
    }
    return c;
}

namespace {

// Shared forward loop; `control` maps (k, path, prefix, features) to the
// (y, z) pair used in the coefficients.
template <class ControlFn>
std::vector<Path> forward_impl(const CoefficientSet& cs, const BrownianGrid& bg,
                               const Eigen::VectorXd& x0, const Path* prefix,
                               ControlFn&& control) {
    const int K = bg.steps();
    const double dt = bg.dt();
    std::size_t k0 = 0;
    Eigen::VectorXd a0 = Eigen::VectorXd::Zero(cs.n);
    if (prefix != nullptr) {
        if (prefix->dim() != cs.n)
            throw std::invalid_argument("simulate_forward: prefix dimension mismatch");
        if (std::abs(prefix->grid_step() - dt) > 1e-9 * std::max(1.0, dt))
            throw std::invalid_argument("simulate_forward: prefix grid step mismatch");
        k0 = prefix->steps();
        if (k0 > static_cast<std::size_t>(K))
            throw std::invalid_argument("simulate_forward: prefix longer than horizon");
        a0 = path_integral(*prefix);
    } else if (x0.size() != cs.n) {
        throw std::invalid_argument("simulate_forward: x0 dimension mismatch");
    }

    std::vector<Path> X(bg.paths(), prefix != nullptr ? *prefix : Path::single_point(dt, x0));
    const int F = feature_dim(cs);
    std::vector<std::string> failure(1);
    std::atomic<bool> failed{false};

    parallel::for_chunks(static_cast<std::size_t>(bg.paths()), [&](std::size_t lo, std::size_t hi) {
        Eigen::VectorXd feats(F);
        for (std::size_t mpath = lo; mpath < hi; ++mpath) {
            Path& p = X[mpath];
            p.reserve_points(K + 1);
            Eigen::VectorXd acc = a0;
            for (int k = static_cast<int>(k0); k < K; ++k) {
                const Eigen::VectorXd xk = p.last();
                fill_features(cs, xk, acc, feats);
                const ControlPair u = control(k, mpath, PathView(p), feats);
                const Eigen::VectorXd bv = cs.b(p, u);
                const Eigen::MatrixXd sv = cs.sigma(p, u);
                Eigen::VectorXd xn =
                    xk + bv * dt + sv * bg.increment(static_cast<int>(mpath), k);
                if (!xn.allFinite()) {
                    if (!failed.exchange(true))
                        failure[0] = "forward simulation blew up at step " + std::to_string(k) +
                                     ", path " + std::to_string(mpath);
                    return;
                }
                acc += xk * dt;
                p.append(xn);
            }
        }
    });
    if (failed.load()) throw SimulationError(failure[0]);
    return X;
}

}  // namespace

std::vector<Path> simulate_forward(const CoefficientSet& cs, const GridControls& controls,
                                   const BrownianGrid& bg, const Eigen::VectorXd& x0) {
    if (static_cast<int>(controls.Y.size()) != bg.paths() ||
        static_cast<int>(controls.Z.size()) != bg.paths())
        throw std::invalid_argument("simulate_forward: controls must cover all paths");
    for (int p = 0; p < bg.paths(); ++p) {
        if (controls.Y[p].points() < static_cast<std::size_t>(bg.steps()) ||
            controls.Z[p].points() < static_cast<std::size_t>(bg.steps()))
            throw std::invalid_argument("simulate_forward: controls must cover all steps");
    }
    const int m = static_cast<int>(controls.Y.front().dim());
    const int d = bg.dim();
    return forward_impl(cs, bg, x0, nullptr,
                        [&](int k, std::size_t mpath, const PathView&,
                            const Eigen::Ref<const Eigen::VectorXd>&) {
                            ControlPair u;
                            u.y = controls.Y[mpath].value(k);
                            const auto zrow = controls.Z[mpath].value(k);
                            u.z = Eigen::Map<const Eigen::MatrixXd>(zrow.data(), d, m).transpose();
                            return u;
                        });
}

std::vector<Path> simulate_forward(const CoefficientSet& cs, const FieldPolicy& field,
                                   const BrownianGrid& bg, const Eigen::VectorXd& x0,
                                   const Path* prefix) {
    const double dt = bg.dt();
    return forward_impl(cs, bg, x0, prefix,
                        [&](int k, std::size_t, const PathView& pfx,
                            const Eigen::Ref<const Eigen::VectorXd>& feats) {
                            ControlPair u = field.eval(static_cast<std::size_t>(k), feats);
                            // Y value consistent with the backward recursion.
                            u.y -= cs.h(pfx, u) * dt;
                            return u;
                        });
}

namespace {

// Raw feature matrix at step k for all paths.
Eigen::MatrixXd features_at(const CoefficientSet& cs, const std::vector<Path>& X,
                            const std::vector<Path>& A, std::size_t k) {
    const auto M = static_cast<Eigen::Index>(X.size());
    const int F = feature_dim(cs);
    Eigen::MatrixXd feats(M, F);
    parallel::for_chunks(X.size(), [&](std::size_t lo, std::size_t hi) {
        Eigen::VectorXd row(F);
        for (std::size_t mp = lo; mp < hi; ++mp) {
            fill_features(cs, X[mp].value(k), A[mp].value(k), row);
            feats.row(static_cast<Eigen::Index>(mp)) = row.transpose();
        }
    });
    return feats;
}

std::vector<Path> integral_features(const std::vector<Path>& X) {
    std::vector<Path> A;
    A.reserve(X.size());
    for (const Path& p : X) A.push_back(running_integral(p));
    return A;
}

}  // namespace

BackwardResult backward_lsmc(const CoefficientSet& cs, const std::vector<Path>& X,
                             const BrownianGrid& bg, int basis_degree, std::size_t k0) {
    const int K = bg.steps();
    const int M = bg.paths();
    const int m = cs.m, d = cs.d;
    const double dt = bg.dt();
    if (static_cast<int>(X.size()) != M)
        throw std::invalid_argument("backward_lsmc: path count mismatch");

    BackwardResult out;
    out.field.m = m;
    out.field.d = d;
    out.field.degree = basis_degree;
    out.field.feature_dim = feature_dim(cs);
    out.field.steps.resize(K);
    out.Y.assign(M, Path::constant(m, dt, Eigen::VectorXd::Zero(m), K + 1));
    out.Z.assign(M, Path::constant(m * d, dt, Eigen::VectorXd::Zero(m * d),
                                   std::max(K, 1)));

    parallel::for_chunks(X.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t mp = lo; mp < hi; ++mp)
            out.Y[mp].value(K) = cs.g(X[mp].value(K));
    });

    const std::vector<Path> A = integral_features(X);

    Eigen::MatrixXd ty(M, m);            // Y_{k+1} targets
    Eigen::MatrixXd tz(M, m * d);        // control-variate z targets
    for (int k = K - 1; k >= static_cast<int>(k0); --k) {
        const Eigen::MatrixXd feats = features_at(cs, X, A, k);
        StepDesign design(feats, basis_degree, static_cast<std::size_t>(k));

        parallel::for_chunks(X.size(), [&](std::size_t lo, std::size_t hi) {
            for (std::size_t mp = lo; mp < hi; ++mp)
                ty.row(static_cast<Eigen::Index>(mp)) = out.Y[mp].value(k + 1).transpose();
        });
        const Eigen::MatrixXd coef_y = design.fit(ty);
        const Eigen::MatrixXd pred_y = design.predict(coef_y);

        parallel::for_chunks(X.size(), [&](std::size_t lo, std::size_t hi) {
            for (std::size_t mp = lo; mp < hi; ++mp) {
                const auto r = static_cast<Eigen::Index>(mp);
                const auto dw = bg.increment(static_cast<int>(mp), k);
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < d; ++j)
                        tz(r, i * d + j) = (ty(r, i) - pred_y(r, i)) * dw[j] / dt;
            }
        });
        const Eigen::MatrixXd coef_z = design.fit(tz);
        const Eigen::MatrixXd pred_z = design.predict(coef_z);

        StepField& sf = out.field.steps[k];
        sf.coef_y = coef_y;
        sf.coef_z = coef_z;
        sf.y_lo = pred_y.colwise().minCoeff();
        sf.y_hi = pred_y.colwise().maxCoeff();
        sf.z_lo = pred_z.colwise().minCoeff();
        sf.z_hi = pred_z.colwise().maxCoeff();
        const Eigen::VectorXd ym = 0.5 * (sf.y_hi - sf.y_lo);
        const Eigen::VectorXd zm = 0.5 * (sf.z_hi - sf.z_lo);
        sf.y_lo -= ym; sf.y_hi += ym;
        sf.z_lo -= zm; sf.z_hi += zm;
        sf.fitted = true;

        parallel::for_chunks(X.size(), [&](std::size_t lo, std::size_t hi) {
            for (std::size_t mp = lo; mp < hi; ++mp) {
                const auto r = static_cast<Eigen::Index>(mp);
                ControlPair u;
                u.y = pred_y.row(r).transpose();
                u.z = Eigen::Map<const Eigen::MatrixXd>(pred_z.row(r).data(), d, m).transpose();
                out.Z[mp].value(k) = pred_z.row(r).transpose();
                out.Y[mp].value(k) =
                    u.y - cs.h(PathView(X[mp]).prefix(k), u) * dt;
            }
        });
    }
    return out;
}

namespace {

struct IterationState {
    std::vector<Path> X;
    std::vector<double> yproc;  // (K-k0) * M * m realized field values
    std::vector<double> zproc;  // (K-k0) * M * m * d
    bool valid = false;
};

// Realized processes and envelopes for a (possibly blended) field along the
// current sample; returns Y/Z paths and overwrites the field's envelopes.
void realize_field(const CoefficientSet& cs, const std::vector<Path>& X,
                   const std::vector<Path>& A, FieldPolicy& field, std::size_t k0,
                   double dt, std::vector<Path>& Yout, std::vector<Path>& Zout,
                   std::vector<double>& yflat, std::vector<double>& zflat) {
    const int K = static_cast<int>(X[0].steps());
    const int M = static_cast<int>(X.size());
    const int m = cs.m, d = cs.d;
    const int B = basis_size(field.feature_dim, field.degree);

    Yout.assign(M, Path::constant(m, dt, Eigen::VectorXd::Zero(m), K + 1));
    Zout.assign(M, Path::constant(m * d, dt, Eigen::VectorXd::Zero(m * d), std::max(K, 1)));
    yflat.assign(static_cast<std::size_t>(K - k0) * M * m, 0.0);
    zflat.assign(static_cast<std::size_t>(K - k0) * M * m * d, 0.0);

    parallel::for_chunks(X.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t mp = lo; mp < hi; ++mp)
            Yout[mp].value(K) = cs.g(X[mp].value(K));
    });

    Eigen::MatrixXd py(M, m), pz(M, m * d);
    for (int k = static_cast<int>(k0); k < K; ++k) {
        StepField& sf = field.steps[k];
        parallel::for_chunks(X.size(), [&](std::size_t lo, std::size_t hi) {
            Eigen::VectorXd f(field.feature_dim), br(B);
            for (std::size_t mp = lo; mp < hi; ++mp) {
                const auto r = static_cast<Eigen::Index>(mp);
                fill_features(cs, X[mp].value(k), A[mp].value(k), f);
                basis_row(f, field.degree, br);
                py.row(r) = (sf.coef_y.transpose() * br).transpose();
                pz.row(r) = (sf.coef_z.transpose() * br).transpose();
            }
        });
        sf.y_lo = py.colwise().minCoeff();
        sf.y_hi = py.colwise().maxCoeff();
        sf.z_lo = pz.colwise().minCoeff();
        sf.z_hi = pz.colwise().maxCoeff();
        const Eigen::VectorXd ym = 0.5 * (sf.y_hi - sf.y_lo);
        const Eigen::VectorXd zm = 0.5 * (sf.z_hi - sf.z_lo);
        sf.y_lo -= ym; sf.y_hi += ym;
        sf.z_lo -= zm; sf.z_hi += zm;

        parallel::for_chunks(X.size(), [&](std::size_t lo, std::size_t hi) {
            for (std::size_t mp = lo; mp < hi; ++mp) {
                const auto r = static_cast<Eigen::Index>(mp);
                ControlPair u;
                u.y = py.row(r).transpose();
                u.z = Eigen::Map<const Eigen::MatrixXd>(pz.row(r).data(), d, m).transpose();
                const Eigen::VectorXd yk = u.y - cs.h(PathView(X[mp]).prefix(k), u) * dt;
                Yout[mp].value(k) = yk;
                Zout[mp].value(k) = pz.row(r).transpose();
                const std::size_t base =
                    ((static_cast<std::size_t>(k) - k0) * M + mp);
                for (int i = 0; i < m; ++i) yflat[base * m + i] = yk[i];
                for (int i = 0; i < m * d; ++i) zflat[base * m * d + i] = pz(r, i);
            }
        });
    }
    // flat start: conditioned segment repeats its first value
    parallel::for_chunks(X.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t mp = lo; mp < hi; ++mp)
            for (std::size_t k = 0; k < k0; ++k) Yout[mp].value(k) = Yout[mp].value(k0);
    });
}

}  // namespace

SolutionEstimate picard_solve(const CoefficientSet& cs, const Discretization& disc,
                              const BrownianGrid& bg, const Eigen::VectorXd& x0,
                              const SolutionEstimate* init, double tol, int max_iters,
                              double relaxation, const Path* prefix) {
    disc.validate();
    if (!(tol > 0.0)) throw std::invalid_argument("picard_solve: tol must be positive");
    if (max_iters < 2) throw std::invalid_argument("picard_solve: max_iters must be >= 2");
    const int K = disc.num_steps;
    const int M = disc.num_paths;
    const int m = cs.m, d = cs.d;
    const double dt = disc.dt();
    const std::size_t k0 = prefix != nullptr ? prefix->steps() : 0;

    FieldPolicy field;
    if (init != nullptr && !init->field.empty()) {
        field = init->field;
    } else {
        field.m = m;
        field.d = d;
        field.degree = disc.basis_degree;
        field.feature_dim = feature_dim(cs);
    }

    std::vector<double> prev_y(static_cast<std::size_t>(K - k0) * M * m, 0.0);
    std::vector<double> prev_z(static_cast<std::size_t>(K - k0) * M * m * d, 0.0);
    std::vector<Path> prev_x;
    if (init != nullptr && !init->X.empty()) {
        prev_x = init->X;
        for (std::size_t mp = 0; mp < prev_x.size(); ++mp)
            for (int k = static_cast<int>(k0); k < K; ++k) {
                const std::size_t base = (static_cast<std::size_t>(k) - k0) * M + mp;
                for (int i = 0; i < m; ++i)
                    prev_y[base * m + i] = init->Y[mp].value(k)[i];
                for (int i = 0; i < m * d; ++i)
                    prev_z[base * m * d + i] = init->Z[mp].value(k)[i];
            }
    }

    LevelTrace trace;
    trace.relaxation = relaxation;
    SolutionEstimate est;
    std::vector<double> du(M), dxT(M), dx(M);

    for (int it = 1; it <= max_iters; ++it) {
        std::vector<Path> X = simulate_forward(cs, field, bg, x0, prefix);
        const std::vector<Path> A = integral_features(X);
        BackwardResult bw = backward_lsmc(cs, X, bg, disc.basis_degree, k0);

        if (!field.empty() && relaxation < 1.0) {
            for (int k = static_cast<int>(k0); k < K; ++k) {
                if (!field.steps[k].fitted) continue;
                bw.field.steps[k].coef_y = (1.0 - relaxation) * field.steps[k].coef_y +
                                           relaxation * bw.field.steps[k].coef_y;
                bw.field.steps[k].coef_z = (1.0 - relaxation) * field.steps[k].coef_z +
                                           relaxation * bw.field.steps[k].coef_z;
            }
        }
        field = std::move(bw.field);

        std::vector<Path> Ynew, Znew;
        std::vector<double> yflat, zflat;
        realize_field(cs, X, A, field, k0, dt, Ynew, Znew, yflat, zflat);

        // residual vs previous iterate
        parallel::for_chunks(static_cast<std::size_t>(M), [&](std::size_t lo, std::size_t hi) {
            for (std::size_t mp = lo; mp < hi; ++mp) {
                double su = 0.0, sx = 0.0;
                for (int k = static_cast<int>(k0); k < K; ++k) {
                    const std::size_t base = (static_cast<std::size_t>(k) - k0) * M + mp;
                    for (int i = 0; i < m; ++i) {
                        const double de = yflat[base * m + i] - prev_y[base * m + i];
                        su += de * de;
                    }
                    for (int i = 0; i < m * d; ++i) {
                        const double de = zflat[base * m * d + i] - prev_z[base * m * d + i];
                        su += de * de;
                    }
                    const Eigen::VectorXd xv = X[mp].value(k);
                    if (!prev_x.empty()) {
                        sx += (xv - prev_x[mp].value(k)).squaredNorm();
                    } else {
                        sx += xv.squaredNorm();
                    }
                }
                du[mp] = su * dt;
                dx[mp] = sx * dt;
                const Eigen::VectorXd xT = X[mp].value(K);
                dxT[mp] = prev_x.empty() ? xT.squaredNorm()
                                         : (xT - prev_x[mp].value(K)).squaredNorm();
            }
        });
        const double R = mean_of(du) + mean_of(dxT) + mean_of(dx);
        trace.residual_history.push_back(R);
        if (trace.residual_history.size() > 1) {
            const auto& h = trace.residual_history;
            trace.contraction_ratios.push_back(h[h.size() - 1] / h[h.size() - 2]);
        }
        trace.inner_iterations = it;
        trace.final_residual = R;

        prev_x = X;
        prev_y = std::move(yflat);
        prev_z = std::move(zflat);

        est.X = std::move(X);
        est.Y = std::move(Ynew);
        est.Z = std::move(Znew);
        est.field = field;

        if (it >= 2 && R <= tol * (1.0 + trace.residual_history.front())) {
            trace.converged = true;
            break;
        }
    }

    if (!trace.converged) {
        ConvergenceTrace full;
        full.levels.push_back(trace);
        throw NonConvergenceError("picard_solve: no convergence within max_iters", full);
    }

    est.y0 = est.Y[0].value(k0);
    // dispersion of the first regression's targets as the y0 error bar
    {
        const std::size_t kk = std::min<std::size_t>(k0 + 1, K);
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
        for (int mp = 0; mp < M; ++mp) mean += est.Y[mp].value(kk);
        mean /= static_cast<double>(M);
        double var = 0.0;
        for (int mp = 0; mp < M; ++mp)
            var += (est.Y[mp].value(kk) - mean).squaredNorm();
        var /= static_cast<double>(M - 1);
        est.y0_stderr = std::sqrt(var / static_cast<double>(M));
    }
    est.diagnostics.levels.push_back(std::move(trace));
    return est;
}

SolutionEstimate solve_linear_base(const LinearBaseSpec& spec, int n, int m, int d,
                                   const Eigen::MatrixXd& G, const Discretization& disc,
                                   const BrownianGrid& bg, const Eigen::VectorXd& x0,
                                   double tol, int max_iters, double relaxation) {
    CoefficientSet cs;
    cs.n = n; cs.m = m; cs.d = d;
    cs.G = G;
    cs.horizon = disc.horizon;
    cs.feature_spec = {PathFeature::terminal_value};
    const Eigen::MatrixXd Gt = G.transpose();
    cs.b = [spec, Gt, n](const PathView& x, const ControlPair& u) -> Eigen::VectorXd {
        Eigen::VectorXd v = -spec.beta2 * (Gt * u.y);
        if (spec.b0) v += spec.b0(x.end_time());
        return v;
    };
    cs.sigma = [spec, Gt, n, d](const PathView& x, const ControlPair& u) -> Eigen::MatrixXd {
        Eigen::MatrixXd v = -spec.beta2 * (Gt * u.z);
        if (spec.sigma0) v += spec.sigma0(x.end_time());
        return v;
    };
    cs.h = [spec, G](const PathView& x, const ControlPair&) -> Eigen::VectorXd {
        Eigen::VectorXd v = -spec.beta1 * (G * x.last());
        if (spec.h0) v += spec.h0(x.end_time());
        return v;
    };
    cs.g = [spec, G, m](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        Eigen::VectorXd v = spec.lambda * (G * x);
        if (spec.g0) v += spec.g0(x);
        return v;
    };
    validate_coefficients(cs);
    return picard_solve(cs, disc, bg, x0, nullptr, tol, max_iters, relaxation);
}

SolutionEstimate solve_fbsde(const CoefficientSet& cs, const AssumptionConstants& constants,
                             const Discretization& disc, const Eigen::VectorXd& x0,
                             const ContinuationSchedule& schedule, const Path* prefix,
                             const BrownianGrid* shared_grid) {
    disc.validate();
    schedule.validate();
    validate_constants(constants, cs.n, cs.m);

    std::optional<BrownianGrid> own;
    const BrownianGrid* bg = shared_grid;
    if (bg == nullptr) {
        own.emplace(disc, cs.d);
        bg = &*own;
    }

    if (schedule.mode == ContinuationSchedule::Mode::direct) {
        SolutionEstimate est = picard_solve(cs, disc, *bg, x0, nullptr, schedule.inner_tol,
                                            schedule.max_inner_iters, schedule.relaxation,
                                            prefix);
        est.diagnostics.levels.back().alpha = 1.0;
        est.diagnostics.levels.back().delta = 1.0;
        return est;
    }

    ConvergenceTrace trace;
    double theta = schedule.relaxation;
    double delta = schedule.delta_init;

    auto attempt = [&](double alpha, const SolutionEstimate* init, double tol,
                       SolutionEstimate& out) -> bool {
        const CoefficientSet level =
            continuation_set(cs, alpha, constants.beta1, constants.beta2);
        try {
            out = picard_solve(level, disc, *bg, x0, init, tol, schedule.max_inner_iters,
                               theta, prefix);
            LevelTrace lt = out.diagnostics.levels.back();
            lt.alpha = alpha;
            lt.delta = delta;
            trace.levels.push_back(std::move(lt));
            return true;
        } catch (const NonConvergenceError& e) {
            LevelTrace lt = e.trace.levels.back();
            lt.alpha = alpha;
            lt.delta = delta;
            trace.levels.push_back(std::move(lt));
            return false;
        } catch (const SimulationError&) {
            LevelTrace lt;
            lt.alpha = alpha;
            lt.delta = delta;
            lt.relaxation = theta;
            trace.levels.push_back(std::move(lt));
            return false;
        }
    };

    SolutionEstimate current;
    if (!attempt(0.0, nullptr, schedule.coarse_tol, current))
        throw NonConvergenceError("solve_fbsde: base level failed", trace);

    double alpha = 0.0;
    while (alpha < 1.0 - 1e-12) {
        const double next = alpha + delta >= 1.0 - 1e-12 ? 1.0 : alpha + delta;
        const double tol = next == 1.0 ? schedule.inner_tol : schedule.coarse_tol;
        SolutionEstimate trial;
        if (attempt(next, &current, tol, trial)) {
            current = std::move(trial);
            alpha = next;
            continue;
        }
        if (delta > schedule.delta_min) {
            delta = std::max(schedule.delta_min, 0.5 * delta);
        } else if (theta > schedule.relaxation_min) {
            theta = std::max(schedule.relaxation_min, 0.5 * theta);
        } else {
            throw NonConvergenceError(
                "solve_fbsde: continuation stalled at alpha = " + std::to_string(alpha), trace);
        }
    }
    current.diagnostics = std::move(trace);
    return current;
}

}  // namespace fbsde
