#include "fbsde/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <stdexcept>

#include "fbsde/parallel.hpp"

namespace fbsde {

void validate_constants(const AssumptionConstants& k, int n, int m) {
    if (!(k.c1 > 0.0)) throw std::invalid_argument("constants: c1 must be positive");
    if (k.beta1 < 0.0 || k.beta2 < 0.0)
        throw std::invalid_argument("constants: beta1, beta2 must be nonnegative");
    if (!(k.beta1 + k.beta2 > 0.0))
        throw std::invalid_argument("constants: beta1 + beta2 must be positive");
    if (!(k.mu1 + k.beta2 > 0.0))
        throw std::invalid_argument("constants: mu1 + beta2 must be positive");
    if (m > n && !(k.beta1 > 0.0 && k.mu1 > 0.0))
        throw std::invalid_argument("constants: m > n requires beta1 > 0 and mu1 > 0");
    if (n > m && !(k.beta2 > 0.0 && k.mu1 > 0.0))
        throw std::invalid_argument("constants: n > m requires beta2 > 0 and mu1 > 0");
}

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t trial) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (trial + 1);
    x ^= x >> 30; x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27; x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

struct TrialSampler {
    std::mt19937_64 rng;
    std::normal_distribution<double> normal{0.0, 1.0};
    std::uniform_real_distribution<double> unif{0.0, 1.0};

    explicit TrialSampler(std::uint64_t s) : rng(s) {}
    double gauss() { return normal(rng); }
    double uniform() { return unif(rng); }
    int integer(int n) { return std::min(n - 1, static_cast<int>(unif(rng) * n)); }
};

Path brownian_path(TrialSampler& s, int dim, int steps, double dt, double scale,
                   double start) {
    std::vector<double> data(static_cast<std::size_t>(steps + 1) * dim);
    const double sd = scale * std::sqrt(dt);
    for (int i = 0; i < dim; ++i) data[i] = start;
    for (int k = 1; k <= steps; ++k)
        for (int i = 0; i < dim; ++i)
            data[static_cast<std::size_t>(k) * dim + i] =
                data[static_cast<std::size_t>(k - 1) * dim + i] + sd * s.gauss();
    return {dim, dt, std::move(data)};
}

// Second path of a pair: base plus one of three structured perturbations.
Path perturbed_path(TrialSampler& s, const Path& base, long trial, double scale) {
    const int dim = base.dim();
    const int steps = static_cast<int>(base.steps());
    const double dt = base.grid_step();
    Path out = base;
    switch (trial % 3) {
        case 0: {  // independent Brownian shift
            Path w = brownian_path(s, dim, steps, dt, scale, 0.0);
            for (std::size_t k = 0; k <= static_cast<std::size_t>(steps); ++k)
                out.value(k) += w.value(k);
            break;
        }
        case 1: {  // single-point bump
            const int k = s.integer(steps + 1);
            const int comp = s.integer(dim);
            out.value(k)[comp] += scale * (2.0 * s.uniform() - 1.0) * 2.0;
            break;
        }
        default: {  // low-frequency sinusoid
            const int waves = 1 + s.integer(3);
            const double phase = 2.0 * M_PI * s.uniform();
            const double amp = scale * (0.2 + s.uniform());
            const int comp = s.integer(dim);
            for (std::size_t k = 0; k <= static_cast<std::size_t>(steps); ++k) {
                const double t = static_cast<double>(k) * dt;
                out.value(k)[comp] += amp * std::sin(2.0 * M_PI * waves * t + phase);
            }
            break;
        }
    }
    return out;
}

ControlPair random_control(TrialSampler& s, int m, int d, double scale) {
    ControlPair u;
    u.y.resize(m);
    u.z.resize(m, d);
    for (int i = 0; i < m; ++i) u.y[i] = scale * s.gauss();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < d; ++j) u.z(i, j) = scale * s.gauss();
    return u;
}

double ftriple_sqnorm(const FTriple& f) {
    return f.hpart.squaredNorm() + f.bpart.squaredNorm() + f.spart.squaredNorm();
}

struct TrialOutcome {
    double ratio = 0.0;
    bool has_ratio = false;
    double slack = 0.0;
    double tol = 0.0;
    bool skipped = false;
};

template <class TrialFn>
CheckReport run_trials(const std::string& name, long trials, std::uint64_t seed,
                       TrialFn&& fn, bool maximize = true) {
    if (trials < 1) throw std::invalid_argument("conditions: trials must be >= 1");
    std::vector<TrialOutcome> out(static_cast<std::size_t>(trials));
    parallel::for_chunks(static_cast<std::size_t>(trials), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t t = lo; t < hi; ++t) {
            TrialSampler s(mix(seed, t));
            out[t] = fn(s, static_cast<long>(t));
        }
    });
    CheckReport rep;
    rep.check = name;
    rep.trials = trials;
    rep.sampler_seed = seed;
    double est = maximize ? 0.0 : std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (const TrialOutcome& o : out) {
        if (o.skipped) {
            ++rep.skipped;
            continue;
        }
        if (o.has_ratio)
            est = maximize ? std::max(est, o.ratio) : std::min(est, o.ratio);
        if (o.slack < -o.tol) ++rep.violations;
        worst = std::min(worst, o.slack);
    }
    rep.estimated_constant = std::isfinite(est) ? est : 0.0;
    rep.worst_margin = worst;
    return rep;
}

}  // namespace

CheckReport estimate_path_lipschitz(const CoefficientSet& cs, long trials,
                                    std::uint64_t seed, const SamplerOptions& opts) {
    const double dt = opts.horizon / opts.grid_steps;
    return run_trials("path_lipschitz", trials, seed, [&](TrialSampler& s, long trial) {
        TrialOutcome o;
        Path x1 = brownian_path(s, cs.n, opts.grid_steps, dt, opts.amplitude,
                                opts.amplitude * s.gauss());
        Path x2 = perturbed_path(s, x1, trial, opts.amplitude);
        double num = 0.0, den = 0.0;
        for (int k = 0; k <= opts.grid_steps; ++k) {
            const ControlPair u = random_control(s, cs.m, cs.d, opts.amplitude);
            const FTriple df = assemble_f_diff(cs, PathView(x1).prefix(k), u,
                                               PathView(x2).prefix(k), u);
            num += ftriple_sqnorm(df) * dt;
            den += (x1.value(k) - x2.value(k)).squaredNorm() * dt;
        }
        if (den < 1e-300) {
            o.skipped = true;
            return o;
        }
        o.ratio = num / den;
        o.has_ratio = true;
        return o;
    });
}

CheckReport estimate_u_lipschitz(const CoefficientSet& cs, long trials, std::uint64_t seed,
                                 const SamplerOptions& opts) {
    const double dt = opts.horizon / opts.grid_steps;
    return run_trials("u_lipschitz", trials, seed, [&](TrialSampler& s, long) {
        TrialOutcome o;
        Path x = brownian_path(s, cs.n, opts.grid_steps, dt, opts.amplitude,
                               opts.amplitude * s.gauss());
        const int k = s.integer(opts.grid_steps + 1);
        const ControlPair u1 = random_control(s, cs.m, cs.d, opts.amplitude);
        const ControlPair u2 = random_control(s, cs.m, cs.d, opts.amplitude);
        ControlPair du{u1.y - u2.y, u1.z - u2.z};
        const double den = control_norm(du);
        if (den < 1e-150) {
            o.skipped = true;
            return o;
        }
        const auto pfx = PathView(x).prefix(k);
        const FTriple df = assemble_f_diff(cs, pfx, u1, pfx, u2);
        o.ratio = std::sqrt(ftriple_sqnorm(df)) / den;
        o.has_ratio = true;
        return o;
    });
}

CheckReport estimate_g_lipschitz(const CoefficientSet& cs, long trials, std::uint64_t seed,
                                 const SamplerOptions& opts) {
    return run_trials("g_lipschitz", trials, seed, [&](TrialSampler& s, long) {
        TrialOutcome o;
        Eigen::VectorXd x1(cs.n), x2(cs.n);
        for (int i = 0; i < cs.n; ++i) {
            x1[i] = opts.amplitude * s.gauss();
            x2[i] = opts.amplitude * s.gauss();
        }
        const double den = (x1 - x2).norm();
        if (den < 1e-150) {
            o.skipped = true;
            return o;
        }
        o.ratio = (cs.g(x1) - cs.g(x2)).norm() / den;
        o.has_ratio = true;
        return o;
    });
}

CheckReport check_monotonicity(const CoefficientSet& cs, const AssumptionConstants& k,
                               long trials, std::uint64_t seed, const SamplerOptions& opts) {
    validate_constants(k, cs.n, cs.m);
    const double dt = opts.horizon / opts.grid_steps;
    const Eigen::MatrixXd G = cs.G;
    const Eigen::MatrixXd Gt = cs.G.transpose();
    return run_trials("monotonicity", trials, seed, [&](TrialSampler& s, long trial) {
        TrialOutcome o;
        Path x1 = brownian_path(s, cs.n, opts.grid_steps, dt, opts.amplitude,
                                opts.amplitude * s.gauss());
        Path x2 = perturbed_path(s, x1, trial, opts.amplitude);
        double lhs = 0.0, rhs = 0.0;
        for (int kk = 0; kk <= opts.grid_steps; ++kk) {
            const ControlPair u1 = random_control(s, cs.m, cs.d, opts.amplitude);
            ControlPair u2 = random_control(s, cs.m, cs.d, opts.amplitude);
            if (trial % 3 == 2 && trial % 2 == 0) u2 = u1;  // occasional x-only probe
            const Eigen::VectorXd dx = x1.value(kk) - x2.value(kk);
            const ControlPair du{u1.y - u2.y, u1.z - u2.z};
            const FTriple df = assemble_f_diff(cs, PathView(x1).prefix(kk), u1,
                                               PathView(x2).prefix(kk), u2);
            lhs += fbracket(df, dx, du) * dt;
            rhs += (k.beta1 * (G * dx).squaredNorm() +
                    k.beta2 * ((Gt * du.y).squaredNorm() + (Gt * du.z).squaredNorm())) *
                   dt;
        }
        o.slack = lhs - rhs;
        o.tol = 1e-10 * (1.0 + std::abs(lhs) + std::abs(rhs));
        if (rhs > 1e-300) {
            o.ratio = lhs / rhs;
            o.has_ratio = true;
        }
        return o;
    }, /*maximize=*/false);
}

CheckReport check_g_monotonicity(const CoefficientSet& cs, double mu1, long trials,
                                 std::uint64_t seed, const SamplerOptions& opts) {
    const Eigen::MatrixXd G = cs.G;
    return run_trials("g_monotonicity", trials, seed, [&](TrialSampler& s, long) {
        TrialOutcome o;
        Eigen::VectorXd x1(cs.n), x2(cs.n);
        for (int i = 0; i < cs.n; ++i) {
            x1[i] = opts.amplitude * s.gauss();
            x2[i] = opts.amplitude * s.gauss();
        }
        const Eigen::VectorXd gdx = G * (x1 - x2);
        const double q = gdx.squaredNorm();
        if (q < 1e-300) {
            o.skipped = true;
            return o;
        }
        const double inner = (cs.g(x1) - cs.g(x2)).dot(gdx);
        o.slack = -mu1 * q - inner;
        o.tol = 1e-10 * (1.0 + std::abs(inner) + mu1 * q);
        o.ratio = -inner / q;  // largest admissible mu1 for this sample
        o.has_ratio = true;
        return o;
    }, /*maximize=*/false);
}

std::string reports_to_text(const std::vector<CheckReport>& reports) {
    std::ostringstream os;
    char buf[64];
    for (const CheckReport& r : reports) {
        os << "check = " << r.check << "\n";
        os << "trials = " << r.trials << "\n";
        os << "violations = " << r.violations << "\n";
        os << "skipped = " << r.skipped << "\n";
        std::snprintf(buf, sizeof buf, "%.17g", r.worst_margin);
        os << "worst_margin = " << buf << "\n";
        std::snprintf(buf, sizeof buf, "%.17g", r.estimated_constant);
        os << "estimated_constant = " << buf << "\n";
        os << "sampler_seed = " << r.sampler_seed << "\n\n";
    }
    return os.str();
}

}  // namespace fbsde
