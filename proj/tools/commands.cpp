#include "commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include <json.hpp>

#include "fbsde/io.hpp"
#include "fbsde/ppde.hpp"
#include "fbsde/riccati.hpp"
#include "fbsde/version.hpp"

namespace fbsde::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

class Stopwatch {
public:
    void mark(const std::string& phase) {
        const auto now = std::chrono::steady_clock::now();
        phases_.emplace_back(phase, std::chrono::duration<double>(now - last_).count());
        last_ = now;
    }
    ordered_json to_json() const {
        ordered_json j;
        for (const auto& [name, secs] : phases_) j[name] = secs;
        return j;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
    std::vector<std::pair<std::string, double>> phases_;
};

void write_manifest(const RunConfig& cfg, const std::string& command, int exit_status,
                    const Stopwatch& watch, const std::vector<std::string>& files) {
    ordered_json j;
    j["tool"] = "fbsde";
    j["version"] = FBSDE_VERSION;
    j["command"] = command;
    j["exit_status"] = exit_status;
    j["config"] = config_to_text(cfg);
    j["timings_seconds"] = watch.to_json();
    ordered_json inventory = ordered_json::array();
    for (const std::string& f : files) {
        const fs::path p = fs::path(cfg.output_dir) / f;
        ordered_json entry;
        entry["name"] = f;
        char buf[20];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(fnv1a64_file(p.string())));
        entry["fnv1a64"] = buf;
        inventory.push_back(entry);
    }
    j["files"] = inventory;
    write_text_atomic((fs::path(cfg.output_dir) / "manifest.json").string(), j.dump(2) + "\n");
}

ordered_json trace_to_json(const ConvergenceTrace& trace) {
    ordered_json levels = ordered_json::array();
    for (const LevelTrace& lvl : trace.levels) {
        ordered_json l;
        l["alpha"] = lvl.alpha;
        l["delta"] = lvl.delta;
        l["relaxation"] = lvl.relaxation;
        l["inner_iterations"] = lvl.inner_iterations;
        l["converged"] = lvl.converged;
        l["final_residual"] = lvl.final_residual;
        l["residual_history"] = lvl.residual_history;
        l["contraction_ratios"] = lvl.contraction_ratios;
        levels.push_back(l);
    }
    ordered_json j;
    j["levels"] = levels;
    return j;
}

CoefficientSet problem_from_config(const RunConfig& cfg) {
    CoefficientSet cs = registry_get(cfg.problem, cfg.problem_params);
    if (cfg.x0.size() != cs.n)
        throw ConfigError("config: x0 has dimension " + std::to_string(cfg.x0.size()) +
                          ", problem expects " + std::to_string(cs.n));
    return cs;
}

void ensure_output_dir(const RunConfig& cfg) {
    fs::create_directories(cfg.output_dir);
}

Path random_joint_path(std::mt19937_64& rng, int dim, int steps, double dt,
                       const Eigen::VectorXd& start, double scale) {
    std::normal_distribution<double> g(0.0, std::sqrt(dt));
    std::vector<double> data(static_cast<std::size_t>(steps + 1) * dim);
    for (int i = 0; i < dim; ++i) data[i] = start[i];
    for (int k = 1; k <= steps; ++k)
        for (int i = 0; i < dim; ++i)
            data[static_cast<std::size_t>(k) * dim + i] =
                data[static_cast<std::size_t>(k - 1) * dim + i] + scale * g(rng);
    return {dim, dt, std::move(data)};
}

}  // namespace

int cmd_solve(const RunConfig& cfg) {
    Stopwatch watch;
    CoefficientSet cs;
    try {
        cs = problem_from_config(cfg);
        cfg.disc.validate();
        cfg.schedule.validate();
        validate_constants(cfg.constants, cs.n, cs.m);
    } catch (const std::exception& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return kExitBadConfig;
    }
    ensure_output_dir(cfg);
    watch.mark("setup");

    SolutionEstimate est;
    int status = kExitOk;
    ConvergenceTrace trace;
    try {
        est = solve_fbsde(cs, cfg.constants, cfg.disc, cfg.x0, cfg.schedule);
        trace = est.diagnostics;
    } catch (const NonConvergenceError& e) {
        std::cerr << "solver did not converge: " << e.what() << "\n";
        trace = e.trace;
        status = kExitNoConvergence;
    } catch (const SimulationError& e) {
        std::cerr << "simulation failed: " << e.what() << "\n";
        status = kExitNoConvergence;
    }
    watch.mark("solve");

    std::vector<std::string> files;
    {
        std::ofstream os(fs::path(cfg.output_dir) / "trace.json");
        os << trace_to_json(trace).dump(2) << "\n";
        files.push_back("trace.json");
    }
    if (status == kExitOk) {
        write_solution_csv(est, (fs::path(cfg.output_dir) / "solution.csv").string());
        files.push_back("solution.csv");
        std::cout << "y0 =";
        for (int i = 0; i < est.y0.size(); ++i) std::cout << ' ' << format_full(est.y0[i]);
        std::cout << " +- " << format_full(est.y0_stderr) << "\n";
    }
    watch.mark("io");
    write_manifest(cfg, "solve", status, watch, files);
    return status;
}

int cmd_check(const RunConfig& cfg, bool strict) {
    Stopwatch watch;
    CoefficientSet cs;
    try {
        cs = problem_from_config(cfg);
        validate_constants(cfg.constants, cs.n, cs.m);
        if (cfg.check_trials < 1) throw ConfigError("config: check trials must be >= 1");
    } catch (const std::exception& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return kExitBadConfig;
    }
    ensure_output_dir(cfg);
    SamplerOptions opts;
    opts.grid_steps = cfg.check_grid_steps;
    opts.horizon = cs.horizon;
    opts.amplitude = cfg.check_amplitude;
    watch.mark("setup");

    std::vector<CheckReport> reports;
    reports.push_back(estimate_path_lipschitz(cs, cfg.check_trials, cfg.disc.seed, opts));
    reports.push_back(estimate_u_lipschitz(cs, cfg.check_trials, cfg.disc.seed + 1, opts));
    reports.push_back(estimate_g_lipschitz(cs, cfg.check_trials, cfg.disc.seed + 2, opts));
    reports.push_back(
        check_monotonicity(cs, cfg.constants, cfg.check_trials, cfg.disc.seed + 3, opts));
    reports.push_back(check_g_monotonicity(cs, cfg.constants.mu1, cfg.check_trials,
                                           cfg.disc.seed + 4, opts));
    watch.mark("check");

    const std::string text = reports_to_text(reports);
    write_text_atomic((fs::path(cfg.output_dir) / "check_report.txt").string(), text);
    std::cout << text;
    long total_violations = 0;
    for (const CheckReport& r : reports) total_violations += r.violations;
    const int status = (strict && total_violations > 0) ? kExitViolation : kExitOk;
    watch.mark("io");
    write_manifest(cfg, strict ? "check --strict" : "check", status, watch,
                   {"check_report.txt"});
    return status;
}

int cmd_ppde(const RunConfig& cfg) {
    Stopwatch watch;
    CoefficientSet cs;
    PathFunctional u, v;
    try {
        cs = problem_from_config(cfg);
        if (cfg.ppde_functional == "oracle") {
            if (cfg.problem != "example31")
                throw ConfigError("config: the oracle functional belongs to example31");
            OracleFunctionals fn = oracle_functional(cfg.ppde_ode_steps);
            u = fn.u;
            v = fn.v;
        } else if (cfg.ppde_functional == "constant") {
            const double c = cfg.x0[0];
            u = scalar_functional([c](const Path&) { return c; });
            v = scalar_functional([](const Path&) { return 0.0; });
        } else if (cfg.ppde_functional == "rough_demo") {
            u = scalar_functional([](const Path& p) { return sup_norm(p); }, Smoothness::C0);
            v = scalar_functional([](const Path&) { return 0.0; });
        } else {
            throw ConfigError("config: unknown ppde functional '" + cfg.ppde_functional + "'");
        }
        if (u.smoothness != Smoothness::C12)
            throw ConfigError("config: the ppde residual needs a C12 functional");
        if (cfg.ppde_paths < 1 || cfg.ppde_grid_steps < 4)
            throw ConfigError("config: bad ppde sweep sizes");
    } catch (const std::exception& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return kExitBadConfig;
    }
    ensure_output_dir(cfg);
    const LiftedCoefficients lc = lift_coefficients(cs);
    watch.mark("setup");

    const double dt = cs.horizon / cfg.ppde_grid_steps;
    std::mt19937_64 rng(cfg.disc.seed);
    Eigen::VectorXd start = Eigen::VectorXd::Zero(lc.lifted.n);
    start.tail(cs.n) = cfg.x0;

    double max_resid = 0.0, max_gap = 0.0;
    std::ostringstream csv;
    csv << "path_id,t";
    for (int i = 1; i <= lc.lifted.m; ++i) csv << ",residual" << i;
    csv << ",consistency_gap\n";
    for (int id = 0; id < cfg.ppde_paths; ++id) {
        const int lo = cfg.ppde_grid_steps / 5;
        const int hi = (4 * cfg.ppde_grid_steps) / 5;
        const int steps = lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo));
        Path p = random_joint_path(rng, lc.lifted.n, steps, dt, start, cfg.ppde_amplitude);
        const PpdeResidual r = ppde_residual(u, v, lc, p, cfg.ppde_eps, dt);
        csv << id << ',' << format_full(p.end_time());
        for (int i = 0; i < r.residual.size(); ++i) {
            csv << ',' << format_full(r.residual[i]);
            max_resid = std::max(max_resid, std::abs(r.residual[i]));
        }
        csv << ',' << format_full(r.consistency_gap) << "\n";
        max_gap = std::max(max_gap, r.consistency_gap);
    }
    watch.mark("residual_sweep");

    Path prefix = Path::single_point(cfg.disc.dt(), start);
    FeynmanKacReport fk;
    int status = kExitOk;
    try {
        fk = feynman_kac_check(u, cs, prefix, cfg.disc, cfg.schedule);
    } catch (const NonConvergenceError& e) {
        std::cerr << "feynman-kac solve did not converge: " << e.what() << "\n";
        status = kExitNoConvergence;
    }
    watch.mark("feynman_kac");

    write_text_atomic((fs::path(cfg.output_dir) / "ppde_residuals.csv").string(), csv.str());
    std::vector<std::string> files{"ppde_residuals.csv"};
    if (status == kExitOk) {
        std::ostringstream fkr;
        fkr << "u_value = " << format_full(fk.u_value[0]) << "\n";
        fkr << "y_estimate = " << format_full(fk.y_estimate[0]) << "\n";
        fkr << "stderr = " << format_full(fk.stderr_est) << "\n";
        fkr << "gap = " << format_full(fk.gap) << "\n";
        write_text_atomic((fs::path(cfg.output_dir) / "fk_report.txt").string(), fkr.str());
        files.push_back("fk_report.txt");
        std::cout << "max residual = " << format_full(max_resid)
                  << "  max consistency gap = " << format_full(max_gap)
                  << "  fk gap = " << format_full(fk.gap) << " (se "
                  << format_full(fk.stderr_est) << ")\n";
        if (max_resid > cfg.ppde_tolerance) {
            std::cerr << "residual above tolerance " << cfg.ppde_tolerance << "\n";
            status = kExitNoConvergence;
        }
    }
    watch.mark("io");
    write_manifest(cfg, "ppde", status, watch, files);
    return status;
}

int cmd_ito_demo(const RunConfig& cfg) {
    Stopwatch watch;
    if (cfg.ito_k_values.size() < 2) {
        std::cerr << "invalid config: the ito table needs at least two grid sizes\n";
        return kExitBadConfig;
    }
    for (int k : cfg.ito_k_values)
        if (k < 2) {
            std::cerr << "invalid config: grid sizes must be >= 2\n";
            return kExitBadConfig;
        }
    if (cfg.ito_paths < 1) {
        std::cerr << "invalid config: ito paths must be >= 1\n";
        return kExitBadConfig;
    }
    ensure_output_dir(cfg);
    watch.mark("setup");

    PathFunctional quad = scalar_functional([](const Path& p) {
        const double x = p.last()[0];
        return x * x;
    });
    PathFunctional integ = scalar_functional([](const Path& p) { return path_integral(p)[0]; });

    std::ostringstream csv;
    csv << "K,rms_quadratic,rms_integral\n";
    std::ostringstream summary;
    for (std::size_t i = 0; i < cfg.ito_k_values.size(); ++i) {
        const int K = cfg.ito_k_values[i];
        const double dt = 1.0 / K;
        std::mt19937_64 rng(cfg.disc.seed + static_cast<std::uint64_t>(K));
        const std::vector<Eigen::MatrixXd> model_qv(
            K, Eigen::MatrixXd::Constant(1, 1, dt));
        double sq = 0.0, si = 0.0;
        for (int p = 0; p < cfg.ito_paths; ++p) {
            Path path = random_joint_path(rng, 1, K, dt, Eigen::VectorXd::Zero(1), 1.0);
            const double eps = default_vertical_step(path);
            const double rq = ito_residual(quad, path, eps, dt, &model_qv);
            const double ri = ito_residual(integ, path, eps, dt);
            sq += rq * rq;
            si += ri * ri;
        }
        const double rmsq = std::sqrt(sq / cfg.ito_paths);
        const double rmsi = std::sqrt(si / cfg.ito_paths);
        csv << K << ',' << format_full(rmsq) << ',' << format_full(rmsi) << "\n";
        summary << "K=" << K << " rms_quadratic=" << format_full(rmsq)
                << " rms_integral=" << format_full(rmsi) << "\n";
    }
    watch.mark("table");

    write_text_atomic((fs::path(cfg.output_dir) / "ito_table.csv").string(), csv.str());
    std::cout << summary.str();
    watch.mark("io");
    write_manifest(cfg, "ito-demo", kExitOk, watch, {"ito_table.csv"});
    return kExitOk;
}

}  // namespace fbsde::cli
