#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "fbsde/io.hpp"

namespace fbsde::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError("config: key '" + key + "' has a non-numeric value '" + value + "'");
    }
}

long to_long(const std::string& key, const std::string& value) {
    const double v = to_double(key, value);
    const long n = static_cast<long>(v);
    if (static_cast<double>(n) != v)
        throw ConfigError("config: key '" + key + "' must be an integer");
    return n;
}

std::vector<double> to_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(to_double(key, trim(cell)));
    if (out.empty()) throw ConfigError("config: key '" + key + "' has an empty list");
    return out;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    cfg.disc.num_steps = 50;
    cfg.disc.num_paths = 20000;
    cfg.disc.horizon = 1.0;
    cfg.disc.basis_degree = 1;
    cfg.disc.seed = 1;
    cfg.x0 = Eigen::VectorXd::Ones(1);

    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    bool saw_x0 = false;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": bad section");
            section = trim(line.substr(1, line.size() - 2));
            static const char* known[] = {"problem", "assumptions", "discretization",
                                          "schedule", "check", "ppde", "ito", "output"};
            if (std::find_if(std::begin(known), std::end(known), [&](const char* k) {
                    return section == k;
                }) == std::end(known))
                throw ConfigError("config: unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");

        if (section == "problem") {
            if (key == "name") {
                cfg.problem = value;
            } else if (key == "x0") {
                const auto vals = to_list(key, value);
                cfg.x0 = Eigen::Map<const Eigen::VectorXd>(vals.data(),
                                                           static_cast<long>(vals.size()));
                saw_x0 = true;
            } else {
                cfg.problem_params[key] = to_double(key, value);
            }
        } else if (section == "assumptions") {
            if (key == "c1") cfg.constants.c1 = to_double(key, value);
            else if (key == "beta1") cfg.constants.beta1 = to_double(key, value);
            else if (key == "beta2") cfg.constants.beta2 = to_double(key, value);
            else if (key == "mu1") cfg.constants.mu1 = to_double(key, value);
            else throw ConfigError("config: unknown key '" + key + "' in [assumptions]");
        } else if (section == "discretization") {
            if (key == "num_steps") cfg.disc.num_steps = static_cast<int>(to_long(key, value));
            else if (key == "num_paths") cfg.disc.num_paths = static_cast<int>(to_long(key, value));
            else if (key == "horizon") cfg.disc.horizon = to_double(key, value);
            else if (key == "basis_degree") cfg.disc.basis_degree = static_cast<int>(to_long(key, value));
            else if (key == "seed") cfg.disc.seed = static_cast<std::uint64_t>(to_long(key, value));
            else throw ConfigError("config: unknown key '" + key + "' in [discretization]");
        } else if (section == "schedule") {
            if (key == "mode") {
                if (value == "direct") cfg.schedule.mode = ContinuationSchedule::Mode::direct;
                else if (value == "homotopy") cfg.schedule.mode = ContinuationSchedule::Mode::homotopy;
                else throw ConfigError("config: mode must be direct or homotopy");
            } else if (key == "delta_init") cfg.schedule.delta_init = to_double(key, value);
            else if (key == "delta_min") cfg.schedule.delta_min = to_double(key, value);
            else if (key == "inner_tol") cfg.schedule.inner_tol = to_double(key, value);
            else if (key == "max_inner_iters") cfg.schedule.max_inner_iters = static_cast<int>(to_long(key, value));
            else if (key == "relaxation") cfg.schedule.relaxation = to_double(key, value);
            else if (key == "coarse_tol") cfg.schedule.coarse_tol = to_double(key, value);
            else throw ConfigError("config: unknown key '" + key + "' in [schedule]");
        } else if (section == "check") {
            if (key == "trials") cfg.check_trials = to_long(key, value);
            else if (key == "grid_steps") cfg.check_grid_steps = static_cast<int>(to_long(key, value));
            else if (key == "amplitude") cfg.check_amplitude = to_double(key, value);
            else throw ConfigError("config: unknown key '" + key + "' in [check]");
        } else if (section == "ppde") {
            if (key == "functional") cfg.ppde_functional = value;
            else if (key == "paths") cfg.ppde_paths = static_cast<int>(to_long(key, value));
            else if (key == "grid_steps") cfg.ppde_grid_steps = static_cast<int>(to_long(key, value));
            else if (key == "eps") cfg.ppde_eps = to_double(key, value);
            else if (key == "ode_steps") cfg.ppde_ode_steps = static_cast<int>(to_long(key, value));
            else if (key == "tolerance") cfg.ppde_tolerance = to_double(key, value);
            else if (key == "amplitude") cfg.ppde_amplitude = to_double(key, value);
            else throw ConfigError("config: unknown key '" + key + "' in [ppde]");
        } else if (section == "ito") {
            if (key == "k_values") {
                cfg.ito_k_values.clear();
                for (double v : to_list(key, value))
                    cfg.ito_k_values.push_back(static_cast<int>(v));
            } else if (key == "paths") cfg.ito_paths = static_cast<int>(to_long(key, value));
            else throw ConfigError("config: unknown key '" + key + "' in [ito]");
        } else if (section == "output") {
            if (key == "dir") cfg.output_dir = value;
            else throw ConfigError("config: unknown key '" + key + "' in [output]");
        } else {
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": key outside of any section");
        }
    }
    (void)saw_x0;
    return cfg;
}

RunConfig load_config(const std::string& filename) {
    std::ifstream is(filename);
    if (!is) throw ConfigError("config: cannot open " + filename);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config_text(ss.str());
}

std::string config_to_text(const RunConfig& cfg) {
    std::ostringstream os;
    os << "[problem]\n";
    os << "name = " << cfg.problem << "\n";
    os << "x0 = ";
    for (int i = 0; i < cfg.x0.size(); ++i)
        os << (i ? ", " : "") << format_full(cfg.x0[i]);
    os << "\n";
    for (const auto& [k, v] : cfg.problem_params) os << k << " = " << format_full(v) << "\n";
    os << "\n[assumptions]\n";
    os << "c1 = " << format_full(cfg.constants.c1) << "\n";
    os << "beta1 = " << format_full(cfg.constants.beta1) << "\n";
    os << "beta2 = " << format_full(cfg.constants.beta2) << "\n";
    os << "mu1 = " << format_full(cfg.constants.mu1) << "\n";
    os << "\n[discretization]\n";
    os << "num_steps = " << cfg.disc.num_steps << "\n";
    os << "num_paths = " << cfg.disc.num_paths << "\n";
    os << "horizon = " << format_full(cfg.disc.horizon) << "\n";
    os << "basis_degree = " << cfg.disc.basis_degree << "\n";
    os << "seed = " << cfg.disc.seed << "\n";
    os << "\n[schedule]\n";
    os << "mode = "
       << (cfg.schedule.mode == ContinuationSchedule::Mode::direct ? "direct" : "homotopy")
       << "\n";
    os << "delta_init = " << format_full(cfg.schedule.delta_init) << "\n";
    os << "delta_min = " << format_full(cfg.schedule.delta_min) << "\n";
    os << "inner_tol = " << format_full(cfg.schedule.inner_tol) << "\n";
    os << "max_inner_iters = " << cfg.schedule.max_inner_iters << "\n";
    os << "relaxation = " << format_full(cfg.schedule.relaxation) << "\n";
    os << "coarse_tol = " << format_full(cfg.schedule.coarse_tol) << "\n";
    os << "\n[check]\n";
    os << "trials = " << cfg.check_trials << "\n";
    os << "grid_steps = " << cfg.check_grid_steps << "\n";
    os << "amplitude = " << format_full(cfg.check_amplitude) << "\n";
    os << "\n[ppde]\n";
    os << "functional = " << cfg.ppde_functional << "\n";
    os << "paths = " << cfg.ppde_paths << "\n";
    os << "grid_steps = " << cfg.ppde_grid_steps << "\n";
    os << "eps = " << format_full(cfg.ppde_eps) << "\n";
    os << "ode_steps = " << cfg.ppde_ode_steps << "\n";
    os << "tolerance = " << format_full(cfg.ppde_tolerance) << "\n";
    os << "amplitude = " << format_full(cfg.ppde_amplitude) << "\n";
    os << "\n[ito]\n";
    os << "k_values = ";
    for (std::size_t i = 0; i < cfg.ito_k_values.size(); ++i)
        os << (i ? ", " : "") << cfg.ito_k_values[i];
    os << "\n";
    os << "paths = " << cfg.ito_paths << "\n";
    os << "\n[output]\n";
    os << "dir = " << cfg.output_dir << "\n";
    return os.str();
}

}  // namespace fbsde::cli
