#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"
#include "fbsde/parallel.hpp"
#include "fbsde/version.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string output_dir;
    int threads = 0;
    long long seed_override = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "run configuration file")->required();
    cmd->add_option("--output", args.output_dir, "output directory (overrides [output] dir)");
    cmd->add_option("--threads", args.threads, "cap worker threads (0 = hardware default)");
    cmd->add_option("--seed", args.seed_override, "override [discretization] seed");
}

int load_and_apply(const CommonArgs& args, fbsde::cli::RunConfig& cfg) {
    try {
        cfg = fbsde::cli::load_config(args.config_path);
    } catch (const std::exception& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return fbsde::cli::kExitBadConfig;
    }
    if (!args.output_dir.empty()) cfg.output_dir = args.output_dir;
    if (args.seed_override >= 0)
        cfg.disc.seed = static_cast<std::uint64_t>(args.seed_override);
    fbsde::parallel::set_max_threads(args.threads);
    return fbsde::cli::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Path-dependent fully coupled FBSDE solver suite"};
    app.set_version_flag("--version", FBSDE_VERSION);
    app.require_subcommand(1);

    CommonArgs solve_args, check_args, ppde_args, ito_args;
    bool strict = false;

    CLI::App* solve = app.add_subcommand("solve", "run the continuation solver");
    add_common(solve, solve_args);
    CLI::App* check = app.add_subcommand("check", "estimate the structural conditions");
    add_common(check, check_args);
    check->add_flag("--strict", strict, "exit 4 on any violation");
    CLI::App* ppde = app.add_subcommand("ppde", "path equation residuals and the value check");
    add_common(ppde, ppde_args);
    CLI::App* ito = app.add_subcommand("ito-demo", "functional change-of-variable table");
    add_common(ito, ito_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : fbsde::cli::kExitBadConfig;
    }

    fbsde::cli::RunConfig cfg;
    try {
        if (solve->parsed()) {
            if (int rc = load_and_apply(solve_args, cfg)) return rc;
            return fbsde::cli::cmd_solve(cfg);
        }
        if (check->parsed()) {
            if (int rc = load_and_apply(check_args, cfg)) return rc;
            return fbsde::cli::cmd_check(cfg, strict);
        }
        if (ppde->parsed()) {
            if (int rc = load_and_apply(ppde_args, cfg)) return rc;
            return fbsde::cli::cmd_ppde(cfg);
        }
        if (ito->parsed()) {
            if (int rc = load_and_apply(ito_args, cfg)) return rc;
            return fbsde::cli::cmd_ito_demo(cfg);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
