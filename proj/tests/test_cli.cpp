#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "config.hpp"

namespace fs = std::filesystem;
using namespace fbsde::cli;

namespace {

std::string binary() {
    const char* env = std::getenv("FBSDE_BIN");
    REQUIRE(env != nullptr);
    return env;
}

int run(const std::string& args) {
    const int rc = std::system((binary() + " " + args + " > /dev/null 2>&1").c_str());
    REQUIRE(rc != -1);
    return WEXITSTATUS(rc);
}

struct TempDir {
    fs::path dir;
    explicit TempDir(const std::string& name) : dir(fs::temp_directory_path() / name) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~TempDir() { fs::remove_all(dir); }
    std::string file(const std::string& name, const std::string& content) const {
        const fs::path p = dir / name;
        std::ofstream os(p);
        os << content;
        return p.string();
    }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::string read_file(const std::string& p) {
    std::ifstream is(p);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

const char* kQuickSolve = R"(
[problem]
name = decoupled_identity
x0 = 1.25

[discretization]
num_steps = 12
num_paths = 2000
seed = 7

[schedule]
mode = direct
relaxation = 1.0
inner_tol = 1e-9
max_inner_iters = 20
)";

}  // namespace

TEST_CASE("config parsing") {
    RunConfig cfg = parse_config_text(kQuickSolve);
    CHECK(cfg.problem == "decoupled_identity");
    CHECK(cfg.x0[0] == 1.25);
    CHECK(cfg.disc.num_steps == 12);
    CHECK(cfg.schedule.mode == fbsde::ContinuationSchedule::Mode::direct);

    CHECK_THROWS_AS(parse_config_text("[nope]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[schedule]\nbogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[discretization]\nnum_steps = abc\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("key_without_section = 1\n"), ConfigError);

    // echo is reparseable and stable
    RunConfig echo = parse_config_text(config_to_text(cfg));
    CHECK(config_to_text(echo) == config_to_text(cfg));
}

TEST_CASE("solve subcommand writes the run directory") {
    TempDir tmp("fbsde_cli_solve");
    const std::string cfgfile = tmp.file("run.cfg", kQuickSolve);
    const std::string out = tmp.path("out");
    CHECK(run("solve --config " + cfgfile + " --output " + out) == 0);
    CHECK(fs::exists(fs::path(out) / "solution.csv"));
    CHECK(fs::exists(fs::path(out) / "trace.json"));
    CHECK(fs::exists(fs::path(out) / "manifest.json"));
    const std::string manifest = read_file((fs::path(out) / "manifest.json").string());
    CHECK(manifest.find("\"exit_status\": 0") != std::string::npos);
    CHECK(manifest.find("fnv1a64") != std::string::npos);
}

TEST_CASE("solve reproducibility across thread counts") {
    TempDir tmp("fbsde_cli_repro");
    const std::string cfgfile = tmp.file("run.cfg", kQuickSolve);
    const std::string out1 = tmp.path("a");
    const std::string out2 = tmp.path("b");
    CHECK(run("solve --config " + cfgfile + " --output " + out1 + " --threads 1") == 0);
    CHECK(run("solve --config " + cfgfile + " --output " + out2 + " --threads 4") == 0);
    CHECK(read_file(out1 + "/solution.csv") == read_file(out2 + "/solution.csv"));
    CHECK(read_file(out1 + "/trace.json") == read_file(out2 + "/trace.json"));
}

TEST_CASE("invalid configs exit 3") {
    TempDir tmp("fbsde_cli_bad");
    const std::string bad1 = tmp.file("bad1.cfg", "[schedule]\ndelta_init = 0.1\ndelta_min = 0.5\n");
    CHECK(run("solve --config " + bad1) == 3);
    const std::string bad2 = tmp.file("bad2.cfg", "[problem]\nname = missing_problem\n");
    CHECK(run("solve --config " + bad2) == 3);
    CHECK(run("solve --config " + tmp.path("absent.cfg")) == 3);
    const std::string bad3 = tmp.file("bad3.cfg", "[ito]\nk_values = 25\n");
    CHECK(run("ito-demo --config " + bad3 + " --output " + tmp.path("ito")) == 3);
}

TEST_CASE("check subcommand and strict mode") {
    TempDir tmp("fbsde_cli_check");
    const char* base = R"(
[problem]
name = example31
x0 = 1.0

[assumptions]
c1 = 22
beta1 = 1
beta2 = 1
mu1 = 1

[check]
trials = 400
)";
    const std::string cfgfile = tmp.file("check.cfg", base);
    const std::string out = tmp.path("out");
    CHECK(run("check --config " + cfgfile + " --output " + out) == 0);
    const std::string report = read_file(out + "/check_report.txt");
    CHECK(report.find("check = path_lipschitz") != std::string::npos);
    CHECK(report.find("check = g_monotonicity") != std::string::npos);

    const char* greedy = R"(
[problem]
name = example31
x0 = 1.0

[assumptions]
c1 = 22
beta1 = 4
beta2 = 1
mu1 = 1

[check]
trials = 400
)";
    const std::string greedyfile = tmp.file("greedy.cfg", greedy);
    CHECK(run("check --strict --config " + greedyfile + " --output " + tmp.path("g")) == 4);
    CHECK(run("check --config " + greedyfile + " --output " + tmp.path("g2")) == 0);
}

TEST_CASE("ppde subcommand") {
    TempDir tmp("fbsde_cli_ppde");
    const char* cfg = R"(
[problem]
name = decoupled_identity
x0 = 0.5

[discretization]
num_steps = 10
num_paths = 1000
seed = 5

[schedule]
mode = direct
relaxation = 1.0
max_inner_iters = 20

[ppde]
functional = constant
paths = 10
grid_steps = 200
tolerance = 1e-8
)";
    const std::string cfgfile = tmp.file("ppde.cfg", cfg);
    const std::string out = tmp.path("out");
    CHECK(run("ppde --config " + cfgfile + " --output " + out) == 0);
    const std::string csv = read_file(out + "/ppde_residuals.csv");
    CHECK(csv.find("path_id,t,residual1,consistency_gap") != std::string::npos);

    const char* rough = R"(
[problem]
name = decoupled_identity
x0 = 0.5

[ppde]
functional = rough_demo
)";
    const std::string roughfile = tmp.file("rough.cfg", rough);
    CHECK(run("ppde --config " + roughfile + " --output " + tmp.path("r")) == 3);
}

TEST_CASE("ito-demo subcommand") {
    TempDir tmp("fbsde_cli_ito");
    const char* cfg = R"(
[ito]
k_values = 25, 50
paths = 100
)";
    const std::string cfgfile = tmp.file("ito.cfg", cfg);
    const std::string out = tmp.path("out");
    CHECK(run("ito-demo --config " + cfgfile + " --output " + out) == 0);
    const std::string table = read_file(out + "/ito_table.csv");
    CHECK(table.find("K,rms_quadratic,rms_integral") != std::string::npos);
    std::istringstream is(table);
    std::string line;
    std::getline(is, line);
    double prev = -1.0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');
        std::getline(row, cell, ',');
        const double rms = std::stod(cell);
        if (prev > 0.0) CHECK(rms < prev);
        prev = rms;
    }
}
