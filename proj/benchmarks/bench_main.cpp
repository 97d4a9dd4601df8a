#include <benchmark/benchmark.h>

#include <random>

#include "fbsde/ppde.hpp"
#include "fbsde/riccati.hpp"
#include "fbsde/solver.hpp"

using namespace fbsde;

namespace {

Discretization make_disc(int K, int M) {
    Discretization d;
    d.num_steps = K;
    d.num_paths = M;
    d.horizon = 1.0;
    d.basis_degree = 1;
    d.seed = 42;
    return d;
}

Path brownian_path(int steps, double dt, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, std::sqrt(dt));
    std::vector<double> data(steps + 1);
    for (int k = 1; k <= steps; ++k) data[k] = data[k - 1] + g(rng);
    return {1, dt, std::move(data)};
}

void bm_forward(benchmark::State& state) {
    CoefficientSet cs = registry_get("example31");
    Discretization d = make_disc(50, static_cast<int>(state.range(0)));
    BrownianGrid bg(d, 1);
    GridControls u = zero_controls(d, 1, 1);
    for (auto _ : state) {
        auto X = simulate_forward(cs, u, bg, Eigen::VectorXd::Ones(1));
        benchmark::DoNotOptimize(X);
    }
}
BENCHMARK(bm_forward)->Arg(2000)->Arg(8000);

void bm_backward(benchmark::State& state) {
    CoefficientSet cs = registry_get("example31");
    Discretization d = make_disc(50, static_cast<int>(state.range(0)));
    BrownianGrid bg(d, 1);
    auto X = simulate_forward(cs, zero_controls(d, 1, 1), bg, Eigen::VectorXd::Ones(1));
    for (auto _ : state) {
        auto bw = backward_lsmc(cs, X, bg, d.basis_degree);
        benchmark::DoNotOptimize(bw);
    }
}
BENCHMARK(bm_backward)->Arg(2000)->Arg(8000);

void bm_d_infty(benchmark::State& state) {
    Path a = brownian_path(static_cast<int>(state.range(0)), 1e-3, 1);
    Path b = brownian_path(static_cast<int>(state.range(0)), 1e-3, 2);
    for (auto _ : state) benchmark::DoNotOptimize(d_infty(a, b));
}
BENCHMARK(bm_d_infty)->Arg(256)->Arg(4096);

void bm_vertical_hessian(benchmark::State& state) {
    OracleFunctionals fn = oracle_functional(2000);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 0.02);
    std::vector<double> data(2 * 501);
    for (std::size_t i = 2; i < data.size(); ++i) data[i] = data[i - 2] + g(rng);
    Path p(2, 1e-3, std::move(data));
    for (auto _ : state)
        benchmark::DoNotOptimize(second_vertical_derivative(fn.u, p, 1e-3));
}
BENCHMARK(bm_vertical_hessian);

void bm_riccati(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(solve_riccati_example31(10000));
}
BENCHMARK(bm_riccati);

}  // namespace

BENCHMARK_MAIN();
