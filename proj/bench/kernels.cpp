// Serial, parallel and reference versions of the hot kernels.
//
//   kelly_bench --benchmark_filter=growth
//   OMP_NUM_THREADS=4 kelly_bench

#include <benchmark/benchmark.h>

#include "kelly/distributions.hpp"
#include "kelly/exact_solver.hpp"
#include "kelly/reference.hpp"
#include "kelly/simulator.hpp"

using namespace kelly;

namespace {

PortfolioModel three_assets() {
    PortfolioModel p;
    p.assets = {{Family::LogNormal, 1.0, 0.02, 1.0}, {Family::LogNormal, 1.0, 0.01, 0.5},
                {Family::LogNormal, 1.0, 0.014, 0.7}};
    return p;
}

PortfolioModel correlated_pair() {
    PortfolioModel p;
    p.assets = {{Family::LogNormal, 1.0, 0.05, 0.3}, {Family::LogNormal, 1.0, 0.025, 0.25}};
    p.dependence = BivariateLogNormal{0.3};
    return p;
}

SimConfig sim_config(const PortfolioModel& p) {
    SimConfig c;
    c.rounds = 1000;
    c.replications = 200;
    c.seed = 1;
    c.f = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(p.size()), 0.1);
    return c;
}

void growth_reference(benchmark::State& state) {
    const auto p = three_assets();
    const auto c = sim_config(p);
    for (auto _ : state) benchmark::DoNotOptimize(reference::growth_rate_mc(p, c));
}

void growth(benchmark::State& state, Execution exec) {
    const auto p = three_assets();
    const auto c = sim_config(p);
    for (auto _ : state) benchmark::DoNotOptimize(growth_rate_mc(p, c, exec));
}

// Eleven fraction vectors against the same draws, as in a grid search.
void growth_grid(benchmark::State& state, Execution exec) {
    const auto p = three_assets();
    std::vector<Eigen::VectorXd> fs;
    for (int i = 0; i <= 10; ++i) fs.push_back(Eigen::VectorXd::Constant(3, 0.02 * i));
    for (auto _ : state) benchmark::DoNotOptimize(replication_growth(p, fs, 1000, 200, 1, exec));
}

void criterion_pair(benchmark::State& state, Execution exec) {
    const auto p = correlated_pair();
    const Eigen::Vector2d f(0.3, 0.2);
    for (auto _ : state) benchmark::DoNotOptimize(residual_multi(f, p, exec));
}

void criterion_three(benchmark::State& state, Execution exec) {
    const auto p = three_assets();
    const Eigen::Vector3d f(0.01, 0.03, 0.02);
    for (auto _ : state) benchmark::DoNotOptimize(residual_multi(f, p, exec));
}

const PriceMatrix& draws() {
    static const PriceMatrix x = sample(three_assets(), 5, 1'000'000);
    return x;
}

void moments_reference(benchmark::State& state) {
    const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(3);
    for (auto _ : state) benchmark::DoNotOptimize(reference::sample_moments(draws(), x0));
}

void moments(benchmark::State& state) {
    const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(3);
    for (auto _ : state) benchmark::DoNotOptimize(sample_moments(draws(), x0));
}

}  // namespace

BENCHMARK(growth_reference)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(growth, serial, Execution::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(growth, parallel, Execution::Parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(growth_grid, serial, Execution::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(growth_grid, parallel, Execution::Parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(criterion_pair, serial, Execution::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(criterion_pair, parallel, Execution::Parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(criterion_three, serial, Execution::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(criterion_three, parallel, Execution::Parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(moments_reference)->Unit(benchmark::kMillisecond);
BENCHMARK(moments)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
