// Hot-path timings: banded factorization, residual/Jacobian assembly,
// a full Newton solve and one arclength step. Run with --benchmark_filter
// to pick a subset.
#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "skt/banded.hpp"
#include "skt/continuation.hpp"
#include "skt/eigen.hpp"
#include "skt/grid.hpp"
#include "skt/model.hpp"
#include "skt/newton.hpp"

namespace {

skt::ModelParams params_for(const skt::Grid& g, double lambda) {
    const std::vector<double> m(static_cast<size_t>(g.n), 1.0);
    return skt::ModelParams::make(20.0, 3.0, 2.0, 2.0, 1.0, m, lambda);
}

skt::StateWZ seeded_state(const skt::Grid& g, double lambda, double amp) {
    skt::StateWZ s;
    s.w.assign(static_cast<size_t>(g.n), 0.0);
    s.z.resize(static_cast<size_t>(g.n));
    const double L = g.b - g.a;
    for (int i = 0; i < g.n; ++i) {
        const double x = (g.node(i) - g.a) / L;
        s.z[i] = amp * std::sin(M_PI * x);
    }
    (void)lambda;
    return s;
}

void bench_banded_lu(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    skt::BandedMatrix a(n, 2, 2);
    for (int i = 0; i < n; ++i) {
        a.at(i, i) = 4.0 + 0.01 * i;
        if (i > 0) a.at(i, i - 1) = -1.0;
        if (i + 1 < n) a.at(i, i + 1) = -1.0;
        if (i > 1) a.at(i, i - 2) = 0.25;
        if (i + 2 < n) a.at(i, i + 2) = 0.25;
    }
    std::vector<double> rhs(static_cast<size_t>(n), 1.0);
    for (auto _ : state) {
        const skt::BandedLU lu = skt::BandedLU::factor(a);
        std::vector<double> x = lu.solve(rhs);
        benchmark::DoNotOptimize(x.data());
    }
}

void bench_residual(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const skt::Grid g = skt::build_grid(-0.5, 0.5, n);
    const skt::ModelParams p = params_for(g, 20.0);
    const skt::StateWZ s = seeded_state(g, 20.0, 1e-2);
    for (auto _ : state) {
        const skt::Residual r = skt::residual_wz(p, s, g);
        benchmark::DoNotOptimize(r.r1.data());
    }
}

void bench_jacobian(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const skt::Grid g = skt::build_grid(-0.5, 0.5, n);
    const skt::ModelParams p = params_for(g, 20.0);
    const skt::StateWZ s = seeded_state(g, 20.0, 1e-2);
    for (auto _ : state) {
        const skt::BandedMatrix j = skt::jacobian_wz(p, s, g);
        benchmark::DoNotOptimize(&j);
    }
}

void bench_newton(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const skt::Grid g = skt::build_grid(-0.5, 0.5, n);
    const skt::ModelParams p = params_for(g, 11.0);
    skt::ContinuationConfig cc;
    for (auto _ : state) {
        const skt::BranchPoint seed = skt::seed_primary_branch(p, g, 1e-2, cc);
        benchmark::DoNotOptimize(&seed);
    }
}

void bench_arclength_step(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const skt::Grid g = skt::build_grid(-0.5, 0.5, n);
    const skt::ModelParams p = params_for(g, 11.0);
    skt::ContinuationConfig cc;
    const skt::BranchPoint seed = skt::seed_primary_branch(p, g, 1e-2, cc);
    for (auto _ : state) {
        skt::BranchPoint pt = seed;
        const skt::StepOutcome out = skt::arclength_step(pt, cc.ds, p, g, cc);
        benchmark::DoNotOptimize(&out);
    }
}

void bench_eigs(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const skt::Grid g = skt::build_grid(-0.5, 0.5, n);
    const std::vector<double> m(static_cast<size_t>(n), 1.0);
    for (auto _ : state) {
        const auto modes = skt::eigen_weighted(g, m, 4);
        benchmark::DoNotOptimize(modes.data());
    }
}

} // namespace

BENCHMARK(bench_banded_lu)->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK(bench_residual)->Arg(255)->Arg(511)->Arg(2047);
BENCHMARK(bench_jacobian)->Arg(255)->Arg(511)->Arg(2047);
BENCHMARK(bench_newton)->Arg(127)->Arg(255);
BENCHMARK(bench_arclength_step)->Arg(255)->Arg(511);
BENCHMARK(bench_eigs)->Arg(255)->Arg(511);

BENCHMARK_MAIN();
