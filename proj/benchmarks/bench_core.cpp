#include <benchmark/benchmark.h>

#include "qshrink/asymptotics.hpp"
#include "qshrink/penalized.hpp"
#include "qshrink/qr.hpp"
#include "qshrink/shrinkage.hpp"
#include "qshrink/simlab.hpp"
#include "qshrink/specfun.hpp"

using namespace qshrink;

namespace {

SimulationConfig bench_config(int n, int p1, int p2) {
    SimulationConfig cfg;
    cfg.n_train = n;
    cfg.p1 = p1;
    cfg.p2 = p2;
    cfg.beta_true = Eigen::VectorXd::Zero(p1 + p2);
    cfg.beta_true.head(p1).setOnes();
    cfg.error = case2(0.1);
    cfg.replications = 1;
    cfg.seed = 99;
    return cfg;
}

} // namespace

static void NoncentralCdf(benchmark::State& state) {
    const auto d = make_noncentral_chi_sq(7, static_cast<double>(state.range(0)));
    double x = 0.0;
    for (auto _ : state) {
        x += cdf(d, 9.5);
        benchmark::DoNotOptimize(x);
    }
}
BENCHMARK(NoncentralCdf)->Arg(0)->Arg(10)->Arg(100);

static void TruncatedInverseMoment(benchmark::State& state) {
    const auto d = make_noncentral_chi_sq(7, 5.0);
    double x = 0.0;
    for (auto _ : state) {
        x += truncated_inv_moment(d, 1, 3.0, TailSide::below);
        benchmark::DoNotOptimize(x);
    }
}
BENCHMARK(TruncatedInverseMoment);

static void QuantileFitBench(benchmark::State& state) {
    const auto cfg = bench_config(static_cast<int>(state.range(0)), 5, 5);
    const auto data = generate(cfg, 0).train;
    for (auto _ : state) {
        const auto fit = fit_full(data, 0.5);
        benchmark::DoNotOptimize(fit.objective);
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(QuantileFitBench)->Arg(60)->Arg(250)->Arg(1000)->Complexity();

static void ShrinkagePipeline(benchmark::State& state) {
    const auto cfg = bench_config(60, 5, 5);
    const auto data = generate(cfg, 0).train;
    for (auto _ : state) {
        const auto full = fit_full(data, 0.5);
        const auto sub = fit_sub(data, 0.5);
        const auto blocks = gamma_blocks(full);
        const auto res = shrinkage_estimate(full, sub, blocks, 0.05);
        benchmark::DoNotOptimize(res.wald);
    }
}
BENCHMARK(ShrinkagePipeline);

static void LassoPath(benchmark::State& state) {
    const auto cfg = bench_config(100, 4, 4);
    const auto data = generate(cfg, 0).train;
    PenaltySpec spec;
    spec.alpha = 1.0;
    const auto grid = default_lambda_grid(data, 0.5, spec, 50);
    for (auto _ : state) {
        double last = 0.0;
        for (double lam : grid) last = fit_penalized(data, 0.5, spec, lam).objective;
        benchmark::DoNotOptimize(last);
    }
}
BENCHMARK(LassoPath);

static void RiskCurveSweep(benchmark::State& state) {
    Eigen::MatrixXd G(6, 6);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) G(i, j) = 2.5 * std::pow(0.8, std::abs(i - j));
    const auto inputs = make_asymptotic_inputs(gamma_blocks(G, 3), 0.5,
                                               Eigen::MatrixXd::Identity(3, 3), 0.05);
    std::vector<double> grid;
    for (int i = 0; i < 40; ++i) grid.push_back(i * 0.75);
    for (auto _ : state) {
        const auto pts = risk_curves(inputs, Eigen::VectorXd::Ones(3), grid,
                                     {Estimator::FM, Estimator::SM, Estimator::PT,
                                      Estimator::S, Estimator::PS});
        benchmark::DoNotOptimize(pts.size());
    }
}
BENCHMARK(RiskCurveSweep);

BENCHMARK_MAIN();
