#include "shapebo/acquisition.hpp"
#include "shapebo/constraints.hpp"
#include "shapebo/design.hpp"
#include "shapebo/gp.hpp"
#include "shapebo/kernel.hpp"
#include "shapebo/tmvn.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <limits>
#include <vector>

using namespace shapebo;

namespace {

HyperParams theta(Index d) {
    HyperParams t;
    t.signal_var_tau2 = 1.0;
    t.noise_var_sigma2 = 0.01;
    t.lengthscale_prec_psi = Vector::Constant(d, 4.0);
    return t;
}

Dataset quadratic_data(Index n, Index d) {
    Dataset data;
    data.points = maximin_lhs(n, d, 1).points;
    data.values = (data.points.array() - 0.4).square().rowwise().sum();
    return data;
}

// Values plus first and second partials along dimension 0 at every grid point.
void BM_AssembleDerivativeCov(benchmark::State& state) {
    const Index g = state.range(0);
    const Matrix grid = maximin_lhs(g, 2, 3).points;
    std::vector<Coordinate> layout;
    for (Index i = 0; i < g; ++i) {
        layout.push_back(Coordinate::value(grid.row(i).transpose()));
        layout.push_back(Coordinate::derivative(grid.row(i).transpose(), 0, 1));
        layout.push_back(Coordinate::derivative(grid.row(i).transpose(), 0, 2));
    }
    const HyperParams t = theta(2);
    for (auto _ : state) benchmark::DoNotOptimize(assemble_cov_matrix(layout, t));
    state.SetComplexityN(3 * g);
}
BENCHMARK(BM_AssembleDerivativeCov)->RangeMultiplier(2)->Range(16, 256)->Complexity(benchmark::oNSquared);

void BM_MarginalLoglik(benchmark::State& state) {
    const Dataset data = quadratic_data(state.range(0), 2);
    const HyperParams t = theta(2);
    for (auto _ : state) benchmark::DoNotOptimize(marginal_loglik(t, data));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MarginalLoglik)->RangeMultiplier(2)->Range(8, 128)->Complexity(benchmark::oNCubed);

void BM_FitHyperparams(benchmark::State& state) {
    const Dataset data = quadratic_data(state.range(0), 2);
    for (auto _ : state) benchmark::DoNotOptimize(fit_hyperparams(data, PriorConfig{}, 5000, 1000, 1));
}
BENCHMARK(BM_FitHyperparams)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_TmvnOrthant(benchmark::State& state) {
    const Index d = state.range(0);
    Matrix cov = Matrix::Constant(d, d, 0.5);
    cov.diagonal().setOnes();
    const Vector lo = Vector::Zero(d);
    const Vector hi = Vector::Constant(d, std::numeric_limits<double>::infinity());
    for (auto _ : state) benchmark::DoNotOptimize(sample_tmvn(Vector::Zero(d), cov, lo, hi, 200, 5));
}
BENCHMARK(BM_TmvnOrthant)->Arg(10)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_PredictConstrained(benchmark::State& state) {
    const auto shape = static_cast<Shape>(state.range(0));
    Surrogate s;
    s.data = quadratic_data(8, 1);
    s.theta = theta(1);
    s.spec = ConstraintSpec{{shape}, 50, {}};
    s.spec.grid = enforcement_grid(maximin_lhs(50, 1, 2).points, s.data.points);
    const Matrix candidates = maximin_lhs(128, 1, 4, 1).points;
    for (auto _ : state) benchmark::DoNotOptimize(predict(s, candidates, 200, 1, 20000));
}
BENCHMARK(BM_PredictConstrained)
    ->Arg(static_cast<int>(Shape::Convex))
    ->Arg(static_cast<int>(Shape::Quasiconvex))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
