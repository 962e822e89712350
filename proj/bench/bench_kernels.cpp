// Serial reference vs OpenMP path for each kernel. Arg 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include "mmhedge/datagen.hpp"
#include "mmhedge/dynamics.hpp"
#include "mmhedge/kernels.hpp"

using namespace mmhedge;
using kernels::Exec;

namespace {

Exec exec_of(const benchmark::State& st) { return st.range(0) ? Exec::Parallel : Exec::Serial; }

void BM_PriceLatticeDays(benchmark::State& st) {
    const auto L = default_lattice();
    std::vector<HestonParams> days(32);
    for (std::size_t i = 0; i < days.size(); ++i) days[i].v0 = 0.02 + 0.002 * static_cast<double>(i);
    for (auto _ : st) benchmark::DoNotOptimize(kernels::price_lattice_days(days, *L, exec_of(st)));
    st.SetItemsProcessed(st.iterations() * static_cast<long>(days.size()));
}
BENCHMARK(BM_PriceLatticeDays)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SimulatePaths(benchmark::State& st) {
    Eigen::Matrix3d s;
    s << 0.2, 0, 0, -0.05, 0.1, 0, 0.01, 0.02, 0.03;
    const ConstantSde model(Eigen::Vector3d(0.05, 0.0, 0.0), s);
    const Eigen::Vector3d x0(std::log(100.0), 0.0, 0.0);
    for (auto _ : st) benchmark::DoNotOptimize(kernels::simulate_paths(model, x0, 252, 256, 1, {}, exec_of(st)));
    st.SetItemsProcessed(st.iterations() * 256);
}
BENCHMARK(BM_SimulatePaths)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_HestonCovarianceRatio(benchmark::State& st) {
    HestonParams p;
    for (auto _ : st) benchmark::DoNotOptimize(kernels::heston_covariance_ratio(p, 0.5, 0.0, 100'000, 1e-4, 7, exec_of(st)));
    st.SetItemsProcessed(st.iterations() * 100'000);
}
BENCHMARK(BM_HestonCovarianceRatio)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
