#include "lampsde/error_lab.hpp"
#include "lampsde/mc_kernels.hpp"

#include <benchmark/benchmark.h>

using namespace lampsde;

namespace {

void BM_BemEndpoints(benchmark::State& state, mc::Backend backend, const ModelSpec& spec) {
    TransformedModel tm = transform(spec);
    GridSpec grid = GridSpec::make(1.0, 0x1p-10);
    const auto n = static_cast<std::size_t>(state.range(0));
    const int workers = backend == mc::Backend::Serial ? 1 : mc::available_workers();
    for (auto _ : state) {
        auto xs = mc::bem_endpoints(tm, grid, 1, n, {}, backend, workers);
        benchmark::DoNotOptimize(xs.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long long>(n));
    state.counters["workers"] = workers;
}

void BM_StrongErrorLadder(benchmark::State& state) {
    auto spec = ModelSpec::with_default_start(CIRParams{});
    MonteCarloOptions o;
    o.n_paths = 256;
    o.workers = static_cast<int>(state.range(0));
    std::vector<double> ladder = {0x1p-8, 0x1p-7, 0x1p-6};
    for (auto _ : state) {
        auto est = estimate_strong_error_ladder(spec, SchemeId::BemTransformed, ladder, 0x1p-12,
                                                ErrorMetric::EndpointLp, 2.0, o);
        benchmark::DoNotOptimize(est.data());
    }
}

const ModelSpec kCir = ModelSpec::with_default_start(CIRParams{});
const ModelSpec kWrightFisher = ModelSpec::with_default_start(WrightFisherParams{});

}  // namespace

BENCHMARK_CAPTURE(BM_BemEndpoints, cir_serial, mc::Backend::Serial, kCir)->Arg(1024);
BENCHMARK_CAPTURE(BM_BemEndpoints, cir_openmp, mc::Backend::OpenMP, kCir)->Arg(1024);
BENCHMARK_CAPTURE(BM_BemEndpoints, wright_fisher_serial, mc::Backend::Serial, kWrightFisher)->Arg(256);
BENCHMARK_CAPTURE(BM_BemEndpoints, wright_fisher_openmp, mc::Backend::OpenMP, kWrightFisher)->Arg(256);
BENCHMARK(BM_StrongErrorLadder)->Arg(1)->Arg(4);

BENCHMARK_MAIN();
