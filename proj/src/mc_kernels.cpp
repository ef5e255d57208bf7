#include "lampsde/mc_kernels.hpp"

#include "lampsde/schemes.hpp"

namespace lampsde::mc {

std::vector<double> bem_endpoints(const TransformedModel& tm, const GridSpec& grid, std::uint64_t stream,
                                  std::size_t n_paths, const StepSolverConfig& cfg, Backend backend,
                                  int workers) {
    std::vector<double> out(n_paths);
    auto body = [&](std::size_t i) {
        BrownianPath path = sample_path(grid, {stream, i});
        out[i] = run_bem_sampled(tm, path, cfg, grid.n_steps).back();
    };
    if (backend == Backend::Serial) for_each_path_serial(n_paths, body);
    else for_each_path_omp(n_paths, workers, body);
    return out;
}

int available_workers() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace lampsde::mc
