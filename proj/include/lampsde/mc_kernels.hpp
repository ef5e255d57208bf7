#pragma once

// Path-parallel Monte Carlo loops. Every kernel has a serial reference and an
// OpenMP variant; both write per-path results into slots indexed by path and
// all reductions run serially in path order, so results are bit-identical for
// any worker count.

#include "lampsde/brownian.hpp"
#include "lampsde/implicit_step.hpp"
#include "lampsde/lamperti.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lampsde::mc {

enum class Backend { Serial, OpenMP };

template <class Body>
void for_each_path_serial(std::size_t n, Body&& body) {
    for (std::size_t i = 0; i < n; ++i) body(i);
}

/// Exceptions are captured per path; the one from the lowest path index is
/// rethrown after the parallel region.
template <class Body>
void for_each_path_omp(std::size_t n, int workers, Body&& body) {
#ifdef _OPENMP
    std::vector<std::exception_ptr> errors(n);
    const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 4) num_threads(std::max(1, workers))
    for (std::int64_t i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
#else
    (void)workers;
    for_each_path_serial(n, body);
#endif
}

template <class Body>
void for_each_path(std::size_t n, int workers, Body&& body) {
    if (workers <= 1) for_each_path_serial(n, body);
    else for_each_path_omp(n, workers, body);
}

/// Computes one Row per path in parallel chunks and hands the rows to
/// `consume` in increasing path order.
template <class Row, class Compute, class Consume>
void map_reduce_ordered(std::size_t n, int workers, Compute&& compute, Consume&& consume,
                        std::size_t chunk = 256) {
    std::vector<Row> rows(std::min(chunk, n));
    for (std::size_t start = 0; start < n; start += chunk) {
        std::size_t m = std::min(chunk, n - start);
        for_each_path(m, workers, [&](std::size_t i) { rows[i] = compute(start + i); });
        for (std::size_t i = 0; i < m; ++i) consume(start + i, rows[i]);
    }
}

/// BEM endpoint X_N for paths 0..n_paths-1 of `stream` (transformed coordinates).
std::vector<double> bem_endpoints(const TransformedModel& tm, const GridSpec& grid, std::uint64_t stream,
                                  std::size_t n_paths, const StepSolverConfig& cfg, Backend backend,
                                  int workers = 1);

int available_workers();

}  // namespace lampsde::mc
