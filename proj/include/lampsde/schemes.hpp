#pragma once

#include "lampsde/brownian.hpp"
#include "lampsde/implicit_step.hpp"
#include "lampsde/lamperti.hpp"

#include <cstddef>
#include <filesystem>
#include <string_view>
#include <variant>
#include <vector>

namespace lampsde {

enum class SchemeId { BemTransformed, Lbe, MilsteinCir, ExplicitEm };

std::string_view to_string(SchemeId id);
SchemeId scheme_id_from_string(std::string_view name);

struct RunDiagnostics {
    long long solver_iterations = 0;
    double min_state = kInf;
    double max_state = -kInf;
    std::size_t precision_limit_count = 0;

    void observe(double x) {
        if (x < min_state) min_state = x;
        if (x > max_state) max_state = x;
    }
};

struct SchemeRun {
    SchemeId scheme{};
    GridSpec grid;
    std::vector<double> states;       // grid values, n_steps + 1 entries
    std::vector<double> transformed;  // LBE only: the underlying BEM states
    RunDiagnostics diagnostics;
};

/// One implicit step, closed form when the drift allows it and cfg permits.
StepResult implicit_step(const TransformedModel& tm, double dt, double c, double guess, const StepSolverConfig& cfg);

/// BEM in transformed coordinates driven by `path` (scaled by the model's
/// signed noise coefficient). Throws InadmissibleStep, or SolverError /
/// DomainError naming the failing step.
SchemeRun run_bem(const TransformedModel& tm, const BrownianPath& path, const StepSolverConfig& cfg = {});

/// BEM states at every `stride`-th grid point (stride = n_steps keeps only
/// the endpoints). Used for large Monte Carlo batches.
std::vector<double> run_bem_sampled(const TransformedModel& tm, const BrownianPath& path,
                                    const StepSolverConfig& cfg, std::size_t stride,
                                    RunDiagnostics* diag = nullptr);

/// Back-transformed BEM, Y_k = F^{-1}(X_k).
SchemeRun run_lbe(const TransformedModel& tm, const BrownianPath& path, const StepSolverConfig& cfg = {});
SchemeRun run_lbe(const ModelSpec& spec, const BrownianPath& path, const StepSolverConfig& cfg = {});

/// Drift-implicit Milstein scheme for CIR, started at z0 (default y0 = theta).
SchemeRun run_milstein_cir(const CIRParams& params, const BrownianPath& path, double z0);

struct DomainViolation {
    std::size_t step;  // index of the first state outside the domain
    double value;
    double time;
};

/// Explicit Euler-Maruyama in original coordinates. Stops at the first state
/// that leaves the domain, since the diffusion is undefined there.
std::variant<SchemeRun, DomainViolation> run_explicit_em(const ModelSpec& spec, const BrownianPath& path);

/// Piecewise-linear interpolation of the grid values. Throws std::out_of_range
/// outside [0, T].
double interpolate_linear(const SchemeRun& run, double t);

/// CSV with columns k,t,state[,transformed_state][,milstein].
void write_trajectory_csv(const std::filesystem::path& file, const SchemeRun& run,
                          const SchemeRun* milstein = nullptr);

}  // namespace lampsde
