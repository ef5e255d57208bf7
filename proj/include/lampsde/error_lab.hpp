#pragma once

#include "lampsde/brownian.hpp"
#include "lampsde/implicit_step.hpp"
#include "lampsde/model.hpp"
#include "lampsde/schemes.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace lampsde {

// Error metrics are E|.|^p (no p-th root), so an order-one scheme shows a
// log-log slope of p.
enum class ErrorMetric { EndpointLp, MaxGridLp, MilsteinL1Grid, MilsteinSupL2 };

std::string_view to_string(ErrorMetric m);
ErrorMetric error_metric_from_string(std::string_view name);

struct MonteCarloOptions {
    double horizon = 1.0;
    std::size_t n_paths = 1000;
    std::uint64_t stream = 1;
    int workers = 1;
    StepSolverConfig solver;
};

struct ErrorEstimate {
    double dt = 0.0;
    ErrorMetric metric = ErrorMetric::EndpointLp;
    double p = 2.0;
    double value = 0.0;
    std::size_t n_paths = 0;
    double std_error = 0.0;
    bool outside_regime = false;  // p above the model's proven threshold
};

struct ConvergenceReport {
    std::vector<ErrorEstimate> estimates;  // sorted by dt
    double slope = 0.0;
    double log_c = 0.0;
    double residual = 0.0;      // sum of squared log residuals
    double residual_rms = 0.0;  // sqrt(residual / n)
};

/// Strong error of `scheme` at dt_coarse against the same scheme at dt_fine,
/// on coupled paths (coarse increments are sums of fine ones).
/// Throws InadmissibleStep, or std::invalid_argument for a non-dyadic ratio.
ErrorEstimate estimate_strong_error(const ModelSpec& spec, SchemeId scheme, double dt_coarse, double dt_fine,
                                    ErrorMetric metric, double p, const MonteCarloOptions& opts);

/// As estimate_strong_error for several coarse step sizes, sharing one
/// reference run per path.
std::vector<ErrorEstimate> estimate_strong_error_ladder(const ModelSpec& spec, SchemeId scheme,
                                                        std::span<const double> dt_coarse, double dt_fine,
                                                        ErrorMetric metric, double p,
                                                        const MonteCarloOptions& opts);

/// Least squares fit log e = log C + q log dt. Needs >= 3 positive estimates.
ConvergenceReport fit_convergence(std::vector<ErrorEstimate> estimates);

struct MilsteinGap {
    double dt;
    double l1_grid_gap;  // sup_k E|Z_k - Y_k|
    double l1_grid_gap_std_error;
    double sup_l2_gap;   // E sup_k |y_ref(t_k) - Z_k|^2
    double sup_l2_gap_std_error;
};

struct MilsteinComparison {
    std::vector<MilsteinGap> gaps;  // sorted by dt
    double l1_slope = 0.0;
    double sup_l2_slope = 0.0;
    double ratio_kappa_theta_sigma2 = 0.0;
    bool in_guaranteed_regime = false;  // kappa theta / sigma^2 > 3/2
    double dt_reference = 0.0;
};

/// Milstein vs LBE for CIR on coupled paths. The reference y_ref is LBE at
/// dt_reference. Throws InvalidParams.
MilsteinComparison compare_milstein_lbe(const CIRParams& params, double y0, std::span<const double> dts,
                                        double dt_reference, const MonteCarloOptions& opts);

enum class MomentRegime { Finite, OutsideRegime, Unknown };
std::string_view to_string(MomentRegime r);

/// Finiteness of sup_k E|state_k|^q as established for the model and scheme.
MomentRegime moment_regime(const ModelSpec& spec, SchemeId scheme, double q);

struct MomentEstimate {
    double q;
    double value;  // E max_k |state_k|^q
    double std_error;
    double sup_of_mean;  // max_k E|state_k|^q
    double sup_of_mean_std_error;
    MomentRegime regime;
};

/// Empirical E max_k |state_k|^q and max_k E|state_k|^q over the grid for
/// each q; scheme is BemTransformed, Lbe or (CIR) MilsteinCir.
std::vector<MomentEstimate> moment_monitor(const ModelSpec& spec, SchemeId scheme, double dt,
                                           std::span<const double> qs, const MonteCarloOptions& opts);

struct SampleStats {
    double mean;
    double std_error;
};

/// Mean and standard error (sample std / sqrt n), summed in index order.
SampleStats sample_stats(std::span<const double> xs);

// Report output.
void write_report_csv(const ConvergenceReport& report, const std::filesystem::path& file);
void write_report_json(const ConvergenceReport& report, const ModelSpec& spec, SchemeId scheme,
                       const std::filesystem::path& file);
void write_loglog_csv(const ConvergenceReport& report, const std::filesystem::path& file);
void write_comparison_csv(const MilsteinComparison& cmp, const std::filesystem::path& file);
void write_comparison_json(const MilsteinComparison& cmp, const std::filesystem::path& file);

}  // namespace lampsde
