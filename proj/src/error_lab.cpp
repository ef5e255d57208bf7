#include "lampsde/error_lab.hpp"

#include "lampsde/errors.hpp"
#include "lampsde/lamperti.hpp"
#include "lampsde/mc_kernels.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace lampsde {

std::string_view to_string(ErrorMetric m) {
    switch (m) {
        case ErrorMetric::EndpointLp: return "endpoint";
        case ErrorMetric::MaxGridLp: return "max-grid";
        case ErrorMetric::MilsteinL1Grid: return "milstein-l1-grid";
        case ErrorMetric::MilsteinSupL2: return "milstein-sup-l2";
    }
    return "?";
}

ErrorMetric error_metric_from_string(std::string_view name) {
    for (ErrorMetric m : {ErrorMetric::EndpointLp, ErrorMetric::MaxGridLp, ErrorMetric::MilsteinL1Grid,
                          ErrorMetric::MilsteinSupL2})
        if (name == to_string(m)) return m;
    throw ConfigError("unknown error metric '" + std::string(name) + "'");
}

std::string_view to_string(MomentRegime r) {
    switch (r) {
        case MomentRegime::Finite: return "finite";
        case MomentRegime::OutsideRegime: return "outside-regime";
        case MomentRegime::Unknown: return "unknown";
    }
    return "?";
}

SampleStats sample_stats(std::span<const double> xs) {
    if (xs.empty()) return {0.0, 0.0};
    double n = static_cast<double>(xs.size());
    double sum = 0.0;
    for (double x : xs) sum += x;
    double mean = sum / n;
    if (xs.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

namespace {

// Power-of-two ratio dt_coarse / dt_fine.
std::size_t dyadic_factor(double dt_coarse, double dt_fine) {
    if (!(dt_fine > 0.0) || !(dt_coarse > 0.0)) throw std::invalid_argument("step sizes must be positive");
    double ratio = dt_coarse / dt_fine;
    double r = std::nearbyint(ratio);
    if (r < 1.0 || r * dt_fine != dt_coarse || r > 0x1p40)
        throw std::invalid_argument("coarse step is not an integer multiple of the fine step");
    auto f = static_cast<std::size_t>(r);
    if ((f & (f - 1)) != 0) throw std::invalid_argument("coarse/fine step ratio is not a power of two");
    return f;
}

std::vector<double> simulate_states(const ModelSpec& spec, const TransformedModel& tm, SchemeId scheme,
                                    const BrownianPath& path, const StepSolverConfig& cfg) {
    switch (scheme) {
        case SchemeId::BemTransformed: return run_bem(tm, path, cfg).states;
        case SchemeId::Lbe: return run_lbe(tm, path, cfg).states;
        case SchemeId::MilsteinCir: {
            if (spec.id() != ModelId::CIR) throw ConfigError("the Milstein scheme is implemented for CIR only");
            return run_milstein_cir(spec.as<CIRParams>(), path, spec.initial_value()).states;
        }
        case SchemeId::ExplicitEm: {
            auto r = run_explicit_em(spec, path);
            if (auto* v = std::get_if<DomainViolation>(&r)) {
                std::ostringstream os;
                os << "explicit Euler left the domain at step " << v->step << " (value " << v->value << ")";
                throw DomainError(os.str(), v->step);
            }
            return std::get<SchemeRun>(std::move(r)).states;
        }
    }
    return {};
}

void check_admissible(const TransformedModel& tm, SchemeId scheme, double dt, const StepSolverConfig& cfg) {
    if (scheme != SchemeId::BemTransformed && scheme != SchemeId::Lbe) return;
    if (!admissible_step(tm.one_sided_lipschitz(), dt, cfg.eta)) {
        std::ostringstream os;
        os << "dt = " << dt << " violates 2 K dt < eta (K = " << tm.one_sided_lipschitz() << ")";
        throw InadmissibleStep(os.str());
    }
}

double path_error(std::span<const double> ref, std::size_t factor, std::span<const double> approx,
                  ErrorMetric metric, double p) {
    if (metric == ErrorMetric::EndpointLp) return std::pow(std::abs(ref.back() - approx.back()), p);
    if (metric != ErrorMetric::MaxGridLp)
        throw std::invalid_argument("metric is only available through compare_milstein_lbe");
    double worst = 0.0;
    for (std::size_t j = 0; j < approx.size(); ++j) worst = std::max(worst, std::abs(ref[j * factor] - approx[j]));
    return std::pow(worst, p);
}

struct PowerFit {
    double slope, log_c, residual;
};

PowerFit fit_power_law(std::span<const double> dts, std::span<const double> values) {
    std::size_t n = dts.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        lx[i] = std::log(dts[i]);
        ly[i] = std::log(values[i]);
    }
    double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(n);
    double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("step sizes must not all coincide");
    PowerFit fit{sxy / sxx, 0.0, 0.0};
    fit.log_c = my - fit.slope * mx;
    for (std::size_t i = 0; i < n; ++i) {
        double r = ly[i] - fit.log_c - fit.slope * lx[i];
        fit.residual += r * r;
    }
    return fit;
}

}  // namespace

std::vector<ErrorEstimate> estimate_strong_error_ladder(const ModelSpec& spec, SchemeId scheme,
                                                        std::span<const double> dt_coarse, double dt_fine,
                                                        ErrorMetric metric, double p,
                                                        const MonteCarloOptions& opts) {
    if (metric != ErrorMetric::EndpointLp && metric != ErrorMetric::MaxGridLp)
        throw std::invalid_argument("estimate_strong_error supports the endpoint and max-grid metrics");
    if (!(p >= 1.0)) throw std::invalid_argument("p must be at least 1");
    if (dt_coarse.empty()) return {};
    const TransformedModel tm = transform(spec);
    const GridSpec fine = GridSpec::make(opts.horizon, dt_fine);
    std::vector<std::size_t> factors;
    for (double dt : dt_coarse) {
        std::size_t f = dyadic_factor(dt, dt_fine);
        if (fine.n_steps % f != 0) throw std::invalid_argument("coarse step does not divide the horizon grid");
        check_admissible(tm, scheme, dt, opts.solver);
        factors.push_back(f);
    }
    check_admissible(tm, scheme, dt_fine, opts.solver);
    const bool outside = outside_guaranteed_regime(spec, p);

    std::vector<std::vector<double>> errors(factors.size(), std::vector<double>(opts.n_paths));
    mc::map_reduce_ordered<std::vector<double>>(
        opts.n_paths, opts.workers,
        [&](std::size_t i) {
            BrownianPath path = sample_path(fine, {opts.stream, i});
            std::vector<double> ref = simulate_states(spec, tm, scheme, path, opts.solver);
            std::vector<double> row(factors.size());
            for (std::size_t l = 0; l < factors.size(); ++l) {
                if (factors[l] == 1) {
                    row[l] = path_error(ref, 1, ref, metric, p);
                    continue;
                }
                std::vector<double> approx =
                    simulate_states(spec, tm, scheme, coarsen(path, factors[l]), opts.solver);
                row[l] = path_error(ref, factors[l], approx, metric, p);
            }
            return row;
        },
        [&](std::size_t i, const std::vector<double>& row) {
            for (std::size_t l = 0; l < row.size(); ++l) errors[l][i] = row[l];
        });

    std::vector<ErrorEstimate> out;
    for (std::size_t l = 0; l < factors.size(); ++l) {
        SampleStats s = sample_stats(errors[l]);
        out.push_back({dt_coarse[l], metric, p, s.mean, opts.n_paths, s.std_error, outside});
    }
    return out;
}

ErrorEstimate estimate_strong_error(const ModelSpec& spec, SchemeId scheme, double dt_coarse, double dt_fine,
                                    ErrorMetric metric, double p, const MonteCarloOptions& opts) {
    double dts[] = {dt_coarse};
    return estimate_strong_error_ladder(spec, scheme, dts, dt_fine, metric, p, opts).front();
}

ConvergenceReport fit_convergence(std::vector<ErrorEstimate> estimates) {
    if (estimates.size() < 3) throw std::invalid_argument("a convergence fit needs at least 3 step sizes");
    std::sort(estimates.begin(), estimates.end(),
              [](const ErrorEstimate& a, const ErrorEstimate& b) { return a.dt < b.dt; });
    std::vector<double> dts, vals;
    for (const auto& e : estimates) {
        if (!(e.value > 0.0) || !std::isfinite(e.value))
            throw std::invalid_argument("degenerate error estimate (non-positive) in convergence fit");
        dts.push_back(e.dt);
        vals.push_back(e.value);
    }
    PowerFit fit = fit_power_law(dts, vals);
    ConvergenceReport rep;
    rep.estimates = std::move(estimates);
    rep.slope = fit.slope;
    rep.log_c = fit.log_c;
    rep.residual = fit.residual;
    rep.residual_rms = std::sqrt(fit.residual / static_cast<double>(dts.size()));
    return rep;
}

MilsteinComparison compare_milstein_lbe(const CIRParams& params, double y0, std::span<const double> dts,
                                        double dt_reference, const MonteCarloOptions& opts) {
    const ModelSpec spec(params, y0);
    const TransformedModel tm = transform(spec);  // validates
    const GridSpec fine = GridSpec::make(opts.horizon, dt_reference);

    std::vector<double> ladder(dts.begin(), dts.end());
    std::sort(ladder.begin(), ladder.end());
    std::vector<std::size_t> factors;
    for (double dt : ladder) {
        std::size_t f = dyadic_factor(dt, dt_reference);
        if (fine.n_steps % f != 0) throw std::invalid_argument("ladder step does not divide the horizon grid");
        factors.push_back(f);
    }

    struct Row {
        std::vector<std::vector<double>> gap;  // per level, |Z_k - Y_k| for each k
        std::vector<double> sup_sq;            // per level, sup_k |y_ref - Z_k|^2
    };
    const std::size_t levels = factors.size();
    std::vector<std::vector<double>> gap_sum(levels), gap_sumsq(levels);
    for (std::size_t l = 0; l < levels; ++l) {
        gap_sum[l].assign(fine.n_steps / factors[l] + 1, 0.0);
        gap_sumsq[l].assign(fine.n_steps / factors[l] + 1, 0.0);
    }
    std::vector<std::vector<double>> sup_sq(levels, std::vector<double>(opts.n_paths));

    mc::map_reduce_ordered<Row>(
        opts.n_paths, opts.workers,
        [&](std::size_t i) {
            BrownianPath path = sample_path(fine, {opts.stream, i});
            std::vector<double> ref = run_lbe(tm, path, opts.solver).states;
            Row row;
            for (std::size_t l = 0; l < levels; ++l) {
                BrownianPath coarse = factors[l] == 1 ? path : coarsen(path, factors[l]);
                std::vector<double> y = run_lbe(tm, coarse, opts.solver).states;
                std::vector<double> z = run_milstein_cir(params, coarse, y0).states;
                std::vector<double> g(z.size());
                double worst = 0.0;
                for (std::size_t k = 0; k < z.size(); ++k) {
                    g[k] = std::abs(z[k] - y[k]);
                    worst = std::max(worst, std::abs(ref[k * factors[l]] - z[k]));
                }
                row.gap.push_back(std::move(g));
                row.sup_sq.push_back(worst * worst);
            }
            return row;
        },
        [&](std::size_t i, const Row& row) {
            for (std::size_t l = 0; l < levels; ++l) {
                for (std::size_t k = 0; k < row.gap[l].size(); ++k) {
                    gap_sum[l][k] += row.gap[l][k];
                    gap_sumsq[l][k] += row.gap[l][k] * row.gap[l][k];
                }
                sup_sq[l][i] = row.sup_sq[l];
            }
        });

    MilsteinComparison cmp;
    cmp.dt_reference = dt_reference;
    cmp.ratio_kappa_theta_sigma2 = params.kappa * params.theta / (params.sigma * params.sigma);
    cmp.in_guaranteed_regime = cmp.ratio_kappa_theta_sigma2 > 1.5;
    const double n = static_cast<double>(opts.n_paths);
    for (std::size_t l = 0; l < levels; ++l) {
        std::size_t arg = 0;
        for (std::size_t k = 1; k < gap_sum[l].size(); ++k)
            if (gap_sum[l][k] > gap_sum[l][arg]) arg = k;
        double mean = gap_sum[l][arg] / n;
        double var = n > 1 ? std::max(0.0, (gap_sumsq[l][arg] - n * mean * mean) / (n - 1.0)) : 0.0;
        SampleStats s = sample_stats(sup_sq[l]);
        cmp.gaps.push_back({ladder[l], mean, std::sqrt(var / n), s.mean, s.std_error});
    }
    if (levels >= 2) {
        std::vector<double> d, a, b;
        for (const auto& g : cmp.gaps) {
            d.push_back(g.dt);
            a.push_back(g.l1_grid_gap);
            b.push_back(g.sup_l2_gap);
        }
        if (std::all_of(a.begin(), a.end(), [](double v) { return v > 0.0; })) cmp.l1_slope = fit_power_law(d, a).slope;
        if (std::all_of(b.begin(), b.end(), [](double v) { return v > 0.0; }))
            cmp.sup_l2_slope = fit_power_law(d, b).slope;
    }
    return cmp;
}

MomentRegime moment_regime(const ModelSpec& spec, SchemeId scheme, double q) {
    if (q == 0.0) return MomentRegime::Finite;
    const bool transformed = scheme == SchemeId::BemTransformed;
    auto cir_like = [&](double feller_ratio, double y_order) {
        return y_order > -feller_ratio ? MomentRegime::Finite : MomentRegime::OutsideRegime;
    };
    switch (spec.id()) {
        case ModelId::CIR: {
            double ratio = spec.as<CIRParams>().feller_ratio();
            return cir_like(ratio, transformed ? 0.5 * q : q);
        }
        case ModelId::Heston32: {
            const auto& p = spec.as<Heston32Params>();
            double ratio = p.induced_cir().feller_ratio();
            if (transformed) return cir_like(ratio, 0.5 * q);
            // y = 1/v with v the induced CIR process.
            return q < 2.0 + 2.0 * p.c1 / (p.c3 * p.c3) ? MomentRegime::Finite : MomentRegime::OutsideRegime;
        }
        case ModelId::CEV: return MomentRegime::Finite;
        case ModelId::WrightFisher: {
            if (q > 0.0) return MomentRegime::Finite;
            const auto& p = spec.as<WrightFisherParams>();
            double ratio = 2.0 * p.a / (p.gamma * p.gamma);
            return cir_like(ratio, transformed ? 0.5 * q : q);
        }
        case ModelId::AitSahalia: {
            const auto& p = spec.as<AitSahaliaParams>();
            // Positive transformed moments always exist; inverse moments of x
            // are established only away from the critical case.
            bool needs_inverse = transformed ? q < 0.0 : q > 0.0;
            if (!needs_inverse || !p.is_critical()) return MomentRegime::Finite;
            return MomentRegime::Unknown;
        }
    }
    return MomentRegime::Unknown;
}

std::vector<MomentEstimate> moment_monitor(const ModelSpec& spec, SchemeId scheme, double dt,
                                           std::span<const double> qs, const MonteCarloOptions& opts) {
    if (scheme == SchemeId::ExplicitEm) throw std::invalid_argument("moment monitor needs a domain-preserving scheme");
    const TransformedModel tm = transform(spec);
    const GridSpec grid = GridSpec::make(opts.horizon, dt);
    check_admissible(tm, scheme, dt, opts.solver);
    const std::size_t nq = qs.size(), nk = grid.n_steps + 1;
    std::vector<std::vector<double>> samples(nq, std::vector<double>(opts.n_paths));
    std::vector<std::vector<double>> k_sum(nq, std::vector<double>(nk, 0.0)), k_sumsq = k_sum;

    auto moment = [](double x, double q) { return q == 0.0 ? 1.0 : std::pow(std::abs(x), q); };
    mc::map_reduce_ordered<std::vector<double>>(
        opts.n_paths, opts.workers,
        [&](std::size_t i) { return simulate_states(spec, tm, scheme, sample_path(grid, {opts.stream, i}), opts.solver); },
        [&](std::size_t i, const std::vector<double>& states) {
            for (std::size_t j = 0; j < nq; ++j) {
                double worst = 0.0;
                for (std::size_t k = 0; k < nk; ++k) {
                    double v = moment(states[k], qs[j]);
                    worst = std::max(worst, v);
                    k_sum[j][k] += v;
                    k_sumsq[j][k] += v * v;
                }
                samples[j][i] = worst;
            }
        });

    const double n = static_cast<double>(opts.n_paths);
    std::vector<MomentEstimate> out;
    for (std::size_t j = 0; j < nq; ++j) {
        SampleStats s = sample_stats(samples[j]);
        std::size_t arg = static_cast<std::size_t>(
            std::max_element(k_sum[j].begin(), k_sum[j].end()) - k_sum[j].begin());
        double mean = k_sum[j][arg] / n;
        double var = n > 1 ? std::max(0.0, (k_sumsq[j][arg] - n * mean * mean) / (n - 1.0)) : 0.0;
        out.push_back({qs[j], s.mean, s.std_error, mean, std::sqrt(var / n), moment_regime(spec, scheme, qs[j])});
    }
    return out;
}

namespace {

std::ofstream open_out(const std::filesystem::path& file) {
    std::ofstream os(file);
    if (!os) throw IoError("cannot open " + file.string() + " for writing");
    os << std::setprecision(17);
    return os;
}

void finish(std::ofstream& os, const std::filesystem::path& file) {
    os.flush();
    if (!os) throw IoError("write failed for " + file.string());
}

nlohmann::json finite_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

}  // namespace

void write_report_csv(const ConvergenceReport& report, const std::filesystem::path& file) {
    auto os = open_out(file);
    os << "dt,metric,p,value,std_error\n";
    for (const auto& e : report.estimates)
        os << e.dt << ',' << to_string(e.metric) << ',' << e.p << ',' << e.value << ',' << e.std_error << '\n';
    finish(os, file);
}

void write_loglog_csv(const ConvergenceReport& report, const std::filesystem::path& file) {
    auto os = open_out(file);
    os << "log_dt,log_value,log_fit\n";
    for (const auto& e : report.estimates) {
        double lx = std::log(e.dt);
        os << lx << ',' << std::log(e.value) << ',' << report.log_c + report.slope * lx << '\n';
    }
    finish(os, file);
}

void write_report_json(const ConvergenceReport& report, const ModelSpec& spec, SchemeId scheme,
                       const std::filesystem::path& file) {
    nlohmann::json j;
    j["model"] = std::string(to_string(spec.id()));
    j["scheme"] = std::string(to_string(scheme));
    j["max_strong_order_p"] = finite_or_null(max_strong_order_p(spec));
    j["slope"] = report.slope;
    j["log_c"] = report.log_c;
    j["residual"] = report.residual;
    j["residual_rms"] = report.residual_rms;
    j["estimates"] = nlohmann::json::array();
    for (const auto& e : report.estimates) {
        j["estimates"].push_back({{"dt", e.dt},
                                  {"metric", std::string(to_string(e.metric))},
                                  {"p", e.p},
                                  {"value", e.value},
                                  {"std_error", e.std_error},
                                  {"n_paths", e.n_paths},
                                  {"outside_regime", e.outside_regime}});
    }
    auto os = open_out(file);
    os << j.dump(2) << '\n';
    finish(os, file);
}

void write_comparison_csv(const MilsteinComparison& cmp, const std::filesystem::path& file) {
    auto os = open_out(file);
    os << "dt,l1_grid_gap,l1_grid_gap_std_error,sup_l2_gap,sup_l2_gap_std_error\n";
    for (const auto& g : cmp.gaps)
        os << g.dt << ',' << g.l1_grid_gap << ',' << g.l1_grid_gap_std_error << ',' << g.sup_l2_gap << ','
           << g.sup_l2_gap_std_error << '\n';
    finish(os, file);
}

void write_comparison_json(const MilsteinComparison& cmp, const std::filesystem::path& file) {
    nlohmann::json j;
    j["kappa_theta_over_sigma2"] = cmp.ratio_kappa_theta_sigma2;
    j["in_guaranteed_regime"] = cmp.in_guaranteed_regime;
    j["dt_reference"] = cmp.dt_reference;
    j["l1_slope"] = cmp.l1_slope;
    j["sup_l2_slope"] = cmp.sup_l2_slope;
    j["gaps"] = nlohmann::json::array();
    for (const auto& g : cmp.gaps)
        j["gaps"].push_back({{"dt", g.dt},
                             {"l1_grid_gap", g.l1_grid_gap},
                             {"l1_grid_gap_std_error", g.l1_grid_gap_std_error},
                             {"sup_l2_gap", g.sup_l2_gap},
                             {"sup_l2_gap_std_error", g.sup_l2_gap_std_error}});
    auto os = open_out(file);
    os << j.dump(2) << '\n';
    finish(os, file);
}

}  // namespace lampsde
