#include "lampsde/schemes.hpp"

#include "lampsde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace lampsde {

std::string_view to_string(SchemeId id) {
    switch (id) {
        case SchemeId::BemTransformed: return "bem";
        case SchemeId::Lbe: return "lbe";
        case SchemeId::MilsteinCir: return "milstein";
        case SchemeId::ExplicitEm: return "em";
    }
    return "?";
}

SchemeId scheme_id_from_string(std::string_view name) {
    for (SchemeId id : {SchemeId::BemTransformed, SchemeId::Lbe, SchemeId::MilsteinCir, SchemeId::ExplicitEm})
        if (name == to_string(id)) return id;
    throw ConfigError("unknown scheme id '" + std::string(name) + "'");
}

StepResult implicit_step(const TransformedModel& tm, double dt, double c, double guess,
                         const StepSolverConfig& cfg) {
    if (cfg.use_closed_form && tm.reciprocal_linear())
        return {solve_reciprocal_linear(*tm.reciprocal_linear(), dt, c), 0, false};
    return solve_implicit(tm, dt, c, guess, cfg);
}

namespace {

void require_admissible(const TransformedModel& tm, double dt, const StepSolverConfig& cfg) {
    cfg.validate();
    if (!admissible_step(tm.one_sided_lipschitz(), dt, cfg.eta)) {
        std::ostringstream os;
        os << "dt = " << dt << " violates 2 K dt < eta with K = " << tm.one_sided_lipschitz() << ", eta = " << cfg.eta;
        throw InadmissibleStep(os.str());
    }
}

// Advances the BEM recursion, handing each new state to `emit`.
template <class Emit>
void bem_loop(const TransformedModel& tm, const BrownianPath& path, const StepSolverConfig& cfg,
              RunDiagnostics& diag, Emit&& emit) {
    const double dt = path.grid().dt;
    require_admissible(tm, dt, cfg);
    const double noise = tm.noise_coefficient();
    const Interval d = tm.domain();
    double x = tm.initial_value();
    diag.observe(x);
    emit(std::size_t{0}, x);
    for (std::size_t k = 0; k < path.size(); ++k) {
        double c = x + noise * path[k];
        StepResult r;
        try {
            r = implicit_step(tm, dt, c, x, cfg);
        } catch (const SolverError& e) {
            throw SolverError("step " + std::to_string(k + 1) + ": " + e.what(), e.bracket_lo(), e.bracket_hi());
        }
        if (!d.contains(r.x)) {
            std::ostringstream os;
            os << "BEM state " << r.x << " left the domain at step " << k + 1;
            throw DomainError(os.str(), k + 1);
        }
        x = r.x;
        diag.solver_iterations += r.iterations;
        diag.precision_limit_count += r.at_precision_limit ? 1 : 0;
        diag.observe(x);
        emit(k + 1, x);
    }
}

}  // namespace

SchemeRun run_bem(const TransformedModel& tm, const BrownianPath& path, const StepSolverConfig& cfg) {
    SchemeRun run{SchemeId::BemTransformed, path.grid(), {}, {}, {}};
    run.states.resize(path.size() + 1);
    bem_loop(tm, path, cfg, run.diagnostics, [&](std::size_t k, double x) { run.states[k] = x; });
    return run;
}

std::vector<double> run_bem_sampled(const TransformedModel& tm, const BrownianPath& path,
                                    const StepSolverConfig& cfg, std::size_t stride, RunDiagnostics* diag) {
    if (stride == 0 || path.size() % stride != 0)
        throw std::invalid_argument("sampling stride must divide the step count");
    std::vector<double> out;
    out.reserve(path.size() / stride + 1);
    RunDiagnostics local;
    bem_loop(tm, path, cfg, diag ? *diag : local, [&](std::size_t k, double x) {
        if (k % stride == 0) out.push_back(x);
    });
    return out;
}

SchemeRun run_lbe(const TransformedModel& tm, const BrownianPath& path, const StepSolverConfig& cfg) {
    SchemeRun bem = run_bem(tm, path, cfg);
    SchemeRun run{SchemeId::Lbe, path.grid(), back_transform_path(tm, bem.states), std::move(bem.states),
                  bem.diagnostics};
    run.states[0] = tm.spec().initial_value();
    run.diagnostics.min_state = *std::min_element(run.states.begin(), run.states.end());
    run.diagnostics.max_state = *std::max_element(run.states.begin(), run.states.end());
    return run;
}

SchemeRun run_lbe(const ModelSpec& spec, const BrownianPath& path, const StepSolverConfig& cfg) {
    return run_lbe(transform(spec), path, cfg);
}

SchemeRun run_milstein_cir(const CIRParams& params, const BrownianPath& path, double z0) {
    SchemeRun run{SchemeId::MilsteinCir, path.grid(), {}, {}, {}};
    run.states.resize(path.size() + 1);
    const double dt = path.grid().dt;
    double z = z0;
    run.states[0] = z;
    run.diagnostics.observe(z);
    for (std::size_t k = 0; k < path.size(); ++k) {
        try {
            z = milstein_cir_step(params, dt, z, path[k]);
        } catch (const DomainError& e) {
            throw DomainError(std::string("internal invariant: ") + e.what() + " at step " + std::to_string(k), k);
        }
        run.states[k + 1] = z;
        run.diagnostics.observe(z);
    }
    return run;
}

std::variant<SchemeRun, DomainViolation> run_explicit_em(const ModelSpec& spec, const BrownianPath& path) {
    SchemeRun run{SchemeId::ExplicitEm, path.grid(), {}, {}, {}};
    run.states.reserve(path.size() + 1);
    const double dt = path.grid().dt;
    const Interval d = spec.domain();
    double y = spec.initial_value();
    run.states.push_back(y);
    run.diagnostics.observe(y);
    for (std::size_t k = 0; k < path.size(); ++k) {
        y = y + drift(spec, y) * dt + diffusion(spec, y) * path[k];
        if (!d.contains(y) || !std::isfinite(y)) return DomainViolation{k + 1, y, path.grid().time(k + 1)};
        run.states.push_back(y);
        run.diagnostics.observe(y);
    }
    return run;
}

double interpolate_linear(const SchemeRun& run, double t) {
    const GridSpec& g = run.grid;
    if (!(t >= 0.0 && t <= g.horizon)) throw std::out_of_range("interpolation time outside [0, T]");
    auto k = static_cast<std::size_t>(std::floor(t / g.dt));
    if (k >= g.n_steps) k = g.n_steps - 1;
    double w = (t - g.time(k)) / g.dt;
    double a = run.states[k], b = run.states[k + 1];
    if (w <= 0.0) return a;
    double v = (1.0 - w) * a + w * b;
    return std::clamp(v, std::min(a, b), std::max(a, b));
}

void write_trajectory_csv(const std::filesystem::path& file, const SchemeRun& run, const SchemeRun* milstein) {
    std::ofstream os(file);
    if (!os) throw IoError("cannot open " + file.string() + " for writing");
    bool with_transformed = !run.transformed.empty();
    if (milstein && milstein->states.size() != run.states.size())
        throw std::invalid_argument("Milstein run is on a different grid");
    os << "k,t,state";
    if (with_transformed) os << ",transformed_state";
    if (milstein) os << ",milstein";
    os << '\n' << std::setprecision(17);
    for (std::size_t k = 0; k < run.states.size(); ++k) {
        os << k << ',' << run.grid.time(k) << ',' << run.states[k];
        if (with_transformed) os << ',' << run.transformed[k];
        if (milstein) os << ',' << milstein->states[k];
        os << '\n';
    }
    if (!os) throw IoError("write failed for " + file.string());
}

}  // namespace lampsde
