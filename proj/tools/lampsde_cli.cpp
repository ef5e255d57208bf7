#include "lampsde/brownian.hpp"
#include "lampsde/config.hpp"
#include "lampsde/error_lab.hpp"
#include "lampsde/errors.hpp"
#include "lampsde/lamperti.hpp"
#include "lampsde/model.hpp"
#include "lampsde/schemes.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace lampsde;

namespace {

enum Exit : int {
    kOk = 0,
    kFailed = 1,
    kConfigInvalid = 2,
    kInadmissibleStep = 3,
    kSolverFailure = 4,
    kIoFailure = 5,
};

struct CommonOptions {
    std::string config_file;
    std::vector<std::string> overrides;
    std::optional<int> workers;
    std::optional<std::size_t> paths;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

ExperimentConfig load(const CommonOptions& o) {
    ConfigDocument doc = o.config_file.empty() ? ConfigDocument::parse("", "<defaults>")
                                               : ConfigDocument::load(o.config_file);
    for (const auto& a : o.overrides) doc.set_assignment(a);
    ExperimentConfig cfg = interpret(doc);
    if (o.workers) cfg.workers = *o.workers;
    if (o.paths) cfg.n_paths = *o.paths;
    if (o.seed) cfg.stream = *o.seed;
    if (o.out) cfg.output_dir = *o.out;
    return cfg;
}

fs::path output_dir(const ExperimentConfig& cfg) {
    fs::path dir;
    if (cfg.output_dir) dir = *cfg.output_dir;
    else if (const char* env = std::getenv("LAMPSDE_OUTPUT_DIR"); env && *env) dir = env;
    else dir = "lampsde-out";
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

void print_model(const ModelSpec& spec) {
    std::cout << "model " << to_string(spec.id()) << ", y0 = " << spec.initial_value() << '\n';
}

void print_threshold(const ModelSpec& spec) {
    double p = max_strong_order_p(spec);
    if (std::isinf(p)) std::cout << "order-one strong convergence for every p >= 1\n";
    else std::cout << "order-one strong convergence for p < " << std::setprecision(17) << p << '\n';
}

int cmd_check(const ExperimentConfig& cfg) {
    ModelSpec spec = cfg.model_spec();
    print_model(spec);
    ValidityReport rep = validate_params(spec);
    for (const auto& n : rep.notes) std::cout << "  " << n << '\n';
    for (const auto& v : rep.violations) std::cout << "  violated: " << v.condition << ", slack " << v.slack << '\n';
    if (!rep.valid) {
        std::cout << "invalid\n";
        return kConfigInvalid;
    }
    print_threshold(spec);
    TransformedModel tm = transform(spec);
    std::cout << "one-sided Lipschitz constant K = " << tm.one_sided_lipschitz() << '\n';
    for (double dt : {cfg.dt, cfg.dt_ref}) {
        if (!admissible_step(tm.one_sided_lipschitz(), dt, cfg.solver.eta))
            std::cout << "  warning: dt = " << dt << " violates 2 K dt < eta\n";
    }
    std::cout << "valid\n";
    return kOk;
}

int cmd_simulate(const ExperimentConfig& cfg, std::size_t n_paths, bool dump_increments) {
    ModelSpec spec = cfg.model_spec();
    TransformedModel tm = transform(spec);
    GridSpec grid = GridSpec::make(cfg.horizon, cfg.dt);
    fs::path dir = output_dir(cfg);
    print_model(spec);
    for (std::size_t i = 0; i < n_paths; ++i) {
        BrownianPath path = sample_path(grid, {cfg.stream, i});
        std::optional<SchemeRun> milstein;
        SchemeRun run = [&] {
            switch (cfg.scheme) {
                case SchemeId::BemTransformed: return run_bem(tm, path, cfg.solver);
                case SchemeId::Lbe: return run_lbe(tm, path, cfg.solver);
                case SchemeId::MilsteinCir:
                    if (spec.id() != ModelId::CIR) throw ConfigError("scheme milstein requires model CIR");
                    return run_milstein_cir(spec.as<CIRParams>(), path, spec.initial_value());
                case SchemeId::ExplicitEm: break;
            }
            auto r = run_explicit_em(spec, path);
            if (auto* v = std::get_if<DomainViolation>(&r)) {
                std::ostringstream os;
                os << "path " << i << ": explicit Euler left the domain at step " << v->step << " (t = " << v->time
                   << ", value " << v->value << ")";
                throw DomainError(os.str(), v->step);
            }
            return std::get<SchemeRun>(std::move(r));
        }();
        if (cfg.scheme == SchemeId::Lbe && spec.id() == ModelId::CIR)
            milstein = run_milstein_cir(spec.as<CIRParams>(), path, spec.initial_value());

        std::string stem = "trajectory_" + std::string(to_string(cfg.scheme)) + "_" + std::to_string(i);
        write_trajectory_csv(dir / (stem + ".csv"), run, milstein ? &*milstein : nullptr);
        if (dump_increments) write_increments_binary(path, dir / ("increments_" + std::to_string(i) + ".lsdw"));
        std::cout << "path " << i << ": " << run.states.size() << " rows, state in [" << run.diagnostics.min_state
                  << ", " << run.diagnostics.max_state << "]";
        if (run.diagnostics.solver_iterations > 0)
            std::cout << ", " << run.diagnostics.solver_iterations << " solver iterations";
        std::cout << '\n';
    }
    std::cout << "wrote " << n_paths << " trajectories to " << dir.string() << '\n';
    return kOk;
}

void emit_report(const ExperimentConfig& cfg, const ConvergenceReport& rep, const ModelSpec& spec) {
    fs::path dir = output_dir(cfg);
    std::cout << std::setprecision(6);
    std::cout << "dt, value, std_error\n";
    for (const auto& e : rep.estimates) {
        std::cout << "  " << e.dt << ", " << e.value << ", " << e.std_error;
        if (e.outside_regime) std::cout << "  (outside guaranteed regime)";
        std::cout << '\n';
    }
    std::cout << std::setprecision(17) << "slope q = " << rep.slope << "\nlog C = " << rep.log_c
              << "\nresidual (sum of squares) = " << rep.residual << "\nresidual (rms) = " << rep.residual_rms
              << '\n';
    if (cfg.wants_format("csv")) {
        write_report_csv(rep, dir / "convergence.csv");
        write_loglog_csv(rep, dir / "convergence_loglog.csv");
    }
    if (cfg.wants_format("json")) write_report_json(rep, spec, cfg.scheme, dir / "convergence.json");
}

int cmd_converge(const ExperimentConfig& cfg, std::optional<double> synthetic_order, double synthetic_c) {
    ModelSpec spec = cfg.model_spec();
    if (synthetic_order) {
        std::vector<ErrorEstimate> est;
        for (double dt : cfg.ladder)
            est.push_back({dt, cfg.metric, cfg.p, synthetic_c * std::pow(dt, *synthetic_order), 0, 0.0, false});
        std::cout << "synthetic power law e = " << synthetic_c << " dt^" << *synthetic_order << '\n';
        emit_report(cfg, fit_convergence(std::move(est)), spec);
        return kOk;
    }
    print_model(spec);
    print_threshold(spec);
    auto est = estimate_strong_error_ladder(spec, cfg.scheme, cfg.ladder, cfg.dt_ref, cfg.metric, cfg.p,
                                            cfg.mc_options());
    std::cout << cfg.n_paths << " paths, metric " << to_string(cfg.metric) << ", p = " << cfg.p
              << ", reference dt = " << cfg.dt_ref << '\n';
    emit_report(cfg, fit_convergence(std::move(est)), spec);
    return kOk;
}

int cmd_compare(const ExperimentConfig& cfg) {
    ModelSpec spec = cfg.model_spec();
    if (spec.id() != ModelId::CIR) throw ConfigError("compare requires model CIR");
    print_model(spec);
    MilsteinComparison cmp =
        compare_milstein_lbe(spec.as<CIRParams>(), spec.initial_value(), cfg.ladder, cfg.dt_ref, cfg.mc_options());
    std::cout << "kappa*theta/sigma^2 = " << cmp.ratio_kappa_theta_sigma2;
    if (!cmp.in_guaranteed_regime) std::cout << "  (warning: rate guarantee needs kappa*theta/sigma^2 > 3/2)";
    std::cout << "\ndt, sup_k E|Z_k - Y_k|, E sup_k |y_ref - Z_k|^2\n" << std::setprecision(6);
    for (const auto& g : cmp.gaps) std::cout << "  " << g.dt << ", " << g.l1_grid_gap << ", " << g.sup_l2_gap << '\n';
    std::cout << std::setprecision(17) << "L1 gap slope = " << cmp.l1_slope << "\nsup-L2 slope = " << cmp.sup_l2_slope
              << '\n';
    fs::path dir = output_dir(cfg);
    if (cfg.wants_format("csv")) write_comparison_csv(cmp, dir / "comparison.csv");
    if (cfg.wants_format("json")) write_comparison_json(cmp, dir / "comparison.json");
    return kOk;
}

bool report(bool ok, const std::string& what) {
    std::cout << (ok ? "PASS " : "FAIL ") << what << '\n';
    return ok;
}

int cmd_self_test() {
    bool ok = true;
    std::vector<double> dts = {0x1p-11, 0x1p-10, 0x1p-9, 0x1p-8};
    auto synthetic = [&](double c, double q) {
        std::vector<ErrorEstimate> est;
        for (double dt : dts) est.push_back({dt, ErrorMetric::EndpointLp, 2.0, c * std::pow(dt, q), 0, 0.0, false});
        return fit_convergence(est);
    };
    ConvergenceReport a = synthetic(1.0, 2.0);
    ok &= report(std::abs(a.slope - 2.0) < 1e-12 && a.residual < 1e-12, "fit of e = dt^2 gives q = 2");
    ConvergenceReport b = synthetic(3.0, 1.0);
    ok &= report(std::abs(b.slope - 1.0) < 1e-12 && std::abs(b.log_c - std::log(3.0)) < 1e-12,
                 "fit of e = 3 dt gives q = 1, log C = log 3");

    CIRParams cir;
    const double dt = 0x1p-4;
    const std::size_t n = 2000;
    GridSpec grid = GridSpec::make(static_cast<double>(n) * dt, dt);
    BrownianPath still = BrownianPath::from_increments(grid, std::vector<double>(n, 0.0));

    double z_star = cir.theta - cir.sigma * cir.sigma / (4.0 * cir.kappa);
    SchemeRun z = run_milstein_cir(cir, still, cir.theta);
    ok &= report(std::abs(z.states.back() - z_star) < 1e-12, "Milstein with zero noise settles at theta - sigma^2/(4 kappa)");

    TransformedModel tm = transform(ModelSpec::with_default_start(cir));
    double x_star = std::sqrt(cir.theta_v());
    StepSolverConfig closed, iterative;
    iterative.use_closed_form = false;
    SchemeRun xc = run_bem(tm, still, closed);
    SchemeRun xi = run_bem(tm, still, iterative);
    ok &= report(std::abs(xc.states.back() - x_star) < 1e-12 && std::abs(xi.states.back() - x_star) < 1e-12,
                 "BEM with zero noise settles at sqrt(theta_v) (closed form and iterative)");
    ok &= report(std::abs(cir_step_closed_form(cir, dt, x_star, 0.0) - x_star) < 1e-15,
                 "sqrt(theta_v) is a fixed point of the BEM step");
    return ok ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Domain-preserving strong approximation of scalar SDEs"};
    app.set_version_flag("--version", "lampsde 1.0");
    bool self_test_flag = false;
    app.add_flag("--self-test", self_test_flag, "Run the fast synthetic and fixed-point checks");

    CommonOptions common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", common.config_file, "Experiment configuration file")->check(CLI::ExistingFile);
        sub->add_option("--set", common.overrides, "Override a config key: section.key=value");
        sub->add_option("--workers", common.workers, "Parallel path workers")->check(CLI::PositiveNumber);
        sub->add_option("--paths", common.paths, "Number of paths")->check(CLI::PositiveNumber);
        sub->add_option("--seed", common.seed, "Seed stream");
        sub->add_option("--out", common.out, "Output directory (default: $LAMPSDE_OUTPUT_DIR)");
    };

    auto* check = app.add_subcommand("check", "Validate a model configuration");
    add_common(check);
    auto* simulate = app.add_subcommand("simulate", "Write trajectories to CSV");
    add_common(simulate);
    bool dump = false;
    simulate->add_flag("--dump-increments", dump, "Also write the Brownian increments (binary)");
    auto* converge = app.add_subcommand("converge", "Estimate the strong convergence order");
    add_common(converge);
    std::optional<double> synthetic_order;
    double synthetic_c = 1.0;
    converge->add_option("--synthetic", synthetic_order, "Fit injected errors C dt^q with this q instead of sampling");
    converge->add_option("--synthetic-c", synthetic_c, "Constant C of the injected errors");
    auto* compare = app.add_subcommand("compare", "Compare drift-implicit Milstein with LBE for CIR");
    add_common(compare);
    auto* self_test = app.add_subcommand("self-test", "Run the fast synthetic and fixed-point checks");
    app.require_subcommand(0, 1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kConfigInvalid;
    }

    try {
        if (self_test_flag || *self_test) return cmd_self_test();
        if (*check) return cmd_check(load(common));
        if (*simulate) return cmd_simulate(load(common), common.paths.value_or(1), dump);
        if (*converge) return cmd_converge(load(common), synthetic_order, synthetic_c);
        if (*compare) return cmd_compare(load(common));
        std::cout << app.help();
        return kConfigInvalid;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigInvalid;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigInvalid;
    } catch (const InadmissibleStep& e) {
        std::cerr << "inadmissible step: " << e.what() << '\n';
        return kInadmissibleStep;
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kSolverFailure;
    } catch (const DomainError& e) {
        std::cerr << "domain failure: " << e.what() << '\n';
        return kSolverFailure;
    } catch (const IoError& e) {
        std::cerr << "io failure: " << e.what() << '\n';
        return kIoFailure;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "io failure: " << e.what() << '\n';
        return kIoFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailed;
    }
}
