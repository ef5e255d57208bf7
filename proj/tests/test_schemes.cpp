#include "lampsde/errors.hpp"
#include "lampsde/schemes.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace lampsde;

namespace {

BrownianPath still_path(double dt, std::size_t n) {
    GridSpec g = GridSpec::make(static_cast<double>(n) * dt, dt);
    return BrownianPath::from_increments(g, std::vector<double>(n, 0.0));
}

}  // namespace

TEST(Schemes, BemRunShapeAndStart) {
    auto spec = ModelSpec::with_default_start(CIRParams{});
    TransformedModel tm = transform(spec);
    BrownianPath path = sample_path(GridSpec::make(1.0, 0x1p-8), {1, 0});
    SchemeRun run = run_bem(tm, path);
    ASSERT_EQ(run.states.size(), 257u);
    EXPECT_EQ(run.states[0], tm.initial_value());
    SchemeRun lbe = run_lbe(tm, path);
    EXPECT_EQ(lbe.states[0], spec.initial_value());
    for (std::size_t k = 1; k < lbe.states.size(); ++k)
        EXPECT_DOUBLE_EQ(lbe.states[k], run.states[k] * run.states[k]);
}

TEST(Schemes, ClosedFormAndIterativeRunsAgree) {
    TransformedModel tm = transform(ModelSpec::with_default_start(CIRParams{}));
    BrownianPath path = sample_path(GridSpec::make(1.0, 0x1p-8), {1, 5});
    StepSolverConfig iterative;
    iterative.use_closed_form = false;
    SchemeRun a = run_bem(tm, path), b = run_bem(tm, path, iterative);
    for (std::size_t k = 0; k < a.states.size(); ++k) EXPECT_NEAR(a.states[k], b.states[k], 1e-10);
    EXPECT_EQ(a.diagnostics.solver_iterations, 0);
    EXPECT_GT(b.diagnostics.solver_iterations, 0);
}

TEST(Schemes, SampledRunMatchesFullRun) {
    TransformedModel tm = transform(ModelSpec::with_default_start(WrightFisherParams{}));
    BrownianPath path = sample_path(GridSpec::make(1.0, 0x1p-8), {2, 3});
    SchemeRun full = run_bem(tm, path);
    auto sampled = run_bem_sampled(tm, path, {}, 16);
    ASSERT_EQ(sampled.size(), 17u);
    for (std::size_t j = 0; j < sampled.size(); ++j) EXPECT_EQ(sampled[j], full.states[j * 16]);
    EXPECT_THROW(run_bem_sampled(tm, path, {}, 3), std::invalid_argument);
}

TEST(Schemes, BemZeroNoiseFixedPoint) {
    // With dw = 0 the CIR recursion x = x_prev + (A/x - B x) dt settles at sqrt(A/B).
    CIRParams p{2.0, 0.125, 0.5};
    TransformedModel tm = transform(ModelSpec::with_default_start(p));
    SchemeRun run = run_bem(tm, still_path(0x1p-4, 2000));
    double a = 0.5 * p.kappa * p.theta_v(), b = 0.5 * p.kappa;
    EXPECT_NEAR(run.states.back(), std::sqrt(a / b), 1e-14);
}

TEST(Schemes, MilsteinZeroNoiseFixedPoint) {
    // Fixed point of Z -> (Z + kappa theta dt - sigma^2 dt / 4) / (1 + kappa dt).
    CIRParams p{2.0, 0.125, 0.5};
    const double dt = 0x1p-4;
    double z_star = (p.kappa * p.theta * dt - p.sigma * p.sigma * dt / 4.0) / (p.kappa * dt);
    SchemeRun run = run_milstein_cir(p, still_path(dt, 2000), p.theta);
    EXPECT_NEAR(run.states.back(), z_star, 1e-14);
    double z = p.theta;
    for (int k = 0; k < 5; ++k) z = (z + p.kappa * p.theta * dt - p.sigma * p.sigma * dt / 4.0) / (1.0 + p.kappa * dt);
    EXPECT_NEAR(run.states[5], z, 1e-15);
}

TEST(Schemes, ExplicitEmZeroNoiseIsForwardEuler) {
    CIRParams p{2.0, 0.125, 0.5};
    auto spec = ModelSpec(p, 0.5);
    const double dt = 0x1p-5;
    auto r = run_explicit_em(spec, still_path(dt, 64));
    ASSERT_TRUE(std::holds_alternative<SchemeRun>(r));
    const auto& run = std::get<SchemeRun>(r);
    double y = 0.5;
    for (std::size_t k = 0; k < 64; ++k) {
        EXPECT_EQ(run.states[k], y);
        y = y + p.kappa * (p.theta - y) * dt;
    }
}

TEST(Schemes, ExplicitEmReportsViolation) {
    auto spec = ModelSpec(CIRParams{2.0, 0.125, 0.5}, 0.01);
    GridSpec g = GridSpec::make(0.25, 0.0625);
    BrownianPath path = BrownianPath::from_increments(g, {-0.5, 0.0, 0.0, 0.0});
    auto r = run_explicit_em(spec, path);
    ASSERT_TRUE(std::holds_alternative<DomainViolation>(r));
    EXPECT_EQ(std::get<DomainViolation>(r).step, 1u);
    EXPECT_LE(std::get<DomainViolation>(r).value, 0.0);
}

TEST(Schemes, LbeStaysInDomainOnHarshPaths) {
    for (const auto& spec : oracle::default_models()) {
        TransformedModel tm = transform(spec);
        GridSpec g = GridSpec::make(1.0, 0x1p-4);
        for (std::uint64_t i = 0; i < 200; ++i) {
            BrownianPath base = sample_path(g, {99, i});
            std::vector<double> big(base.increments());
            for (double& v : big) v *= 4.0;
            SchemeRun run = run_lbe(tm, BrownianPath::from_increments(g, big));
            for (double y : run.states) ASSERT_TRUE(spec.domain().contains(y)) << to_string(spec.id());
        }
    }
}

TEST(Schemes, FlowMonotonicityCir) {
    CIRParams p{2.0, 0.125, 0.5};
    TransformedModel lo = transform(ModelSpec(p, 0.1)), hi = transform(ModelSpec(p, 0.2));
    GridSpec g = GridSpec::make(1.0, 0x1p-6);
    for (std::uint64_t i = 0; i < 500; ++i) {
        BrownianPath path = sample_path(g, {12, i});
        SchemeRun a = run_lbe(lo, path), b = run_lbe(hi, path);
        for (std::size_t k = 0; k < a.states.size(); ++k) ASSERT_LE(a.states[k], b.states[k]);
    }
}

TEST(Schemes, InterpolationIsConvex) {
    TransformedModel tm = transform(ModelSpec::with_default_start(CIRParams{}));
    SchemeRun run = run_lbe(tm, sample_path(GridSpec::make(1.0, 0x1p-4), {1, 1}));
    for (double t = 0.0; t <= 1.0; t += 0.013) {
        auto k = static_cast<std::size_t>(std::floor(t / run.grid.dt));
        if (k >= run.grid.n_steps) k = run.grid.n_steps - 1;
        double v = interpolate_linear(run, t);
        EXPECT_GE(v, std::min(run.states[k], run.states[k + 1]));
        EXPECT_LE(v, std::max(run.states[k], run.states[k + 1]));
    }
    EXPECT_EQ(interpolate_linear(run, 0.0), run.states[0]);
    EXPECT_EQ(interpolate_linear(run, 1.0), run.states.back());
    EXPECT_THROW(interpolate_linear(run, 1.5), std::out_of_range);
}

TEST(Schemes, InadmissibleStepRejected) {
    TransformedModel tm = transform(ModelSpec::with_default_start(AitSahaliaParams{1.0, 10.0, 1.0, 1.0, 1.0, 2.0, 1.5}));
    ASSERT_GT(tm.one_sided_lipschitz(), 0.0);
    double dt = std::ldexp(1.0, static_cast<int>(std::ceil(std::log2(0.25 / tm.one_sided_lipschitz()))));
    BrownianPath path = sample_path(GridSpec::make(4.0 * dt, dt), {1, 1});
    EXPECT_THROW(run_bem(tm, path), InadmissibleStep);
}

TEST(Schemes, TrajectoryCsv) {
    auto dir = std::filesystem::temp_directory_path() / "lampsde_schemes_test";
    std::filesystem::create_directories(dir);
    CIRParams p{};
    TransformedModel tm = transform(ModelSpec::with_default_start(p));
    BrownianPath path = sample_path(GridSpec::make(1.0, 0x1p-5), {1, 2});
    SchemeRun lbe = run_lbe(tm, path);
    SchemeRun z = run_milstein_cir(p, path, p.theta);
    write_trajectory_csv(dir / "t.csv", lbe, &z);
    std::ifstream is(dir / "t.csv");
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "k,t,state,transformed_state,milstein");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, 33);
    EXPECT_THROW(write_trajectory_csv("/nonexistent-dir/x.csv", lbe), IoError);
    std::filesystem::remove_all(dir);
}

TEST(Schemes, SchemeNames) {
    for (SchemeId id : {SchemeId::BemTransformed, SchemeId::Lbe, SchemeId::MilsteinCir, SchemeId::ExplicitEm})
        EXPECT_EQ(scheme_id_from_string(to_string(id)), id);
    EXPECT_THROW(scheme_id_from_string("rk4"), ConfigError);
}
