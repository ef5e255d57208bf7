#include "lampsde/errors.hpp"
#include "lampsde/implicit_step.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace lampsde;

TEST(ImplicitStep, Admissibility) {
    EXPECT_TRUE(admissible_step(-5.0, 10.0, 0.5));
    EXPECT_TRUE(admissible_step(0.0, 10.0, 0.5));
    EXPECT_TRUE(admissible_step(1.0, 0.24, 0.5));
    EXPECT_FALSE(admissible_step(1.0, 0.25, 0.5));
}

TEST(ImplicitStep, ConfigValidation) {
    StepSolverConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.eta = 1.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = {};
    cfg.residual_tol = 0.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = {};
    cfg.max_iterations = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(ImplicitStep, CirIterativeMatchesQuadraticFormula) {
    CIRParams p{2.0, 0.125, 0.5};
    TransformedModel tm = transform(ModelSpec::with_default_start(p));
    StepSolverConfig cfg;
    cfg.use_closed_form = false;
    const long double a = 0.5L * p.kappa * p.theta_v(), b = 0.5L * p.kappa;
    for (double dt : {0x1p-10, 0x1p-6, 0x1p-2}) {
        for (double c : {-0.5, -0.01, 0.0, 0.01, 0.3, 2.0}) {
            double expect = static_cast<double>(oracle::quadratic_root(a, b, dt, c));
            StepResult r = solve_implicit(tm, dt, c, 0.3, cfg);
            EXPECT_NEAR(r.x, expect, 1e-11 * std::max(1.0, expect)) << "dt=" << dt << " c=" << c;
            EXPECT_NEAR(solve_reciprocal_linear(*tm.reciprocal_linear(), dt, c), expect, 4e-16 * expect + 1e-300);
        }
    }
}

TEST(ImplicitStep, CirClosedFormStepMatchesQuadraticFormula) {
    CIRParams p{1.3, 0.4, 0.7};
    const long double a = 0.5L * p.kappa * p.theta_v(), b = 0.5L * p.kappa;
    for (double xk : {0.05, 0.6, 1.1}) {
        for (double dw : {-0.3, -0.01, 0.0, 0.2}) {
            double dt = 0x1p-5;
            long double c = xk + 0.5L * p.sigma * dw;
            double expect = static_cast<double>(oracle::quadratic_root(a, b, dt, c));
            EXPECT_NEAR(cir_step_closed_form(p, dt, xk, dw), expect, 1e-15 * std::max(1.0, expect));
        }
    }
}

TEST(ImplicitStep, ClosedFormAvoidsCancellationForNegativeC) {
    // For c << 0 the root is tiny; the textbook expression loses all digits.
    ReciprocalLinearDrift d{0.05, 1.0};
    double dt = 0x1p-12, c = -3.0;
    double x = solve_reciprocal_linear(d, dt, c);
    ASSERT_GT(x, 0.0);
    double residual = (1 + d.b * dt) * x * x - c * x - d.a * dt;
    EXPECT_LT(std::abs(residual), 1e-15 * d.a * dt);
}

TEST(ImplicitStep, WrightFisherMatchesBisection) {
    WrightFisherParams p{1.0, 2.0, 1.0};
    TransformedModel tm = transform(ModelSpec::with_default_start(p));
    auto f = [&](long double x) {
        long double k1 = p.a - p.gamma * p.gamma / 4.0L, k2 = p.b - p.a - p.gamma * p.gamma / 4.0L;
        return k1 / std::tan(x / 2) - k2 * std::tan(x / 2);
    };
    for (double dt : {0x1p-8, 0x1p-4}) {
        for (double c : {-0.5, 0.01, 1.0, 1.5708, 3.1, 4.0}) {
            auto g = [&](long double x) { return x - f(x) * dt - c; };
            double expect = static_cast<double>(oracle::bisect(g, 0.0L, std::numbers::pi_v<long double>));
            StepResult r = solve_implicit(tm, dt, c, 1.0);
            EXPECT_NEAR(r.x, expect, 1e-11) << "dt=" << dt << " c=" << c;
            EXPECT_GT(r.x, 0.0);
            EXPECT_LT(r.x, std::numbers::pi);
        }
    }
}

TEST(ImplicitStep, GeneralModelsMatchBisection) {
    for (const auto& spec : oracle::default_models()) {
        TransformedModel tm = transform(spec);
        double hi = std::isfinite(tm.domain().hi) ? tm.domain().hi : 1e3;
        for (double c : {-1.0, 0.2, 1.0, 3.0}) {
            double dt = 0x1p-7;
            auto g = [&](long double x) { return x - static_cast<long double>(tm.f(static_cast<double>(x))) * dt - c; };
            double expect = static_cast<double>(oracle::bisect(g, 1e-300L, hi));
            StepResult r = solve_implicit(tm, dt, c, 1.0);
            EXPECT_NEAR(r.x, expect, 1e-10 * std::max(1.0, expect)) << to_string(spec.id()) << " c=" << c;
        }
    }
}

TEST(ImplicitStep, RandomTriplesHaveSmallResidual) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const auto& spec : oracle::default_models()) {
        TransformedModel tm = transform(spec);
        for (int i = 0; i < 20000; ++i) {
            double dt = std::ldexp(1.0, -2 - static_cast<int>(u(rng) * 12));
            if (!admissible_step(tm.one_sided_lipschitz(), dt, 0.5)) continue;
            double y = spec.id() == ModelId::WrightFisher ? 0.001 + 0.998 * u(rng) : std::exp(4.0 * z(rng) - 1.0);
            double x = tm.forward(y);
            double c = x + tm.noise_coefficient() * std::sqrt(dt) * z(rng);
            StepResult r = solve_implicit(tm, dt, c, x);
            ASSERT_TRUE(tm.domain().contains(r.x));
            double res = std::abs(r.x - tm.f(r.x) * dt - c) / std::max(1.0, std::abs(c));
            if (!r.at_precision_limit) EXPECT_LE(res, 1e-12) << to_string(spec.id()) << " c=" << c;
        }
    }
}

TEST(ImplicitStep, InadmissibleStepThrows) {
    TransformedModel tm = transform(ModelSpec::with_default_start(AitSahaliaParams{1.0, 10.0, 1.0, 1.0, 1.0, 2.0, 1.5}));
    ASSERT_GT(tm.one_sided_lipschitz(), 0.0);
    double dt = 0.5 / tm.one_sided_lipschitz();
    EXPECT_THROW(solve_implicit(tm, dt, 1.0, 1.0), InadmissibleStep);
}

TEST(ImplicitStep, IterationLimitReportsBracket) {
    TransformedModel tm = transform(ModelSpec::with_default_start(WrightFisherParams{}));
    StepSolverConfig cfg;
    cfg.max_iterations = 1;
    try {
        solve_implicit(tm, 0x1p-4, 0.3, 3.0, cfg);
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_LE(e.bracket_lo(), e.bracket_hi());
    }
}

TEST(ImplicitStep, MilsteinMatchesLongDouble) {
    CIRParams p{2.0, 0.25, 0.5};
    for (double z : {1e-6, 0.01, 0.25, 1.7}) {
        for (double dw : {-0.4, -0.05, 0.0, 0.3}) {
            double dt = 0x1p-6;
            long double s = std::sqrt(static_cast<long double>(z)) + p.sigma * dw / 2.0L;
            long double expect = (s * s + (p.kappa * p.theta - p.sigma * p.sigma / 4.0L) * dt) / (1 + p.kappa * dt);
            EXPECT_NEAR(milstein_cir_step(p, dt, z, dw), static_cast<double>(expect), 2e-16 * static_cast<double>(expect));
        }
    }
    EXPECT_THROW(milstein_cir_step(p, 0.01, 0.0, 0.1), DomainError);
}

TEST(ImplicitStep, MilsteinDominatesSquaredBem) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const CIRParams& p : {CIRParams{2.0, 0.125, 0.5}, CIRParams{2.0, 0.25, 0.5}, CIRParams{0.5, 2.0, 1.2}}) {
        for (int i = 0; i < 100000; ++i) {
            double dt = std::ldexp(1.0, -1 - static_cast<int>(u(rng) * 10));
            double x = std::exp(2.0 * z(rng) - 1.0);
            double dw = std::sqrt(dt) * z(rng) * 3.0;
            double zk = x * x * (1.0 + u(rng));
            double xn = cir_step_closed_form(p, dt, x, dw);
            double zn = milstein_cir_step(p, dt, zk, dw);
            EXPECT_GE(zn, xn * xn * (1.0 - 8e-16));
        }
    }
}
