#include "lampsde/implicit_step.hpp"

#include "lampsde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lampsde {

void StepSolverConfig::validate() const {
    if (!(residual_tol > 0.0)) throw ConfigError("residual tolerance must be positive");
    if (max_iterations < 1) throw ConfigError("max iterations must be at least 1");
    if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("eta must lie in (0, 1)");
}

bool admissible_step(double k, double dt, double eta) {
    return 2.0 * std::max(0.0, k) * dt < eta;
}

namespace {

constexpr int kMaxBracketSteps = 4096;

double ulp(double x) {
    return std::nextafter(std::abs(x), std::numeric_limits<double>::infinity()) - std::abs(x);
}

// Starting point strictly inside the domain.
double interior_start(const Interval& d, double guess, double c) {
    if (d.contains(guess)) return guess;
    if (d.contains(c)) return c;
    if (std::isfinite(d.lo) && std::isfinite(d.hi)) return 0.5 * (d.lo + d.hi);
    if (std::isfinite(d.lo)) return d.lo + 1.0;
    if (std::isfinite(d.hi)) return d.hi - 1.0;
    return 0.0;
}

}  // namespace

StepResult solve_implicit(const TransformedModel& tm, double dt, double c, double guess,
                          const StepSolverConfig& cfg) {
    cfg.validate();
    if (!(dt > 0.0)) throw InadmissibleStep("step size must be positive");
    if (!admissible_step(tm.one_sided_lipschitz(), dt, cfg.eta)) {
        std::ostringstream os;
        os << "step dt = " << dt << " violates 2 K dt < eta (K = " << tm.one_sided_lipschitz()
           << ", eta = " << cfg.eta << ")";
        throw InadmissibleStep(os.str());
    }

    const Interval d = tm.domain();
    const double tol = cfg.residual_tol * std::max(1.0, std::abs(c));
    auto G = [&](double x) { return x - tm.f(x) * dt - c; };
    // One more Newton step is nearly free and lands at machine precision.
    auto polish = [&](double x, double g, double lo, double hi) {
        double p = x - g / (1.0 - tm.f1(x) * dt);
        return p > lo && p < hi && std::abs(G(p)) <= std::abs(g) ? p : x;
    };

    StepResult res{interior_start(d, guess, c)};
    double x = res.x;
    double g = G(x);
    if (std::abs(g) <= tol) {
        res.x = polish(x, g, d.lo, d.hi);
        return res;
    }

    // Bracket [lo, hi] with G(lo) < 0 < G(hi). G is increasing, so move away
    // from x in the direction of the sign change. Finite boundaries are
    // approached by midpointing and never evaluated.
    double lo = d.lo, hi = d.hi;
    {
        double step = std::max(std::abs(x), 1.0);
        double from = x;
        bool upward = g < 0.0;
        int n = 0;
        for (;; ++n) {
            if (n == kMaxBracketSteps) throw SolverError("could not bracket the implicit root", lo, hi);
            if (upward) lo = from; else hi = from;
            double bound = upward ? d.hi : d.lo;
            double cand;
            if (std::isfinite(bound)) {
                cand = 0.5 * (from + bound);
            } else {
                cand = upward ? from + step : from - step;
                step *= 2.0;
            }
            if (cand == from || !d.contains(cand)) throw SolverError("bracket collapsed onto the boundary", lo, hi);
            double gc = G(cand);
            if (std::abs(gc) <= tol) {
                res.x = polish(cand, gc, d.lo, d.hi);
                res.iterations = n + 1;
                return res;
            }
            if ((gc > 0.0) == upward) {
                if (upward) hi = cand; else lo = cand;
                // Newton starts from the endpoint with the smaller residual.
                if (std::abs(gc) < std::abs(g)) {
                    x = cand;
                    g = gc;
                }
                break;
            }
            from = cand;
            x = cand;
            g = gc;
        }
        res.iterations = n + 1;
    }

    for (int it = 0; it < cfg.max_iterations; ++it) {
        ++res.iterations;
        double slope = 1.0 - tm.f1(x) * dt;
        double next = x - g / slope;
        if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
        x = next;
        g = G(x);
        if (std::abs(g) <= tol) {
            res.x = polish(x, g, lo, hi);
            return res;
        }
        if (g < 0.0) lo = x; else hi = x;
        if (hi - lo <= 4.0 * ulp(x)) {
            res.x = 0.5 * (lo + hi);
            res.at_precision_limit = true;
            return res;
        }
    }
    throw SolverError("implicit solve did not converge within the iteration budget", lo, hi);
}

double solve_reciprocal_linear(const ReciprocalLinearDrift& drift, double dt, double c) {
    double q = 1.0 + drift.b * dt;
    double root = std::sqrt(c * c + 4.0 * q * drift.a * dt);
    // The two forms avoid cancellation for either sign of c.
    if (c >= 0.0) return (c + root) / (2.0 * q);
    return 2.0 * drift.a * dt / (root - c);
}

double cir_step_closed_form(const CIRParams& params, double dt, double xk, double dw) {
    // (2 + kappa dt) x^2 - 2 c x - kappa theta_v dt = 0 with c = X_k + sigma dw / 2.
    double c = xk + 0.5 * params.sigma * dw;
    return solve_reciprocal_linear({0.5 * params.kappa * params.theta_v(), 0.5 * params.kappa}, dt, c);
}

double milstein_cir_step(const CIRParams& params, double dt, double zk, double dw) {
    if (!(zk > 0.0)) {
        std::ostringstream os;
        os << "Milstein state " << zk << " is not positive";
        throw DomainError(os.str());
    }
    // Z + sigma sqrt(Z) dw + sigma^2 dw^2 / 4 is a perfect square.
    double root = std::sqrt(zk) + 0.5 * params.sigma * dw;
    double num = root * root + (params.kappa * params.theta - 0.25 * params.sigma * params.sigma) * dt;
    return num / (1.0 + params.kappa * dt);
}

}  // namespace lampsde
