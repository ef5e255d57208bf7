#pragma once

#include "lampsde/lamperti.hpp"
#include "lampsde/model.hpp"

namespace lampsde {

struct StepSolverConfig {
    double residual_tol = 1e-12;  // on |G(x) - c| / max(1, |c|)
    int max_iterations = 100;
    double eta = 0.5;             // step admissibility: 2 K+ dt < eta
    bool use_closed_form = true;  // closed-form root for reciprocal-linear drifts

    void validate() const;
};

struct StepResult {
    double x;
    int iterations = 0;
    bool at_precision_limit = false;
};

/// True iff 2 max(0, K) dt < eta. Non-positive K never restricts the step.
bool admissible_step(double k, double dt, double eta);

/// Unique root in the transformed domain of G(x) = x - f(x) dt = c.
/// Safeguarded Newton iteration on a bracket grown geometrically from `guess`.
/// Throws InadmissibleStep or SolverError (carrying the last bracket).
StepResult solve_implicit(const TransformedModel& tm, double dt, double c, double guess,
                          const StepSolverConfig& cfg = {});

/// Positive root of (1 + b dt) x^2 - c x - a dt = 0, i.e. x = c + (a/x - b x) dt.
double solve_reciprocal_linear(const ReciprocalLinearDrift& drift, double dt, double c);

/// One BEM step of the square-root transformed CIR process,
/// X_{k+1} = X_k + f(X_{k+1}) dt + (sigma/2) dw, solved in closed form.
double cir_step_closed_form(const CIRParams& params, double dt, double xk, double dw);

/// One drift-implicit Milstein step for CIR in original coordinates.
/// Throws DomainError when zk <= 0.
double milstein_cir_step(const CIRParams& params, double dt, double zk, double dw);

}  // namespace lampsde
