#pragma once

#include "lampsde/model.hpp"

#include <optional>
#include <span>
#include <vector>

namespace lampsde {

/// Transformed drift of the form A/x - B x (CIR and Heston-3/2). The implicit
/// step for this drift reduces to a quadratic with a closed-form positive root.
struct ReciprocalLinearDrift {
    double a;  // coefficient of 1/x
    double b;  // coefficient of -x
};

/// f(x) = c1 x^{-m1} + h(x) with |h(x)| <= c2 (1 + |x|^{m2}).
struct InverseDriftStructure {
    double c1;
    double m1;
    double m2;
    double c2;
};

struct PowerTerm {
    double coeff;
    double exponent;
};

/// Additive-noise SDE dx = f(x) dt + s * noise_level dw obtained from a
/// ModelSpec by the Lamperti change of variables x = F(y). s is -1 when the
/// transform is decreasing (the scheme is then driven by -w).
class TransformedModel {
public:
    explicit TransformedModel(const ModelSpec& spec);

    double f(double x) const;
    double f1(double x) const;
    double f2(double x) const;

    double forward(double y) const;
    double inverse(double x) const;

    double noise_level() const { return noise_level_; }
    double noise_sign() const { return noise_sign_; }
    /// Coefficient multiplying the Brownian increment in the scheme.
    double noise_coefficient() const { return noise_sign_ * noise_level_; }

    Interval domain() const { return domain_; }
    double one_sided_lipschitz() const { return lipschitz_k_; }

    const std::optional<InverseDriftStructure>& inverse_drift_structure() const { return inv_structure_; }
    const std::optional<ReciprocalLinearDrift>& reciprocal_linear() const { return recip_; }

    const ModelSpec& spec() const { return spec_; }
    ModelId model_id() const { return spec_.id(); }

    /// Transformed initial value F(y0).
    double initial_value() const { return forward(spec_.initial_value()); }

private:
    ModelSpec spec_;
    Interval domain_{0.0, kInf};
    double noise_level_ = 1.0;
    double noise_sign_ = 1.0;
    double lipschitz_k_ = 0.0;
    std::optional<InverseDriftStructure> inv_structure_;
    std::optional<ReciprocalLinearDrift> recip_;
    std::vector<PowerTerm> terms_;  // CEV and Ait-Sahalia drifts as a sum of powers
    double inverse_exponent_ = 0.0;  // y = x^e for CEV (1/(1-alpha)) and Ait-Sahalia (-1/(rho-1))
};

/// Throws InvalidParams when validate_params fails.
TransformedModel transform(const ModelSpec& spec);

/// Elementwise F^{-1}. Throws DomainError carrying the first offending index.
std::vector<double> back_transform_path(const TransformedModel& tm, std::span<const double> xs);

/// Upper bound on sup f' over a log-spaced grid of `points` nodes spanning
/// (lo, hi), clipped at zero and inflated by `margin`.
double numeric_lipschitz_bound(const TransformedModel& tm, double lo = 1e-8, double hi = 1e8,
                               int points = 100000, double margin = 0.01);

}  // namespace lampsde
