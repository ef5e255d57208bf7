#pragma once

#include <limits>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace lampsde {

enum class ModelId { CIR, CEV, Heston32, WrightFisher, AitSahalia };

std::string_view to_string(ModelId id);
ModelId model_id_from_string(std::string_view name);

/// dy = kappa (theta - y) dt + sigma sqrt(y) dw
struct CIRParams {
    double kappa = 2.0;
    double theta = 0.125;
    double sigma = 0.5;

    /// Adjusted mean level theta - sigma^2 / (4 kappa) of the square-root transformed drift.
    double theta_v() const { return theta - sigma * sigma / (4.0 * kappa); }
    double feller_ratio() const { return 2.0 * kappa * theta / (sigma * sigma); }
};

/// dy = kappa (theta - y) dt + sigma y^alpha dw, 1/2 < alpha < 1
struct CEVParams {
    double kappa = 2.0;
    double theta = 0.1;
    double sigma = 0.3;
    double alpha = 0.75;
};

/// dy = c1 y (c2 - y) dt + c3 y^{3/2} dw
struct Heston32Params {
    double c1 = 1.0;
    double c2 = 1.0;
    double c3 = 1.0;

    /// CIR triple of the reciprocal process 1/y.
    CIRParams induced_cir() const {
        return {c1 * c2, 1.0 / c2 + c3 * c3 / (c1 * c2), c3};
    }
};

/// dy = (a - b y) dt + gamma sqrt(y (1 - y)) dw on (0, 1)
struct WrightFisherParams {
    double a = 1.0;
    double b = 2.0;
    double gamma = 1.0;
};

/// dy = (a_{-1}/y - a_0 + a_1 y - a_2 y^r) dt + sigma y^rho dw
struct AitSahaliaParams {
    double alpha_m1 = 1.0;
    double alpha_0 = 1.0;
    double alpha_1 = 1.0;
    double alpha_2 = 1.0;
    double sigma = 1.0;
    double r = 2.0;
    double rho = 1.5;

    bool is_critical() const { return r == 2.0 && rho == 1.5; }
};

using ModelParams =
    std::variant<CIRParams, CEVParams, Heston32Params, WrightFisherParams, AitSahaliaParams>;

struct Interval {
    double lo;
    double hi;

    bool contains(double x) const { return x > lo && x < hi; }
};

class ModelSpec {
public:
    ModelSpec(ModelParams params, double initial_value);

    ModelId id() const;
    const ModelParams& params() const { return params_; }
    double initial_value() const { return initial_value_; }
    Interval domain() const;

    template <class P>
    const P& as() const { return std::get<P>(params_); }

    /// Model with the conventional default initial value (see default_initial_value).
    static ModelSpec with_default_start(ModelParams params);

private:
    ModelParams params_;
    double initial_value_;
};

Interval domain_of(ModelId id);
double default_initial_value(const ModelParams& params);

struct Violation {
    std::string condition;  // human-readable inequality, e.g. "2*kappa*theta >= sigma^2"
    double slack;           // lhs - rhs of the violated inequality (negative or NaN)
};

struct ValidityReport {
    bool valid = true;
    std::vector<Violation> violations;
    std::vector<std::string> notes;  // informative lines (ratios, regime remarks)
};

ValidityReport validate_params(const ModelSpec& spec);

/// Supremum of p for which the back-transformed scheme is p-strongly convergent
/// with order one. Returns +infinity when any p >= 1 is admissible.
/// Throws InvalidParams when validate_params fails.
double max_strong_order_p(const ModelSpec& spec);

/// True when requesting L^p estimates at this p lies outside the proven regime.
bool outside_guaranteed_regime(const ModelSpec& spec, double p);

double drift(const ModelSpec& spec, double y);
double diffusion(const ModelSpec& spec, double y);

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace lampsde
