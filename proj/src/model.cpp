#include "lampsde/model.hpp"

#include "lampsde/errors.hpp"

#include <cmath>
#include <sstream>

namespace lampsde {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

// Records "lhs >= rhs" (or strict) with its slack.
void require(ValidityReport& rep, bool ok, std::string condition, double slack) {
    if (!ok) {
        rep.valid = false;
        rep.violations.push_back({std::move(condition), slack});
    }
}

bool all_finite(std::initializer_list<double> xs) {
    for (double x : xs)
        if (!std::isfinite(x)) return false;
    return true;
}

void require_positive(ValidityReport& rep, const char* name, double v) {
    require(rep, v > 0.0, std::string(name) + " > 0", v);
}

}  // namespace

std::string_view to_string(ModelId id) {
    switch (id) {
        case ModelId::CIR: return "CIR";
        case ModelId::CEV: return "CEV";
        case ModelId::Heston32: return "Heston32";
        case ModelId::WrightFisher: return "WrightFisher";
        case ModelId::AitSahalia: return "AitSahalia";
    }
    return "?";
}

ModelId model_id_from_string(std::string_view name) {
    for (ModelId id : {ModelId::CIR, ModelId::CEV, ModelId::Heston32, ModelId::WrightFisher,
                       ModelId::AitSahalia}) {
        if (name == to_string(id)) return id;
    }
    throw ConfigError("unknown model id '" + std::string(name) + "'");
}

Interval domain_of(ModelId id) {
    if (id == ModelId::WrightFisher) return {0.0, 1.0};
    return {0.0, kInf};
}

double default_initial_value(const ModelParams& params) {
    return std::visit(Overloaded{
                          [](const CIRParams& p) { return p.theta; },
                          [](const CEVParams& p) { return p.theta; },
                          [](const Heston32Params& p) { return 1.0 / p.c2; },
                          [](const WrightFisherParams&) { return 0.5; },
                          [](const AitSahaliaParams&) { return 1.0; },
                      },
                      params);
}

ModelSpec::ModelSpec(ModelParams params, double initial_value)
    : params_(std::move(params)), initial_value_(initial_value) {}

ModelSpec ModelSpec::with_default_start(ModelParams params) {
    double y0 = default_initial_value(params);
    return ModelSpec(std::move(params), y0);
}

ModelId ModelSpec::id() const { return static_cast<ModelId>(params_.index()); }

Interval ModelSpec::domain() const { return domain_of(id()); }

ValidityReport validate_params(const ModelSpec& spec) {
    ValidityReport rep;
    std::visit(
        Overloaded{
            [&](const CIRParams& p) {
                if (!all_finite({p.kappa, p.theta, p.sigma})) {
                    require(rep, false, "parameters finite", NAN);
                    return;
                }
                require_positive(rep, "kappa", p.kappa);
                require_positive(rep, "theta", p.theta);
                require_positive(rep, "sigma", p.sigma);
                double lhs = 2.0 * p.kappa * p.theta, rhs = p.sigma * p.sigma;
                require(rep, lhs >= rhs, "Feller condition 2*kappa*theta >= sigma^2 (" + fmt(lhs) + " vs " + fmt(rhs) + ")",
                        lhs - rhs);
                if (rep.valid) rep.notes.push_back("2κθ/σ² = " + fmt(p.feller_ratio()));
            },
            [&](const CEVParams& p) {
                if (!all_finite({p.kappa, p.theta, p.sigma, p.alpha})) {
                    require(rep, false, "parameters finite", NAN);
                    return;
                }
                require_positive(rep, "kappa", p.kappa);
                require_positive(rep, "theta", p.theta);
                require_positive(rep, "sigma", p.sigma);
                require(rep, p.alpha > 0.5, "alpha > 0.5", p.alpha - 0.5);
                require(rep, p.alpha < 1.0, "alpha < 1", 1.0 - p.alpha);
            },
            [&](const Heston32Params& p) {
                if (!all_finite({p.c1, p.c2, p.c3})) {
                    require(rep, false, "parameters finite", NAN);
                    return;
                }
                require_positive(rep, "c1", p.c1);
                require_positive(rep, "c2", p.c2);
                require_positive(rep, "c3", p.c3);
                if (rep.valid) {
                    CIRParams q = p.induced_cir();
                    rep.notes.push_back("induced CIR: kappa = " + fmt(q.kappa) + ", theta = " + fmt(q.theta) +
                                        ", sigma = " + fmt(q.sigma));
                }
            },
            [&](const WrightFisherParams& p) {
                if (!all_finite({p.a, p.b, p.gamma})) {
                    require(rep, false, "parameters finite", NAN);
                    return;
                }
                require_positive(rep, "a", p.a);
                require_positive(rep, "b", p.b);
                require_positive(rep, "gamma", p.gamma);
                double g2 = p.gamma * p.gamma;
                double lower = 2.0 * p.a / g2, upper = 2.0 * (p.b - p.a) / g2;
                require(rep, lower >= 1.0, "Feller condition at 0: 2a/gamma^2 >= 1 (" + fmt(lower) + ")", lower - 1.0);
                require(rep, upper >= 1.0, "Feller condition at 1: 2(b-a)/gamma^2 >= 1 (" + fmt(upper) + ")", upper - 1.0);
            },
            [&](const AitSahaliaParams& p) {
                if (!all_finite({p.alpha_m1, p.alpha_0, p.alpha_1, p.alpha_2, p.sigma, p.r, p.rho})) {
                    require(rep, false, "parameters finite", NAN);
                    return;
                }
                require_positive(rep, "alpha_m1", p.alpha_m1);
                require_positive(rep, "alpha_0", p.alpha_0);
                require_positive(rep, "alpha_1", p.alpha_1);
                require_positive(rep, "alpha_2", p.alpha_2);
                require_positive(rep, "sigma", p.sigma);
                require(rep, p.r > 1.0, "r > 1", p.r - 1.0);
                require(rep, p.rho > 1.0, "rho > 1", p.rho - 1.0);
                if (p.is_critical()) {
                    rep.notes.push_back("critical case r = 2, rho = 1.5");
                } else {
                    double slack = p.r + 1.0 - 2.0 * p.rho;
                    require(rep, slack > 0.0, "r + 1 > 2*rho (or r = 2, rho = 1.5)", slack);
                }
            },
        },
        spec.params());

    double y0 = spec.initial_value();
    Interval d = spec.domain();
    if (!std::isfinite(y0) || !d.contains(y0)) {
        rep.valid = false;
        rep.violations.push_back({"initial value inside domain (" + fmt(y0) + ")", NAN});
    }
    return rep;
}

double max_strong_order_p(const ModelSpec& spec) {
    ValidityReport rep = validate_params(spec);
    if (!rep.valid) throw InvalidParams("invalid parameters: " + rep.violations.front().condition);
    return std::visit(Overloaded{
                          [](const CIRParams& p) {
                              return 4.0 / 3.0 * p.kappa * p.theta / (p.sigma * p.sigma);
                          },
                          [](const CEVParams&) { return kInf; },
                          [](const Heston32Params& p) {
                              return 1.0 / 3.0 + p.c1 / (3.0 * p.c3 * p.c3);
                          },
                          [](const WrightFisherParams& p) {
                              return 4.0 / (3.0 * p.gamma * p.gamma) * std::min(p.a, p.b - p.a);
                          },
                          [](const AitSahaliaParams& p) {
                              if (p.is_critical()) return 1.0 / 3.0 + p.alpha_2 / (3.0 * p.sigma * p.sigma);
                              return kInf;
                          },
                      },
                      spec.params());
}

bool outside_guaranteed_regime(const ModelSpec& spec, double p) {
    return !(p < max_strong_order_p(spec));
}

namespace {

void check_in_domain(const ModelSpec& spec, double y) {
    if (!spec.domain().contains(y))
        throw DomainError("state " + fmt(y) + " outside the domain of " + std::string(to_string(spec.id())));
}

}  // namespace

double drift(const ModelSpec& spec, double y) {
    check_in_domain(spec, y);
    return std::visit(Overloaded{
                          [y](const CIRParams& p) { return p.kappa * (p.theta - y); },
                          [y](const CEVParams& p) { return p.kappa * (p.theta - y); },
                          [y](const Heston32Params& p) { return p.c1 * y * (p.c2 - y); },
                          [y](const WrightFisherParams& p) { return p.a - p.b * y; },
                          [y](const AitSahaliaParams& p) {
                              return p.alpha_m1 / y - p.alpha_0 + p.alpha_1 * y - p.alpha_2 * std::pow(y, p.r);
                          },
                      },
                      spec.params());
}

double diffusion(const ModelSpec& spec, double y) {
    check_in_domain(spec, y);
    return std::visit(Overloaded{
                          [y](const CIRParams& p) { return p.sigma * std::sqrt(y); },
                          [y](const CEVParams& p) { return p.sigma * std::pow(y, p.alpha); },
                          [y](const Heston32Params& p) { return p.c3 * y * std::sqrt(y); },
                          [y](const WrightFisherParams& p) { return p.gamma * std::sqrt(y * (1.0 - y)); },
                          [y](const AitSahaliaParams& p) { return p.sigma * std::pow(y, p.rho); },
                      },
                      spec.params());
}

}  // namespace lampsde
