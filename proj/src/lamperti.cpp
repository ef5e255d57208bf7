#include "lampsde/lamperti.hpp"

#include "lampsde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace lampsde {

namespace {

// x^e, with repeated multiplication for small integral exponents.
double power(double x, double e) {
    double r = std::nearbyint(e);
    if (r == e && std::abs(r) <= 16.0) {
        int n = static_cast<int>(r);
        bool inv = n < 0;
        if (inv) n = -n;
        double acc = 1.0, base = x;
        while (n) {
            if (n & 1) acc *= base;
            base *= base;
            n >>= 1;
        }
        return inv ? 1.0 / acc : acc;
    }
    return std::pow(x, e);
}

double sum_terms(const std::vector<PowerTerm>& terms, double x, int derivative) {
    double acc = 0.0;
    for (const auto& t : terms) {
        double c = t.coeff, e = t.exponent;
        if (derivative >= 1) {
            c *= e;
            e -= 1.0;
        }
        if (derivative >= 2) {
            c *= e;
            e -= 1.0;
        }
        if (c != 0.0) acc += c * power(x, e);
    }
    return acc;
}

}  // namespace

TransformedModel::TransformedModel(const ModelSpec& spec) : spec_(spec) {
    ValidityReport rep = validate_params(spec);
    if (!rep.valid) throw InvalidParams("cannot transform: " + rep.violations.front().condition);

    switch (spec.id()) {
        case ModelId::CIR: {
            const auto& p = spec.as<CIRParams>();
            recip_ = ReciprocalLinearDrift{0.5 * p.kappa * p.theta_v(), 0.5 * p.kappa};
            noise_level_ = 0.5 * p.sigma;
            lipschitz_k_ = -0.5 * p.kappa;
            inv_structure_ = InverseDriftStructure{recip_->a, 1.0, 1.0, recip_->b};
            break;
        }
        case ModelId::Heston32: {
            const auto& p = spec.as<Heston32Params>();
            recip_ = ReciprocalLinearDrift{0.5 * p.c1 + 0.375 * p.c3 * p.c3, 0.5 * p.c1 * p.c2};
            noise_level_ = 0.5 * p.c3;
            noise_sign_ = -1.0;
            lipschitz_k_ = -recip_->b;
            inv_structure_ = InverseDriftStructure{recip_->a, 1.0, 1.0, recip_->b};
            break;
        }
        case ModelId::CEV: {
            const auto& p = spec.as<CEVParams>();
            double s = 1.0 - p.alpha;
            terms_ = {{s * p.kappa * p.theta, -p.alpha / s},
                      {-s * p.kappa, 1.0},
                      {-s * 0.5 * p.alpha * p.sigma * p.sigma, -1.0}};
            noise_level_ = s * p.sigma;
            inverse_exponent_ = 1.0 / s;
            lipschitz_k_ = numeric_lipschitz_bound(*this);
            break;
        }
        case ModelId::WrightFisher: {
            const auto& p = spec.as<WrightFisherParams>();
            domain_ = {0.0, std::numbers::pi};
            noise_level_ = p.gamma;
            lipschitz_k_ = 0.0;
            break;
        }
        case ModelId::AitSahalia: {
            // x = y^{-s}, s = rho - 1; Ito's formula gives a sum of powers of x.
            const auto& p = spec.as<AitSahaliaParams>();
            double s = p.rho - 1.0;
            terms_ = {{-s * p.alpha_m1, (p.rho + 1.0) / s},
                      {s * p.alpha_0, p.rho / s},
                      {-s * p.alpha_1, 1.0},
                      {s * p.alpha_2, -(p.r - p.rho) / s},
                      {0.5 * s * (s + 1.0) * p.sigma * p.sigma, -1.0}};
            noise_level_ = s * p.sigma;
            noise_sign_ = -1.0;
            inverse_exponent_ = -1.0 / s;
            if (p.is_critical()) {
                double c1 = 0.5 * p.alpha_2 + 0.375 * p.sigma * p.sigma;
                double c2 = 0.5 * (p.alpha_1 + p.alpha_0 + p.alpha_m1);
                inv_structure_ = InverseDriftStructure{c1, 1.0, 5.0, c2};
            }
            lipschitz_k_ = numeric_lipschitz_bound(*this);
            break;
        }
    }
}

double TransformedModel::f(double x) const {
    if (recip_) return recip_->a / x - recip_->b * x;
    if (spec_.id() == ModelId::WrightFisher) {
        const auto& p = spec_.as<WrightFisherParams>();
        double q = 0.25 * p.gamma * p.gamma;
        double t = std::tan(0.5 * x);
        return (p.a - q) / t - (p.b - p.a - q) * t;
    }
    return sum_terms(terms_, x, 0);
}

double TransformedModel::f1(double x) const {
    if (recip_) return -recip_->a / (x * x) - recip_->b;
    if (spec_.id() == ModelId::WrightFisher) {
        const auto& p = spec_.as<WrightFisherParams>();
        double q = 0.25 * p.gamma * p.gamma;
        double t = std::tan(0.5 * x), c = 1.0 / t;
        return -0.5 * (p.a - q) * (1.0 + c * c) - 0.5 * (p.b - p.a - q) * (1.0 + t * t);
    }
    return sum_terms(terms_, x, 1);
}

double TransformedModel::f2(double x) const {
    if (recip_) return 2.0 * recip_->a / (x * x * x);
    if (spec_.id() == ModelId::WrightFisher) {
        const auto& p = spec_.as<WrightFisherParams>();
        double q = 0.25 * p.gamma * p.gamma;
        double t = std::tan(0.5 * x), c = 1.0 / t;
        return 0.5 * (p.a - q) * c * (1.0 + c * c) - 0.5 * (p.b - p.a - q) * t * (1.0 + t * t);
    }
    return sum_terms(terms_, x, 2);
}

double TransformedModel::forward(double y) const {
    switch (spec_.id()) {
        case ModelId::CIR: return std::sqrt(y);
        case ModelId::Heston32: return 1.0 / std::sqrt(y);
        case ModelId::WrightFisher: return 2.0 * std::asin(std::sqrt(y));
        case ModelId::CEV:
        case ModelId::AitSahalia: return std::pow(y, 1.0 / inverse_exponent_);
    }
    return NAN;
}

double TransformedModel::inverse(double x) const {
    switch (spec_.id()) {
        case ModelId::CIR: return x * x;
        case ModelId::Heston32: return 1.0 / (x * x);
        case ModelId::WrightFisher: {
            double s = std::sin(0.5 * x);
            return s * s;
        }
        case ModelId::CEV:
        case ModelId::AitSahalia: return power(x, inverse_exponent_);
    }
    return NAN;
}

TransformedModel transform(const ModelSpec& spec) { return TransformedModel(spec); }

std::vector<double> back_transform_path(const TransformedModel& tm, std::span<const double> xs) {
    std::vector<double> ys;
    ys.reserve(xs.size());
    Interval d = tm.domain();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!d.contains(xs[i])) {
            std::ostringstream os;
            os << "transformed state " << xs[i] << " at index " << i << " outside (" << d.lo << ", " << d.hi << ")";
            throw DomainError(os.str(), i);
        }
        ys.push_back(tm.inverse(xs[i]));
    }
    return ys;
}

double numeric_lipschitz_bound(const TransformedModel& tm, double lo, double hi, int points, double margin) {
    double sup = -kInf;
    double step = std::log(hi / lo) / (points - 1);
    for (int i = 0; i < points; ++i) {
        double x = lo * std::exp(step * i);
        double d = tm.f1(x);
        if (!std::isnan(d)) sup = std::max(sup, d);
    }
    return std::max(0.0, sup) * (1.0 + margin);
}

}  // namespace lampsde
