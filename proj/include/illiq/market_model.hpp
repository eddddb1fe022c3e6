#pragma once

// Market constants, their validation, the reduced-equation coefficients and
// the liquid-only (Merton) baseline.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace illiq {

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct MarketParams {
    double r = 0.01;      // riskless rate
    double alpha = 0.05;  // stock drift
    double sigma = 0.5;   // stock volatility
    double mu = 0.05;     // drift of the illiquid paper value
    double delta = 0.02;  // dividend rate paid by the illiquid asset
    double eta = 0.3;     // illiquid volatility
    double rho = 0.4;     // correlation between stock and illiquid noise
};

enum class ParamIssue {
    NonFinite,
    SigmaNonPositive,
    EtaNonPositive,
    RhoOutOfRange,
    DeltaNegative,
    DriftCondition,  // r - (mu - delta) <= 0
    D1Zero,
};

struct ParamError {
    ParamIssue issue;
    std::string field;
    std::string message;
};

struct DCoefficients {
    double d1;
    double d2;
    double d3;
};

inline DCoefficients derived_constants(const MarketParams& p) {
    const double d1 = (p.alpha - p.r - p.eta * p.rho * p.sigma) / (p.sigma * p.sigma);
    const double d2 = 0.5 * p.eta * p.eta * (1.0 - p.rho * p.rho);
    const double d3 = 2.0 * d2 + (p.rho * p.eta / p.sigma) * (p.alpha - p.r) + p.r - (p.mu - p.delta);
    return {d1, d2, d3};
}

// Every violated invariant is reported, each naming the offending field.
// With relax_drift_check the r - (mu - delta) > 0 hypothesis is skipped
// (the caller is expected to warn instead).
inline std::vector<ParamError> validate(const MarketParams& p, bool relax_drift_check = false) {
    std::vector<ParamError> errs;
    const std::pair<const char*, double> fields[] = {{"r", p.r},         {"alpha", p.alpha}, {"sigma", p.sigma},
                                                     {"mu", p.mu},       {"delta", p.delta}, {"eta", p.eta},
                                                     {"rho", p.rho}};
    bool finite = true;
    for (const auto& [name, value] : fields) {
        if (!std::isfinite(value)) {
            errs.push_back({ParamIssue::NonFinite, name, std::string(name) + " must be a finite number"});
            finite = false;
        }
    }
    if (!finite) return errs;
    if (!(p.sigma > 0)) errs.push_back({ParamIssue::SigmaNonPositive, "sigma", "sigma must be > 0"});
    if (!(p.eta > 0)) errs.push_back({ParamIssue::EtaNonPositive, "eta", "eta must be > 0"});
    if (!(std::abs(p.rho) < 1)) errs.push_back({ParamIssue::RhoOutOfRange, "rho", "rho must lie in (-1, 1)"});
    if (!(p.delta >= 0)) errs.push_back({ParamIssue::DeltaNegative, "delta", "delta must be >= 0"});
    if (!relax_drift_check && !(p.r - (p.mu - p.delta) > 0))
        errs.push_back({ParamIssue::DriftCondition, "r",
                        "r - (mu - delta) must be > 0 (got " + std::to_string(p.r - (p.mu - p.delta)) +
                            "); use --relax-drift-check to proceed with a warning"});
    if (p.sigma > 0 && derived_constants(p).d1 == 0.0)
        errs.push_back({ParamIssue::D1Zero, "alpha", "d1 = (alpha - r - eta*rho*sigma)/sigma^2 must be nonzero"});
    return errs;
}

inline void require_valid(const MarketParams& p, bool relax_drift_check = false) {
    auto errs = validate(p, relax_drift_check);
    if (errs.empty()) return;
    std::string msg;
    for (const auto& e : errs) msg += (msg.empty() ? "" : "; ") + e.message;
    throw DomainError(msg);
}

// M in the Merton value M + log(kappa l)/kappa.
inline double merton_constant(const MarketParams& p, double kappa) {
    const double ex = p.alpha - p.r;
    return (p.r + ex * ex / (2 * p.sigma * p.sigma) - kappa) / (kappa * kappa);
}

inline double merton_value(double l, double kappa, const MarketParams& p) {
    if (!(l > 0)) throw DomainError("merton_value: l must be > 0");
    if (!(kappa > 0)) throw DomainError("merton_value: kappa must be > 0");
    return merton_constant(p, kappa) + std::log(kappa * l) / kappa;
}

struct Policy {
    double pi;  // amount held in the stock
    double c;   // consumption rate
};

inline Policy merton_policies(double l, double kappa, const MarketParams& p) {
    if (!(l > 0)) throw DomainError("merton_policies: l must be > 0");
    if (!(kappa > 0)) throw DomainError("merton_policies: kappa must be > 0");
    return {l * (p.alpha - p.r) / (p.sigma * p.sigma), kappa * l};
}

// (mu - delta - eta^2/2) / kappa^2: the h-part constant of the exponential reduction.
inline double reduction_constant(const MarketParams& p, double kappa) {
    return (p.mu - p.delta - 0.5 * p.eta * p.eta) / (kappa * kappa);
}

}  // namespace illiq
