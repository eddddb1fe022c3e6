#pragma once

// Liquidation-time laws and the auxiliary time functions of the log-utility
// reduction:
//   Psi1(t)  = int_t^inf S(s) ds                                   (S = survival)
//   Psi2'    + (mu - delta - eta^2/2) Psi1 + S (log S - 1)      = 0,  Psi2(inf)  = 0
//   Theta'   + (r + (alpha-r)^2/(2 sigma^2)) Psi1
//            - S (1 - log S + log Psi1)                          = 0,  Theta(inf) = 0
// With V = W(t, l/h) + Psi1 log h + Psi2, the value obeys V >= Psi1 log l + Theta.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <variant>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "market_model.hpp"
#include "special.hpp"

namespace illiq {

struct Exponential {
    double kappa;
};

struct Weibull {
    double lambda;
    double k;
};

using LiquidationLaw = std::variant<Exponential, Weibull>;

inline void validate_law(const LiquidationLaw& law) {
    if (auto* e = std::get_if<Exponential>(&law)) {
        if (!(std::isfinite(e->kappa) && e->kappa > 0)) throw DomainError("kappa must be a finite number > 0");
    } else {
        const auto& w = std::get<Weibull>(law);
        if (!(std::isfinite(w.lambda) && w.lambda > 0)) throw DomainError("lambda must be a finite number > 0");
        if (!(std::isfinite(w.k) && w.k >= 1)) throw DomainError("k must be a finite number >= 1");
    }
}

inline std::string law_name(const LiquidationLaw& law) {
    return std::holds_alternative<Exponential>(law) ? "exponential" : "weibull";
}

namespace detail {
inline void check_time(double t, const char* what) {
    if (!(t >= 0)) throw DomainError(std::string(what) + ": t must be >= 0");
}
}  // namespace detail

inline double log_survival(const LiquidationLaw& law, double t) {
    detail::check_time(t, "survival");
    if (auto* e = std::get_if<Exponential>(&law)) return -e->kappa * t;
    const auto& w = std::get<Weibull>(law);
    return -std::pow(t / w.lambda, w.k);
}

inline double survival(const LiquidationLaw& law, double t) { return std::exp(log_survival(law, t)); }

inline double pdf(const LiquidationLaw& law, double t) {
    detail::check_time(t, "pdf");
    if (auto* e = std::get_if<Exponential>(&law)) return e->kappa * std::exp(-e->kappa * t);
    const auto& w = std::get<Weibull>(law);
    const double u = t / w.lambda;
    return (w.k / w.lambda) * std::pow(u, w.k - 1.0) * std::exp(-std::pow(u, w.k));
}

inline double psi1(const LiquidationLaw& law, double t) {
    detail::check_time(t, "psi1");
    if (auto* e = std::get_if<Exponential>(&law)) return std::exp(-e->kappa * t) / e->kappa;
    const auto& w = std::get<Weibull>(law);
    return (w.lambda / w.k) * upper_incomplete_gamma(1.0 / w.k, std::pow(t / w.lambda, w.k));
}

inline double log_psi1(const LiquidationLaw& law, double t) {
    detail::check_time(t, "psi1");
    if (auto* e = std::get_if<Exponential>(&law)) return -e->kappa * t - std::log(e->kappa);
    const auto& w = std::get<Weibull>(law);
    return std::log(w.lambda / w.k) + log_upper_incomplete_gamma(1.0 / w.k, std::pow(t / w.lambda, w.k));
}

// Time after which the law is treated as "infinity": survival drops below
// `cutoff`, capped at 1e4 times the time scale.
inline double t_cut(const LiquidationLaw& law, double cutoff = 1e-14) {
    const double L = -std::log(cutoff);
    if (auto* e = std::get_if<Exponential>(&law)) return std::min(L / e->kappa, 1e4 / e->kappa);
    const auto& w = std::get<Weibull>(law);
    return std::min(w.lambda * std::pow(L, 1.0 / w.k), 1e4 * w.lambda);
}

// Mean liquidation time, Psi1(0).
inline double mean_time(const LiquidationLaw& law) { return psi1(law, 0.0); }

namespace detail {

template <class F>
double tail_integral(F f, double t, double T) {
    if (t >= T) return 0.0;
    using boost::math::quadrature::gauss_kronrod;
    double err = 0;
    return gauss_kronrod<double, 61>::integrate(f, t, T, 20, 1e-13, &err);
}

}  // namespace detail

inline double psi2_integrand(const LiquidationLaw& law, const MarketParams& p, double s) {
    const double ls = log_survival(law, s);
    return (p.mu - p.delta - 0.5 * p.eta * p.eta) * psi1(law, s) + std::exp(ls) * (ls - 1.0);
}

inline double theta_integrand(const LiquidationLaw& law, const MarketParams& p, double s) {
    const double ex = p.alpha - p.r;
    const double ls = log_survival(law, s);
    return (p.r + ex * ex / (2 * p.sigma * p.sigma)) * psi1(law, s) -
           std::exp(ls) * (1.0 - ls + log_psi1(law, s));
}

// Psi2(t) = int_t^inf [(mu - delta - eta^2/2) Psi1 + S (log S - 1)] ds by quadrature.
inline double psi2(const LiquidationLaw& law, double t, const MarketParams& p) {
    detail::check_time(t, "psi2");
    return detail::tail_integral([&](double s) { return psi2_integrand(law, p, s); }, t, t_cut(law));
}

inline double theta(const LiquidationLaw& law, double t, const MarketParams& p) {
    detail::check_time(t, "theta");
    return detail::tail_integral([&](double s) { return theta_integrand(law, p, s); }, t, t_cut(law));
}

// Closed forms printed for the Weibull law, kept only for comparison with
// the quadrature values above.
inline double psi2_weibull_printed(const Weibull& w, double t, const MarketParams& p) {
    const double x = std::pow(t / w.lambda, w.k);
    return -(-0.5 * p.eta * p.eta + (p.mu - p.delta)) * psi1(w, t) + std::exp(-x) * (x + 1.0);
}

inline double theta_weibull_printed(const Weibull& w, double t, const MarketParams& p) {
    const double ex = p.alpha - p.r;
    const double x = std::pow(t / w.lambda, w.k);
    const double ps1 = psi1(w, t);
    return -(p.r + ex * ex / (2 * p.sigma * p.sigma)) * ps1 +
           std::exp(-x) * (std::exp(-x) + std::pow(t / w.k, w.k) + std::log(ps1));
}

struct AsymptoticPsi {
    double psi1;
    double psi2;
    double theta;
};

// Leading-order large-t expressions for k > 1. The theta coefficient
// (lambda - k)/(lambda k) mixes a time scale with a pure number; it is
// evaluated as printed, with the bracket multiplied out so lambda == k is
// not a division by zero.
inline AsymptoticPsi asymptotic_psi(const Weibull& w, double t) {
    if (!(w.k > 1)) throw DomainError("asymptotic_psi: requires k > 1");
    if (!(t / w.lambda >= 4)) throw DomainError("asymptotic_psi: requires t / lambda >= 4");
    const double e = std::exp(-std::pow(t / w.lambda, w.k));
    AsymptoticPsi a;
    a.psi1 = std::pow(w.lambda, w.k) / w.k * std::pow(t, 1.0 - w.k) * e;
    a.psi2 = -t * e / w.k;
    a.theta = t * e * ((w.lambda - w.k) / (w.lambda * w.k) + (w.k - 1.0) * std::pow(t, -w.k) * std::log(t));
    return a;
}

}  // namespace illiq
