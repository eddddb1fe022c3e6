#pragma once

// Numerical checks tying solver output to the properties it must satisfy:
// Merton limits, value bounds, auxiliary-function ODEs, special functions,
// homotheticity and the k = 1 degeneration. Every check returns a report
// with the measured quantity and the threshold it is compared against
// (passed <=> measured <= threshold).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "exponential_solver.hpp"
#include "liquidation.hpp"
#include "market_model.hpp"
#include "special.hpp"
#include "weibull_solver.hpp"

namespace illiq {

struct CheckReport {
    std::string name;
    bool passed = false;
    double measured = 0;
    double threshold = 0;
    std::string context;
};

namespace detail {

inline CheckReport make_report(std::string name, double measured, double threshold, std::string context) {
    CheckReport r;
    r.name = std::move(name);
    r.measured = measured;
    r.threshold = threshold;
    r.passed = std::isfinite(measured) && measured <= threshold;
    r.context = std::move(context);
    return r;
}

inline std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

inline std::string fmt(const char* f, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

}  // namespace detail

// Relative gaps of c/l and pi/l to their large-z limits at the last reporting node.
inline std::pair<CheckReport, CheckReport> check_merton_limit(const ValueCurve& c, double z_required = 1e4,
                                                              double threshold = 0.01) {
    const auto& p = c.params;
    const double z = c.grid.z[c.grid.report_end() - 1];
    const Policy pol = policies(c, z, 1.0);
    const double pi_lim = (p.alpha - p.r) / (p.sigma * p.sigma);
    const double gc = std::abs(pol.c / z - c.kappa) / c.kappa;
    const double gp = std::abs(pol.pi / z - pi_lim) / std::abs(pi_lim);
    std::string ctx = detail::fmt("z=%g", z);
    if (z < z_required * (1 - 1e-12)) ctx += detail::fmt(": grid ends below the required z=%g", z_required);
    auto rc = detail::make_report("merton_limit_c", gc, threshold,
                                  ctx + detail::fmt(", c/l=%.8g, limit kappa=%.8g", pol.c / z, c.kappa));
    auto rp = detail::make_report("merton_limit_pi", gp, threshold,
                                  ctx + detail::fmt(", pi/l=%.8g, limit=%.8g", pol.pi / z, pi_lim));
    if (z < z_required * (1 - 1e-12)) rc.passed = rp.passed = false;
    return {rc, rp};
}

// Same at time t of a surface; the consumption limit is survival(t)/Psi1(t).
inline std::pair<CheckReport, CheckReport> check_merton_limit(const ValueSurface& s, double t = 0.0,
                                                              double z_required = 1e4, double threshold = 0.02) {
    const auto& p = s.params;
    const double z = s.grid.z[s.grid.report_end() - 1];
    const Policy pol = policies_at(s, t, z, 1.0);
    const double c_lim = survival(s.law, t) / psi1(s.law, t);
    const double pi_lim = (p.alpha - p.r) / (p.sigma * p.sigma);
    const double gc = std::abs(pol.c / z - c_lim) / c_lim;
    const double gp = std::abs(pol.pi / z - pi_lim) / std::abs(pi_lim);
    std::string ctx = detail::fmt("t=%g, z=%g", t, z);
    if (z < z_required * (1 - 1e-12)) ctx += detail::fmt(": grid ends below the required z=%g", z_required);
    auto rc = detail::make_report("merton_limit_c", gc, threshold,
                                  ctx + detail::fmt(", c/l=%.8g, limit=%.8g", pol.c / z, c_lim));
    auto rp = detail::make_report("merton_limit_pi", gp, threshold,
                                  ctx + detail::fmt(", pi/l=%.8g, limit=%.8g", pol.pi / z, pi_lim));
    if (z < z_required * (1 - 1e-12)) rc.passed = rp.passed = false;
    return {rc, rp};
}

inline CheckReport check_stationary_residual(const ValueCurve& c, double threshold = 1e-6) {
    return detail::make_report("stationary_residual", c.max_residual, threshold,
                               detail::fmt("iterations=%g, last update=%.3g", c.iterations, c.last_update));
}

// Lower bound node-wise (measured = worst violation) plus existence of a
// finite upper-bound constant.
inline CheckReport check_value_bounds(const ValueCurve& c, double tol = 1e-9) {
    const double slack = lower_bound_slack(c);
    const double c1 = fit_upper_bound_constant(c);
    auto r = detail::make_report("value_bounds", std::max(0.0, -slack), tol,
                                 detail::fmt("min slack=%.6g, fitted C1=%.8g", slack, c1));
    if (!std::isfinite(c1)) {
        r.passed = false;
        r.context += " (no finite C1 <= 1e6)";
    }
    return r;
}

inline CheckReport check_upper_bound_stability(double c1_coarse, double c1_fine, double threshold = 0.1) {
    const double rel = std::abs(c1_fine - c1_coarse) / std::max(std::abs(c1_coarse), 1e-300);
    return detail::make_report("upper_bound_stability", rel, threshold,
                               detail::fmt("C1 coarse=%.8g, fine=%.8g", c1_coarse, c1_fine));
}

// Finite-difference residuals of
//   Psi2' + (mu - delta - eta^2/2) Psi1 + S (log S - 1) = 0
//   Theta' + (r + (alpha-r)^2/(2 sigma^2)) Psi1 - S (1 - log S + log Psi1) = 0
// at n times, plus the gap between quadrature and closed forms (the printed
// Weibull formulas, or the exact exponential ones). The third report is
// informational: its threshold is +inf.
inline std::array<CheckReport, 3> check_psi_odes(const LiquidationLaw& law, const MarketParams& p, int n = 50,
                                                 double threshold = 1e-6) {
    validate_law(law);
    const double T = t_cut(law, 1e-8);
    const double scale = std::holds_alternative<Exponential>(law) ? 1.0 / std::get<Exponential>(law).kappa
                                                                   : std::get<Weibull>(law).lambda;
    const double h = 1e-4 * scale;
    const double m = p.mu - p.delta - 0.5 * p.eta * p.eta;
    const double ex = p.alpha - p.r;
    const double R = p.r + ex * ex / (2 * p.sigma * p.sigma);
    double r2 = 0, r3 = 0, gap = 0, t2 = 0, t3 = 0, tg = 0;
    for (int j = 0; j < n; ++j) {
        const double t = h + (T - 2 * h) * (j + 0.5) / n;
        const double S = survival(law, t), ls = log_survival(law, t), P1 = psi1(law, t);
        const double d2 = (psi2(law, t + h, p) - psi2(law, t - h, p)) / (2 * h);
        const double d3 = (theta(law, t + h, p) - theta(law, t - h, p)) / (2 * h);
        const double e2 = std::abs(d2 + m * P1 + S * (ls - 1.0));
        const double e3 = std::abs(d3 + R * P1 - S * (1.0 - ls + log_psi1(law, t)));
        if (e2 > r2) r2 = e2, t2 = t;
        if (e3 > r3) r3 = e3, t3 = t;
        double c2, c3;
        if (auto* e = std::get_if<Exponential>(&law)) {
            const double k = e->kappa, ek = std::exp(-k * t);
            c2 = ek * (m / (k * k) - 2.0 / k - t);
            c3 = ek * (R / (k * k) - (1.0 - std::log(k)) / k);
        } else {
            c2 = psi2_weibull_printed(std::get<Weibull>(law), t, p);
            c3 = theta_weibull_printed(std::get<Weibull>(law), t, p);
        }
        const double g = std::max(std::abs(c2 - psi2(law, t, p)), std::abs(c3 - theta(law, t, p)));
        if (g > gap) gap = g, tg = t;
    }
    const std::string ln = law_name(law);
    return {detail::make_report("psi2_ode_residual", r2, threshold, ln + detail::fmt(": worst at t=%.6g", t2)),
            detail::make_report("theta_ode_residual", r3, threshold, ln + detail::fmt(": worst at t=%.6g", t3)),
            detail::make_report("closed_form_gap", gap, std::numeric_limits<double>::infinity(),
                                ln + detail::fmt(": informational, worst |closed form - quadrature| at t=%.6g", tg))};
}

// Independent quadrature value of Gamma(a, x).
inline double incomplete_gamma_quadrature(double a, double x) {
    using boost::math::quadrature::gauss_kronrod;
    double err = 0;
    if (x >= 1.0) {
        auto f = [a](double s) { return std::exp((a - 1.0) * std::log(s) - s); };
        return gauss_kronrod<double, 61>::integrate(f, x, std::numeric_limits<double>::infinity(), 15, 1e-13, &err);
    }
    // Gamma(a) minus the lower part; for a < 1, s = u^{1/a} removes the singularity at 0.
    if (x == 0) return std::tgamma(a);
    double lower;
    if (a >= 1) {
        auto f = [a](double s) { return std::pow(s, a - 1.0) * std::exp(-s); };
        lower = gauss_kronrod<double, 61>::integrate(f, 0.0, x, 15, 1e-13, &err);
    } else {
        auto g = [a](double u) { return std::exp(-std::pow(u, 1.0 / a)) / a; };
        lower = gauss_kronrod<double, 61>::integrate(g, 0.0, std::pow(x, a), 15, 1e-13, &err);
    }
    return std::tgamma(a) - lower;
}

inline CheckReport check_gamma(int n = 200, std::uint64_t seed = 20240601, double threshold = 1e-8) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ua(0.1, 5.0), ux(0.0, 50.0);
    double worst = 0, wa = 0, wx = 0;
    for (int i = 0; i < n; ++i) {
        const double a = ua(rng), x = ux(rng);
        const double ref = incomplete_gamma_quadrature(a, x);
        const double rel = std::abs(upper_incomplete_gamma(a, x) - ref) / std::abs(ref);
        if (!(rel <= worst)) worst = rel, wa = a, wx = x;
    }
    return detail::make_report("incomplete_gamma", worst, threshold,
                               std::to_string(n) + detail::fmt(" samples, worst at a=%.6g", wa) + detail::fmt(", x=%.6g", wx));
}

// Psi1 in incomplete-gamma form against direct quadrature of the survival function.
inline CheckReport check_psi1_gamma_form(const Weibull& w, int n = 20, double threshold = 1e-8) {
    using boost::math::quadrature::gauss_kronrod;
    validate_law(w);
    double worst = 0, wt = 0;
    for (int j = 0; j < n; ++j) {
        const double t = 3.0 * w.lambda * j / n;
        double err = 0;
        const double ref = gauss_kronrod<double, 61>::integrate(
            [&](double s) { return std::exp(-std::pow(s / w.lambda, w.k)); }, t,
            std::numeric_limits<double>::infinity(), 15, 1e-13, &err);
        const double rel = std::abs(psi1(w, t) - ref) / ref;
        if (!(rel <= worst)) worst = rel, wt = t;
    }
    return detail::make_report("psi1_gamma_form", worst, threshold, detail::fmt("worst at t=%.6g", wt));
}

namespace detail {

template <class ValueFn, class Psi1Fn>
CheckReport homotheticity(ValueFn value, Psi1Fn ps1, double t_max, double zlo, double zhi, std::uint64_t seed,
                          double threshold) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double worst = 0;
    for (int i = 0; i < 20; ++i) {
        const double t = t_max * u01(rng);
        const double z = zlo * std::pow(zhi / zlo, u01(rng));
        const double h = 0.1 * std::pow(100.0, u01(rng));
        const double l = z * h;
        const double base = value(t, l, h);
        for (double lam : {0.5, 2.0, 10.0}) {
            const double d = value(t, lam * l, lam * h) - base - ps1(t) * std::log(lam);
            worst = std::max(worst, std::abs(d));
        }
    }
    return make_report("homotheticity", worst, threshold, "20 points, lambda in {0.5, 2, 10}");
}

}  // namespace detail

inline CheckReport check_homotheticity(const ValueCurve& c, std::uint64_t seed = 7, double threshold = 1e-6) {
    return detail::homotheticity([&](double t, double l, double h) { return reconstruct_value(t, l, h, c); },
                                 [&](double t) { return std::exp(-c.kappa * t) / c.kappa; }, 3.0 / c.kappa, 0.1,
                                 1e3, seed, threshold);
}

inline CheckReport check_homotheticity(const ValueSurface& s, std::uint64_t seed = 7, double threshold = 1e-6) {
    const double scale = std::holds_alternative<Weibull>(s.law) ? std::get<Weibull>(s.law).lambda
                                                                 : 1.0 / std::get<Exponential>(s.law).kappa;
    return detail::homotheticity([&](double t, double l, double h) { return reconstruct_value(s, t, l, h); },
                                 [&](double t) { return psi1(s.law, t); }, 3.0 * scale, 0.1, 1e3, seed, threshold);
}

// W >= Psi1 log z + Theta - Psi2 on the reporting nodes of every `stride`-th stored level.
inline CheckReport check_surface_lower_bound(const ValueSurface& s, int stride = 10, double tol = 1e-9) {
    double worst = -std::numeric_limits<double>::infinity(), wt = 0, wz = 0;
    const int L = static_cast<int>(s.t.size());
    for (int j = 0; j < L; j += std::max(1, stride)) {
        const double t = s.t[j];
        const double P1 = psi1(s.law, t), P2 = psi2(s.law, t, s.params), Th = theta(s.law, t, s.params);
        for (int i = s.grid.report_begin(); i < s.grid.report_end(); ++i) {
            const double gap = P1 * std::log(s.grid.z[i]) + Th - P2 - s.W[j][i];
            if (gap > worst) worst = gap, wt = t, wz = s.grid.z[i];
        }
    }
    return detail::make_report("surface_lower_bound", std::max(0.0, worst), tol,
                               detail::fmt("largest bound - W = %.4g", worst) + detail::fmt(" at t=%.6g, z=%.6g", wt, wz));
}

// sup |V_surface - V_curve| / sup |V_curve| over stored levels t <= t_max and
// reporting nodes in [zlo, zhi], h = 1. Both objects must share the z-grid.
inline CheckReport check_k1_degeneration(const ValueSurface& s, const ValueCurve& c, double zlo, double zhi,
                                         double t_max, double threshold = 1e-3) {
    if (s.grid.size() != c.grid.size() || s.grid.x0 != c.grid.x0 || s.grid.dx != c.grid.dx)
        throw DomainError("k=1 degeneration check needs identical z-grids");
    const double K = reduction_constant(c.params, c.kappa);
    double num = 0, den = 0, wt = 0, wz = 0;
    for (std::size_t j = 0; j < s.t.size(); ++j) {
        const double t = s.t[j];
        if (t > t_max * (1 + 1e-12)) continue;
        const double P2 = psi2(s.law, t, s.params);
        const double e = std::exp(-c.kappa * t);
        for (int i = s.grid.report_begin(); i < s.grid.report_end(); ++i) {
            const double z = s.grid.z[i];
            if (z < zlo * (1 - 1e-12) || z > zhi * (1 + 1e-12)) continue;
            const double vc = e * (c.v[i] + K);
            const double d = std::abs(s.W[j][i] + P2 - vc);
            den = std::max(den, std::abs(vc));
            if (d > num) num = d, wt = t, wz = z;
        }
    }
    return detail::make_report("k1_degeneration", num / den, threshold,
                               detail::fmt("largest gap %.4g", num) + detail::fmt(" at t=%.6g, z=%.6g", wt, wz));
}

}  // namespace illiq
