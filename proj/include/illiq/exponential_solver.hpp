#pragma once

// Stationary reduced equation for an exponentially distributed liquidation
// time. With V(t, l, h) = e^{-kappa t} [v(l/h) + log(h)/kappa + K],
// K = (mu - delta - eta^2/2)/kappa^2, the curve v solves
//   -c1 (v')^2 / v'' + d2 z^2 v'' + (d3 z + delta) v' - 1 - log v' - kappa v = 0
// with c1 = (alpha - r - eta rho sigma)^2 / (2 sigma^2) = sigma^2 d1^2 / 2.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "hjb_scheme.hpp"
#include "market_model.hpp"

namespace illiq {

class NonConvergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConcavityLoss : public std::runtime_error {
public:
    ConcavityLoss(const std::string& what, int node_index, double z_at)
        : std::runtime_error(what), node(node_index), z(z_at) {}
    int node;
    double z;
};

struct ExpSolveOptions {
    double tol = 1e-8;           // sup-norm update that stops Howard's iteration
    int max_iter = 5000;
    double residual_tol = 1e-6;  // acceptance of the pointwise residual
    SchemeSettings scheme;
};

struct ValueCurve {
    ZGrid grid;  // includes the lower buffer nodes
    double kappa = 0;
    MarketParams params;
    std::vector<double> v, vz, vzz, pi_over_l, c_over_l;
    int iterations = 0;
    double last_update = 0;
    double max_residual = 0;  // over reporting nodes, excluding the top boundary node

    int size() const { return static_cast<int>(v.size()); }
};

// Coefficient of -(v')^2/v'' in the reduced equation.
inline double quadratic_coefficient(const MarketParams& p) {
    const double a1 = p.alpha - p.r - p.eta * p.rho * p.sigma;
    return a1 * a1 / (2 * p.sigma * p.sigma);
}

inline double stationary_residual(double v, double vz, double vzz, double z, const MarketParams& p, double kappa) {
    const auto d = derived_constants(p);
    return -quadratic_coefficient(p) * vz * vz / vzz + d.d2 * z * z * vzz + (d.d3 * z + p.delta) * vz - 1.0 -
           std::log(vz) - kappa * v;
}

// Multiplying the reduced equation by v'' gives A v''^2 + B v'' + C = 0 with
// A = d2 z^2 > 0 and C = -c1 v'^2 < 0, so exactly one root is negative.
inline double second_derivative_root(double v, double vz, double z, const MarketParams& p, double kappa) {
    if (!(vz > 0)) throw DomainError("second_derivative_root: vz must be > 0");
    if (!(z > 0)) throw DomainError("second_derivative_root: z must be > 0");
    const auto d = derived_constants(p);
    const double A = d.d2 * z * z;
    const double B = (d.d3 * z + p.delta) * vz - 1.0 - std::log(vz) - kappa * v;
    const double C = -quadratic_coefficient(p) * vz * vz;
    if (C == 0) throw DomainError("second_derivative_root: degenerate quadratic (d1 = 0)");
    const double disc = B * B - 4 * A * C;
    if (disc < 0)
        throw DomainError("second_derivative_root: negative discriminant (v=" + std::to_string(v) +
                          ", vz=" + std::to_string(vz) + ", z=" + std::to_string(z) + ")");
    const double sq = std::sqrt(disc);
    const double qq = -0.5 * (B + (B >= 0 ? sq : -sq));
    return B >= 0 ? qq / A : C / qq;
}

// Merton form of the reduced curve: (M - K) + log(kappa z)/kappa.
inline double merton_curve(double z, const MarketParams& p, double kappa) {
    return merton_constant(p, kappa) - reduction_constant(p, kappa) + std::log(kappa * z) / kappa;
}

inline ValueCurve solve_stationary(const MarketParams& p, double kappa, const ZGrid& grid,
                                   const ExpSolveOptions& opt = {}) {
    if (!(kappa > 0)) throw DomainError("kappa must be > 0");
    require_valid(p, true);
    ValueCurve c;
    c.grid = grid;
    c.kappa = kappa;
    c.params = p;
    const ZGrid& g = c.grid;
    const int n = g.size();
    ReducedScheme scheme(p, g, opt.scheme);

    std::vector<double> u(n), pp(n), qq(n);
    for (int i = 0; i < n; ++i) u[i] = merton_curve(g.z[i], p, kappa);
    StepSpec st;
    st.a0 = kappa;
    st.w = 1.0;
    st.slope = 1.0 / kappa;
    const auto stats = scheme.howard(u, pp, qq, st, opt.tol, opt.max_iter, true);
    c.iterations = stats.iterations;
    c.last_update = stats.last_update;
    if (!stats.converged)
        throw NonConvergence("exponential solve: no convergence after " + std::to_string(stats.iterations) +
                             " iterations (last update " + std::to_string(stats.last_update) + ")");

    c.v = u;
    c.vz.resize(n);
    c.vzz.resize(n);
    c.pi_over_l = pp;
    c.c_over_l = qq;
    for (int i = 0; i < n; ++i) {
        double ux, uxx;
        scheme.derivatives(u, i, st.slope, ux, uxx);
        c.vz[i] = ux / g.z[i];
        c.vzz[i] = (uxx - ux) / (g.z[i] * g.z[i]);
    }
    for (int i = g.report_begin(); i < g.report_end(); ++i) {
        if (!(c.vz[i] > 0) || !(c.vzz[i] < 0))
            throw ConcavityLoss("exponential solve: vz > 0, vzz < 0 violated at node " + std::to_string(i) +
                                    " (z=" + std::to_string(g.z[i]) + ")",
                                i, g.z[i]);
    }
    double res = 0;  // the top node carries the boundary condition, not the equation
    for (int i = g.report_begin(); i < std::min(g.report_end(), n - 1); ++i)
        res = std::max(res, std::abs(stationary_residual(c.v[i], c.vz[i], c.vzz[i], g.z[i], p, kappa)));
    c.max_residual = res;
    if (!(res <= opt.residual_tol))
        throw NonConvergence("exponential solve: residual " + std::to_string(res) + " exceeds " +
                             std::to_string(opt.residual_tol));
    return c;
}

inline void check_in_grid(const ZGrid& g, double z) {
    if (!(z > 0) || !g.contains(z))
        throw DomainError("z = " + std::to_string(z) + " outside the solved grid [" + std::to_string(g.z.front()) +
                          ", " + std::to_string(g.z.back()) + "]");
}

class CurveInterpolant {
public:
    explicit CurveInterpolant(const ValueCurve& c) : c_(&c), v_(c.grid, c.v) {}
    double v(double z) const {
        check_in_grid(c_->grid, z);
        return v_(z);
    }

private:
    const ValueCurve* c_;
    MonotoneCubic v_;
};

inline double reconstruct_value(double t, double l, double h, const ValueCurve& c) {
    if (!(t >= 0) || !(l > 0) || !(h > 0)) throw DomainError("reconstruct_value: need t >= 0, l > 0, h > 0");
    const double z = l / h;
    check_in_grid(c.grid, z);
    const CurveInterpolant ip(c);
    return std::exp(-c.kappa * t) *
           (ip.v(z) + std::log(h) / c.kappa + reduction_constant(c.params, c.kappa));
}

// v' and v'' at an arbitrary z: log-linear interpolation of v' and -v'' in log z.
inline void curve_derivatives(const ValueCurve& c, double z, double& vz, double& vzz) {
    check_in_grid(c.grid, z);
    int j;
    double s;
    c.grid.locate(z, j, s);
    if (!(c.vz[j] > 0 && c.vz[j + 1] > 0 && c.vzz[j] < 0 && c.vzz[j + 1] < 0))
        throw DomainError("derivative-sign violation near z = " + std::to_string(z));
    vz = std::exp((1 - s) * std::log(c.vz[j]) + s * std::log(c.vz[j + 1]));
    vzz = -std::exp((1 - s) * std::log(-c.vzz[j]) + s * std::log(-c.vzz[j + 1]));
}

// Optimal policies from the first-order conditions:
//   c* = h / v'(z),  pi* = h sigma^{-2} (eta rho sigma z - (alpha - r - eta rho sigma) v'/v'').
inline Policy policy_from_derivatives(double h, double z, double vz, double vzz, const MarketParams& p) {
    const double a1 = p.alpha - p.r - p.eta * p.rho * p.sigma;
    const double pi = h / (p.sigma * p.sigma) * (p.eta * p.rho * p.sigma * z - a1 * vz / vzz);
    return {pi, h / vz};
}

inline Policy policies(const ValueCurve& c, double l, double h) {
    if (!(l > 0) || !(h > 0)) throw DomainError("policies: need l > 0, h > 0");
    double vz, vzz;
    curve_derivatives(c, l / h, vz, vzz);
    return policy_from_derivatives(h, l / h, vz, vzz, c.params);
}

// Smallest C1 with v + K <= M + log(kappa (z + C1 delta))/kappa on the reporting
// nodes (h = 1). Returns +inf when no C1 <= 1e6 works.
inline double fit_upper_bound_constant(const ValueCurve& c) {
    const auto& p = c.params;
    if (p.delta == 0) return 0.0;
    const double M = merton_constant(p, c.kappa);
    const double K = reduction_constant(p, c.kappa);
    double c1 = 0;
    for (int i = c.grid.report_begin(); i < c.grid.report_end(); ++i) {
        const double z = c.grid.z[i];
        const double gap = c.kappa * (c.v[i] + K - M) - std::log(c.kappa * z);
        c1 = std::max(c1, z * std::expm1(gap) / p.delta);
    }
    return c1 <= 1e6 ? c1 : std::numeric_limits<double>::infinity();
}

// min over reporting nodes of V(0, z, 1) - (M + log(kappa z)/kappa).
inline double lower_bound_slack(const ValueCurve& c) {
    const double K = reduction_constant(c.params, c.kappa);
    double m = std::numeric_limits<double>::infinity();
    for (int i = c.grid.report_begin(); i < c.grid.report_end(); ++i)
        m = std::min(m, c.v[i] + K - merton_value(c.grid.z[i], c.kappa, c.params));
    return m;
}

}  // namespace illiq
