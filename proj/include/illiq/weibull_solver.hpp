#pragma once

// Time-dependent reduced equation for a general (here Weibull) liquidation law.
// With V(t, l, h) = W(t, l/h) + Psi1(t) log h + Psi2(t) and S = survival,
//   W_t - c1 W_z^2 / W_zz + d2 z^2 W_zz + (d3 z + delta) W_z - S log W_z = 0,
// solved backwards from a horizon T where S(T) is negligible. Each implicit
// Euler step is a stationary problem of the same shape as the exponential case
// and is solved with the same policy iteration.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "exponential_solver.hpp"
#include "grid.hpp"
#include "hjb_scheme.hpp"
#include "liquidation.hpp"
#include "market_model.hpp"

namespace illiq {

struct TimeGrid {
    std::vector<double> t;

    static TimeGrid uniform(double T, int steps) {
        if (!(T > 0) || steps < 1) throw DomainError("time grid needs T > 0 and at least one step");
        TimeGrid g;
        g.t.resize(steps + 1);
        for (int i = 0; i <= steps; ++i) g.t[i] = T * i / steps;
        g.t[steps] = T;
        return g;
    }
    // Steps grow like survival(t)^{-1/2}, capped at `max_ratio` times the
    // first step. The local Euler error is weighted by the survival function,
    // so this spreads the global error evenly over the horizon.
    static TimeGrid graded(const LiquidationLaw& law, double T, int steps, double max_ratio) {
        if (!(T > 0) || steps < 1 || !(max_ratio >= 1)) throw DomainError("bad graded time grid request");
        const int fine = 200 * steps;
        std::vector<double> s(fine + 1, 0.0);  // stretched coordinate at t = T j / fine
        auto density = [&](double t) { return 1.0 / std::min(std::exp(-0.5 * log_survival(law, t)), max_ratio); };
        for (int j = 1; j <= fine; ++j) {
            const double ta = T * (j - 1) / fine, tb = T * j / fine;
            s[j] = s[j - 1] + 0.5 * (density(ta) + density(tb)) * (tb - ta);
        }
        TimeGrid g;
        g.t.resize(steps + 1);
        int j = 0;
        for (int i = 0; i <= steps; ++i) {
            const double target = s[fine] * i / steps;
            while (j < fine - 1 && s[j + 1] < target) ++j;
            const double a = (target - s[j]) / (s[j + 1] - s[j]);
            g.t[i] = T * (j + std::clamp(a, 0.0, 1.0)) / fine;
        }
        g.t[0] = 0;
        g.t[steps] = T;
        return g;
    }
    int steps() const { return static_cast<int>(t.size()) - 1; }
    double horizon() const { return t.back(); }
};

// Smallest t with survival(t) <= cutoff.
inline double horizon_for_cutoff(const LiquidationLaw& law, double cutoff) {
    const double L = -std::log(cutoff);
    if (auto* e = std::get_if<Exponential>(&law)) return L / e->kappa;
    const auto& w = std::get<Weibull>(law);
    return w.lambda * std::pow(L, 1.0 / w.k);
}

struct WeibullSolveOptions {
    double survival_cutoff = 1e-10;  // horizon: survival(T) = cutoff
    int time_steps = 2000;
    double tol = 1e-10;              // inner policy-iteration update tolerance
    int max_iter = 200;
    int store_stride = 1;            // keep every n-th time level (plus t = 0 and t = T)
    double grading = 1.0;            // > 1: graded steps, largest/smallest step ratio
    SchemeSettings scheme;
};

// Lower-bound proxy used as terminal data at t = T.
inline double terminal_condition(double z, const LiquidationLaw& law, const MarketParams& p, double T) {
    return psi1(law, T) * std::log(z) + theta(law, T, p) - psi2(law, T, p);
}

struct ValueSurface {
    ZGrid grid;
    LiquidationLaw law = Weibull{1, 1};
    MarketParams params;
    double horizon = 0;
    std::vector<double> t;                     // stored levels, increasing
    std::vector<std::vector<double>> W, p, q;  // per stored level, per node
    std::vector<double> slope;                 // imposed large-z slope of W in log z, per stored level
    double max_residual = 0;                   // discrete PDE residual, reporting nodes
    int max_inner_iterations = 0;
    int total_inner_iterations = 0;
    int steps = 0;
};

inline ValueSurface solve_parabolic(const MarketParams& mp, const LiquidationLaw& law, const ZGrid& grid,
                                   const WeibullSolveOptions& opt = {}) {
    validate_law(law);
    require_valid(mp, true);
    ValueSurface s;
    s.grid = grid;
    s.law = law;
    s.params = mp;
    const ZGrid& g = s.grid;
    const int n = g.size();
    const double T = horizon_for_cutoff(law, opt.survival_cutoff);
    const TimeGrid tg = opt.grading > 1 ? TimeGrid::graded(law, T, opt.time_steps, opt.grading)
                                         : TimeGrid::uniform(T, opt.time_steps);
    s.horizon = T;
    s.steps = tg.steps();
    ReducedScheme scheme(mp, g, opt.scheme);
    const double c1 = quadratic_coefficient(mp);
    const auto d = derived_constants(mp);

    std::vector<double> u(n), pp(n), qq(n), f(n), prev(n);
    for (int i = 0; i < n; ++i) u[i] = terminal_condition(g.z[i], law, mp, T);

    const int M = tg.steps();
    // The large-z slope of u in x = log z is the discrete counterpart of Psi1:
    // substituting u = s x + g into an implicit Euler step gives
    // s_n = s_{n+1} + dt S(t_n). Imposing it (rather than the exact Psi1) keeps
    // the Neumann condition consistent with the interior scheme.
    double slope = psi1(law, T);
    auto spec_at = [&](int level, double dt) {
        StepSpec st;
        st.a0 = dt > 0 ? 1.0 / dt : 0.0;
        st.w = survival(law, tg.t[level]);
        st.slope = slope;
        return st;
    };
    {
        StepSpec st = spec_at(M, 0.0);
        scheme.improve(u, pp, qq, st, true);
    }
    s.slope.push_back(slope);
    auto store = [&](double t) {
        s.t.push_back(t);
        s.W.push_back(u);
        s.p.push_back(pp);
        s.q.push_back(qq);
    };
    store(T);

    for (int level = M - 1; level >= 0; --level) {
        const double dt = tg.t[level + 1] - tg.t[level];
        slope += dt * survival(law, tg.t[level]);
        StepSpec st = spec_at(level, dt);
        const double S = st.w;
        const double src = S > 0 ? -S * (std::log(S) - 1.0) : 0.0;
        for (int i = 0; i < n; ++i) f[i] = u[i] / dt + src;
        st.f = &f;
        prev = u;
        scheme.improve(u, pp, qq, st, false);
        const auto stats = scheme.howard(u, pp, qq, st, opt.tol, opt.max_iter, false);
        s.max_inner_iterations = std::max(s.max_inner_iterations, stats.iterations);
        s.total_inner_iterations += stats.iterations;
        if (!stats.converged)
            throw NonConvergence("weibull solve: inner iteration failed at t = " + std::to_string(tg.t[level]) +
                                 " (last update " + std::to_string(stats.last_update) + ")");
        for (int i = g.report_begin(); i < std::min(g.report_end(), n - 1); ++i) {
            double ux, uxx;
            scheme.derivatives(u, i, st.slope, ux, uxx);
            const double z = g.z[i];
            const double Wz = ux / z, Wzz = (uxx - ux) / (z * z);
            if (!(Wz > 0) || !(Wzz < 0))
                throw ConcavityLoss("weibull solve: Wz > 0, Wzz < 0 violated at t = " + std::to_string(tg.t[level]) +
                                        ", z = " + std::to_string(z),
                                    i, z);
            const double res = (prev[i] - u[i]) / dt - c1 * Wz * Wz / Wzz + d.d2 * z * z * Wzz +
                               (d.d3 * z + mp.delta) * Wz - S * std::log(Wz);
            s.max_residual = std::max(s.max_residual, std::abs(res));
        }
        if (level == 0 || level % opt.store_stride == 0) {
            store(tg.t[level]);
            s.slope.push_back(slope);
        }
    }
    // levels were pushed from T down to 0
    std::reverse(s.t.begin(), s.t.end());
    std::reverse(s.W.begin(), s.W.end());
    std::reverse(s.p.begin(), s.p.end());
    std::reverse(s.q.begin(), s.q.end());
    std::reverse(s.slope.begin(), s.slope.end());
    return s;
}

namespace detail {

// Stored level j and weight a so that t = (1-a) t_j + a t_{j+1}.
inline void locate_time(const ValueSurface& s, double t, int& j, double& a) {
    if (!(t >= 0)) throw DomainError("time must be >= 0");
    if (t >= s.t.back()) {
        j = static_cast<int>(s.t.size()) - 2;
        a = 1;
        return;
    }
    const auto it = std::upper_bound(s.t.begin(), s.t.end(), t);
    j = static_cast<int>(it - s.t.begin()) - 1;
    a = (t - s.t[j]) / (s.t[j + 1] - s.t[j]);
}

}  // namespace detail

// W_z and W_zz at stored level j and node i.
inline void surface_node_derivatives(const ValueSurface& s, int j, int i, double& Wz, double& Wzz) {
    ReducedScheme scheme(s.params, s.grid);
    double ux, uxx;
    scheme.derivatives(s.W[j], i, s.slope[j], ux, uxx);
    const double z = s.grid.z[i];
    Wz = ux / z;
    Wzz = (uxx - ux) / (z * z);
}

inline double surface_value(const ValueSurface& s, double t, double z) {
    check_in_grid(s.grid, z);
    int j;
    double a;
    detail::locate_time(s, t, j, a);
    const MonotoneCubic w0(s.grid, s.W[j]), w1(s.grid, s.W[j + 1]);
    return (1 - a) * w0(z) + a * w1(z);
}

inline double reconstruct_value(const ValueSurface& s, double t, double l, double h) {
    if (!(l > 0) || !(h > 0)) throw DomainError("reconstruct_value: need l > 0, h > 0");
    return surface_value(s, t, l / h) + psi1(s.law, t) * std::log(h) + psi2(s.law, t, s.params);
}

// Same with Psi1(t), Psi2(t) supplied by the caller (avoids repeated quadrature).
inline double reconstruct_value(const ValueSurface& s, double t, double l, double h, double psi1_t, double psi2_t) {
    return surface_value(s, t, l / h) + psi1_t * std::log(h) + psi2_t;
}

inline Policy policies_at(const ValueSurface& s, double t, double l, double h) {
    if (!(l > 0) || !(h > 0)) throw DomainError("policies_at: need l > 0, h > 0");
    const double z = l / h;
    check_in_grid(s.grid, z);
    int j;
    double a;
    detail::locate_time(s, t, j, a);
    int i;
    double b;
    s.grid.locate(z, i, b);
    double lz[2], lzz[2];
    for (int k = 0; k < 2; ++k) {
        double wz[2], wzz[2];
        for (int m = 0; m < 2; ++m) {
            surface_node_derivatives(s, j + k, i + m, wz[m], wzz[m]);
            if (!(wz[m] > 0 && wzz[m] < 0))
                throw DomainError("derivative-sign violation near t = " + std::to_string(t) +
                                  ", z = " + std::to_string(z));
        }
        lz[k] = (1 - b) * std::log(wz[0]) + b * std::log(wz[1]);
        lzz[k] = (1 - b) * std::log(-wzz[0]) + b * std::log(-wzz[1]);
    }
    const double Wz = std::exp((1 - a) * lz[0] + a * lz[1]);
    const double Wzz = -std::exp((1 - a) * lzz[0] + a * lzz[1]);
    Policy pol = policy_from_derivatives(h, z, Wz, Wzz, s.params);
    pol.c = h * survival(s.law, t) / Wz;
    return pol;
}

}  // namespace illiq
