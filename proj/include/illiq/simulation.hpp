#pragma once

// Monte Carlo check of solved policies. Simulates
//   dL   = (r L + delta H + pi (alpha - r) - c) dt + pi sigma dW1
//   dH/H = (mu - delta) dt + eta (rho dW1 + sqrt(1 - rho^2) dW2)
// and estimates E int_0^tau log c dt both with a sampled liquidation time and
// with the survival-weighted integral over a long horizon.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "exponential_solver.hpp"
#include "liquidation.hpp"
#include "market_model.hpp"
#include "weibull_solver.hpp"

namespace illiq {

struct PathConfig {
    double dt = 1e-3;
    double horizon = 0;            // 0: survival(horizon) = horizon_cutoff
    double horizon_cutoff = 1e-6;
    long n_paths = 100000;
    std::uint64_t seed = 42;
    bool antithetic = true;
    double budget = 5e9;           // maximum n_paths * horizon / dt
    double max_absorbed = 0.01;    // larger absorbed fractions flag the run
};

struct UtilityEstimate {
    double mean = 0;
    double std_error = 0;
    long n_effective = 0;
};

struct MCResult {
    UtilityEstimate random_tau;
    UtilityEstimate survival_weighted;
    double paired_diff_mean = 0;  // survival-weighted minus random-tau, same paths
    double paired_diff_se = 0;
    long n_paths = 0;
    long absorbed = 0;
    double absorbed_fraction = 0;
    bool flagged = false;          // absorbed fraction above PathConfig::max_absorbed
    double horizon = 0;
    double dt = 0;
};

// Feedback policy stored as ratios to liquid wealth, pi/l and c/l, on the
// solver grid (one slice for the stationary case, one per stored time level
// otherwise). Linear in log z and t; constant extrapolation outside the grid.
class PolicyTable {
public:
    static PolicyTable from_curve(const ValueCurve& c) {
        PolicyTable t;
        t.x0_ = c.grid.x0;
        t.dx_ = c.grid.dx;
        t.n_ = c.grid.size();
        t.t_ = {0.0};
        t.p_ = {c.pi_over_l};
        t.q_ = {c.c_over_l};
        return t;
    }
    static PolicyTable from_surface(const ValueSurface& s) {
        PolicyTable t;
        t.x0_ = s.grid.x0;
        t.dx_ = s.grid.dx;
        t.n_ = s.grid.size();
        t.t_ = s.t;
        t.p_ = s.p;
        t.q_ = s.q;
        return t;
    }
    // Nodes must be log-uniform (as written by the solvers).
    static PolicyTable from_nodes(const std::vector<double>& z, const std::vector<double>& pi_over_l,
                                  const std::vector<double>& c_over_l) {
        if (z.size() < 3 || pi_over_l.size() != z.size() || c_over_l.size() != z.size())
            throw DomainError("policy table needs at least 3 nodes with matching columns");
        PolicyTable t;
        t.n_ = static_cast<int>(z.size());
        t.x0_ = std::log(z.front());
        t.dx_ = (std::log(z.back()) - t.x0_) / (t.n_ - 1);
        for (int i = 1; i < t.n_; ++i)
            if (std::abs(std::log(z[i]) - (t.x0_ + i * t.dx_)) > 1e-6 * std::max(1.0, t.dx_))
                throw DomainError("policy table nodes are not log-uniform");
        t.t_ = {0.0};
        t.p_ = {pi_over_l};
        t.q_ = {c_over_l};
        return t;
    }

    void ratios(double t, double z, double& p, double& q) const {
        double u = (std::log(z) - x0_) / dx_;
        int i;
        double s;
        if (!(u > 0)) {
            i = 0;
            s = 0;
        } else if (u >= n_ - 1) {
            i = n_ - 2;
            s = 1;
        } else {
            i = static_cast<int>(u);
            s = u - i;
        }
        if (t_.size() == 1) {
            p = p_[0][i] + s * (p_[0][i + 1] - p_[0][i]);
            q = q_[0][i] + s * (q_[0][i + 1] - q_[0][i]);
            return;
        }
        int j;
        double a;
        if (t >= t_.back()) {
            j = static_cast<int>(t_.size()) - 2;
            a = 1;
        } else {
            j = static_cast<int>(std::upper_bound(t_.begin(), t_.end(), t) - t_.begin()) - 1;
            a = (t - t_[j]) / (t_[j + 1] - t_[j]);
        }
        auto lin = [&](const std::vector<std::vector<double>>& f) {
            const double f0 = f[j][i] + s * (f[j][i + 1] - f[j][i]);
            const double f1 = f[j + 1][i] + s * (f[j + 1][i + 1] - f[j + 1][i]);
            return (1 - a) * f0 + a * f1;
        };
        p = lin(p_);
        q = lin(q_);
    }

    // Absolute amounts (pi, c) at liquid wealth L and illiquid value H.
    Policy operator()(double t, double L, double H) const {
        double p, q;
        ratios(t, L / H, p, q);
        return {p * L, q * L};
    }

private:
    double x0_ = 0, dx_ = 1;
    int n_ = 0;
    std::vector<double> t_;
    std::vector<std::vector<double>> p_, q_;
};

// Scales consumption and stock holding of an underlying policy.
template <class P>
struct ScaledPolicy {
    const P& base;
    double c_scale = 1;
    double pi_scale = 1;
    Policy operator()(double t, double L, double H) const {
        Policy pol = base(t, L, H);
        return {pol.pi * pi_scale, pol.c * c_scale};
    }
};

inline double sample_tau(const LiquidationLaw& law, double u) {
    if (auto* e = std::get_if<Exponential>(&law)) return -std::log(u) / e->kappa;
    const auto& w = std::get<Weibull>(law);
    return w.lambda * std::pow(-std::log(u), 1.0 / w.k);
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Independent stream per (seed, pair index): adding paths never reshuffles
// the existing ones.
inline std::mt19937_64 stream_for(std::uint64_t seed, std::uint64_t index) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL)));
}

// Pairwise summation in fixed order.
inline double pairwise_sum(const double* x, long n) {
    if (n <= 8) {
        double s = 0;
        for (long i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const long h = n / 2;
    return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

inline UtilityEstimate summarize(const std::vector<double>& x) {
    UtilityEstimate e;
    const long n = static_cast<long>(x.size());
    e.n_effective = n;
    if (n == 0) {
        e.mean = std::numeric_limits<double>::quiet_NaN();
        e.std_error = std::numeric_limits<double>::quiet_NaN();
        return e;
    }
    e.mean = pairwise_sum(x.data(), n) / n;
    std::vector<double> d(n);
    for (long i = 0; i < n; ++i) d[i] = (x[i] - e.mean) * (x[i] - e.mean);
    e.std_error = n > 1 ? std::sqrt(pairwise_sum(d.data(), n) / (n - 1) / n) : 0.0;
    return e;
}

struct NullObserver {
    void operator()(long, int, double, double, double, double, double) const {}
};

}  // namespace detail

inline double simulation_horizon(const LiquidationLaw& law, const PathConfig& cfg) {
    return cfg.horizon > 0 ? cfg.horizon : horizon_for_cutoff(law, cfg.horizon_cutoff);
}

// One path of the wealth dynamics. H moves exactly in log space. Over a step
// the policy is frozen as ratios to L (p = pi/L, q = c/L), which makes the L
// equation linear, dL = (b L + delta H) dt + s L dW1 with b = r + (alpha-r) p - q
// and s = sigma p, and it is advanced with an exponential integrator:
//   L <- L exp((b - s^2/2) dt + s dW1) + delta H dt (e^{b dt} - 1)/(b dt).
// This is exact for frozen coefficients without noise, stays stable where c/L
// is very large (near the L = 0 boundary) and keeps L > 0 whenever delta >= 0.
// A step that still ends with L <= 0 (or non-finite) absorbs the path; the
// return value is the step index of absorption, or -1.
// `visit(step, t, L, H, c)` is called at every grid time before absorption.
template <class P, class Visit>
int simulate_one(const P& policy, const MarketParams& mp, double l0, double h0, double dt, int steps,
                 const double* z1, const double* z2, Visit&& visit) {
    const double ex = mp.alpha - mp.r;
    const double hdrift = (mp.mu - mp.delta - 0.5 * mp.eta * mp.eta) * dt;
    const double sq = std::sqrt(dt);
    const double rb = std::sqrt(1 - mp.rho * mp.rho);
    double L = l0, logH = std::log(h0);
    for (int n = 0; n <= steps; ++n) {
        const double t = n * dt;
        const double H = std::exp(logH);
        const Policy pol = policy(t, L, H);
        visit(n, t, L, H, pol.c);
        if (n == steps) break;
        const double dw1 = sq * z1[n], dw2 = sq * z2[n];
        const double p = pol.pi / L, q = pol.c / L;
        const double b = mp.r + ex * p - q;
        const double s = mp.sigma * p;
        const double bd = b * dt;
        const double phi = std::abs(bd) < 1e-12 ? 1.0 : std::expm1(bd) / bd;
        L = L * std::exp(bd - 0.5 * s * s * dt + s * dw1) + mp.delta * H * dt * phi;
        if (!(L > 0) || !std::isfinite(L)) return n + 1;
        logH += hdrift + mp.eta * (mp.rho * dw1 + rb * dw2);
    }
    return -1;
}

// Both estimators on one ensemble (common random numbers).
template <class P>
MCResult estimate_utility(const P& policy, const MarketParams& mp, const LiquidationLaw& law, double l0, double h0,
                          const PathConfig& cfg) {
    if (!(l0 > 0) || !(h0 > 0)) throw DomainError("simulation needs l0 > 0 and h0 > 0");
    if (!(cfg.dt > 0) || cfg.n_paths < 1) throw DomainError("simulation needs dt > 0 and n_paths >= 1");
    const double T = simulation_horizon(law, cfg);
    if (!(cfg.dt <= T)) throw DomainError("simulation dt exceeds the horizon");
    const int steps = static_cast<int>(std::ceil(T / cfg.dt - 1e-9));
    if (static_cast<double>(cfg.n_paths) * steps > cfg.budget)
        throw DomainError("simulation exceeds the configured path-step budget (" + std::to_string(cfg.budget) + ")");
    const bool anti = cfg.antithetic;
    const long groups = anti ? (cfg.n_paths + 1) / 2 : cfg.n_paths;
    const int per = anti ? 2 : 1;

    std::vector<double> surv(steps + 1);
    for (int n = 0; n <= steps; ++n) surv[n] = survival(law, n * cfg.dt);

    std::vector<double> est_tau, est_sw, diff;
    est_tau.reserve(groups);
    est_sw.reserve(groups);
    diff.reserve(groups);
    std::vector<double> z1(steps), z2(steps), z1m(steps), z2m(steps);
    long absorbed = 0;
    MCResult res;
    for (long gidx = 0; gidx < groups; ++gidx) {
        auto rng = detail::stream_for(cfg.seed, static_cast<std::uint64_t>(gidx));
        std::normal_distribution<double> nd(0.0, 1.0);
        std::uniform_real_distribution<double> ud(0.0, 1.0);
        for (int n = 0; n < steps; ++n) {
            z1[n] = nd(rng);
            z2[n] = nd(rng);
        }
        double u = ud(rng);
        if (u <= 0) u = 1e-300;
        double acc_tau = 0, acc_sw = 0;
        bool ok = true;
        for (int k = 0; k < per; ++k) {
            const double uu = k == 0 ? u : 1 - u;
            const double tau = sample_tau(law, uu > 0 ? uu : 1e-300);
            const double* a = z1.data();
            const double* b = z2.data();
            if (k == 1) {
                for (int n = 0; n < steps; ++n) {
                    z1m[n] = -z1[n];
                    z2m[n] = -z2[n];
                }
                a = z1m.data();
                b = z2m.data();
            }
            double prev_f = 0, prev_lc = 0, sw = 0, rt = 0;
            bool bad = false;
            auto visit = [&](int n, double t, double, double, double c) {
                if (!(c > 0)) {
                    bad = true;
                    return;
                }
                const double lc = std::log(c);
                const double f = surv[n] * lc;
                if (n > 0) {
                    sw += 0.5 * (prev_f + f) * cfg.dt;
                    const double t0 = t - cfg.dt;
                    if (tau > t0) {
                        const double frac = std::min(1.0, (tau - t0) / cfg.dt);
                        // trapezoid on [t0, t0 + frac dt] with linear interpolation of log c
                        const double lc_end = prev_lc + frac * (lc - prev_lc);
                        rt += 0.5 * (prev_lc + lc_end) * frac * cfg.dt;
                    }
                }
                prev_f = f;
                prev_lc = lc;
            };
            const int hit = simulate_one(policy, mp, l0, h0 * 1.0, cfg.dt, steps, a, b, visit);
            if (hit >= 0 || bad) {
                ++absorbed;
                ok = false;
                continue;
            }
            acc_tau += rt;
            acc_sw += sw;
        }
        if (!ok) continue;
        est_tau.push_back(acc_tau / per);
        est_sw.push_back(acc_sw / per);
        diff.push_back((acc_sw - acc_tau) / per);
    }
    res.random_tau = detail::summarize(est_tau);
    res.survival_weighted = detail::summarize(est_sw);
    const auto dsum = detail::summarize(diff);
    res.paired_diff_mean = dsum.mean;
    res.paired_diff_se = dsum.std_error;
    res.n_paths = groups * per;
    res.absorbed = absorbed;
    res.absorbed_fraction = static_cast<double>(absorbed) / res.n_paths;
    res.flagged = res.absorbed_fraction > cfg.max_absorbed;
    res.horizon = steps * cfg.dt;
    res.dt = cfg.dt;
    return res;
}

template <class P>
UtilityEstimate estimate_utility_random_tau(const P& policy, const MarketParams& mp, const LiquidationLaw& law,
                                            double l0, double h0, const PathConfig& cfg) {
    const auto r = estimate_utility(policy, mp, law, l0, h0, cfg);
    if (r.flagged) throw std::runtime_error("simulation: absorbed fraction above limit");
    return r.random_tau;
}

template <class P>
UtilityEstimate estimate_utility_survival_weighted(const P& policy, const MarketParams& mp,
                                                   const LiquidationLaw& law, double l0, double h0,
                                                   const PathConfig& cfg) {
    const auto r = estimate_utility(policy, mp, law, l0, h0, cfg);
    if (r.flagged) throw std::runtime_error("simulation: absorbed fraction above limit");
    return r.survival_weighted;
}

struct PerturbationReport {
    double eps = 0;
    UtilityEstimate base, c_up, c_down, pi_up, pi_down;  // survival-weighted estimates
    bool base_wins = false;  // every perturbed estimate <= base + 2 pooled standard errors
    double worst_margin = 0; // max over perturbations of (perturbed - base) / pooled SE
};

template <class P>
PerturbationReport perturbation_test(const P& policy, const MarketParams& mp, const LiquidationLaw& law, double l0,
                                     double h0, const PathConfig& cfg, double eps) {
    if (!(eps >= 0 && eps < 0.5)) throw DomainError("perturbation eps must be in [0, 0.5)");
    PerturbationReport rep;
    rep.eps = eps;
    auto run = [&](double cs, double ps) {
        const ScaledPolicy<P> sp{policy, cs, ps};
        return estimate_utility(sp, mp, law, l0, h0, cfg).survival_weighted;
    };
    rep.base = run(1, 1);
    rep.c_up = run(1 + eps, 1);
    rep.c_down = run(1 - eps, 1);
    rep.pi_up = run(1, 1 + eps);
    rep.pi_down = run(1, 1 - eps);
    rep.base_wins = true;
    rep.worst_margin = -std::numeric_limits<double>::infinity();
    for (const auto* e : {&rep.c_up, &rep.c_down, &rep.pi_up, &rep.pi_down}) {
        const double pooled = std::sqrt(rep.base.std_error * rep.base.std_error + e->std_error * e->std_error);
        const double m = pooled > 0 ? (e->mean - rep.base.mean) / pooled : (e->mean > rep.base.mean ? 1e300 : 0.0);
        rep.worst_margin = std::max(rep.worst_margin, m);
        if (!(e->mean <= rep.base.mean + 2 * pooled)) rep.base_wins = false;
    }
    return rep;
}

}  // namespace illiq
