#pragma once

// Finite-difference discretization shared by the stationary (exponential) and
// time-stepping (Weibull) solvers.
//
// Working in x = log z with controls p = pi/l and q = c/l, the reduced
// Hamiltonian at a node reads
//   D(p) (u_xx - u_x) + B(p, q) u_x + w log(q z)
//   D(p) = ((sigma p - eta rho)^2 + eta^2 (1 - rho^2)) / 2
//   B    = (eta^2 + r - mu + delta) + delta / z + (alpha - r - eta rho sigma) p - q
// and every node equation has the form
//   a0 u_i = [D u_xx + (B - D) u_x]_i + cst_i + w log(q_i z_i) + f_i.
// The convection part is central where the cell Peclet number allows it and
// upwind otherwise, so the assembled matrix is always an M-matrix.
//
// Boundaries: at the top node a ghost value enforces u_x = slope (the Merton
// asymptote). At the bottom node, for delta > 0, the state constraint L >= 0
// is imposed: no stock position, consumption capped so the liquid drift stays
// nonnegative, and u_zz = 0. For delta = 0 the problem is exactly
// scale-invariant and the bottom node gets the same Neumann slope as the top.

#include <algorithm>
#include <cmath>
#include <vector>

#include "grid.hpp"
#include "market_model.hpp"

namespace illiq {

struct SchemeSettings {
    double pmax = 20.0;       // bound on |pi/l|
    double qmin = 1e-12;      // bounds on c/l
    double qmax = 1e12;
    double z_central = 1e-3;  // below this z convection is always upwinded
};

// Coefficients of one time level / stationary problem.
struct StepSpec {
    double a0 = 0;                          // kappa (stationary) or 1/dt
    double w = 1;                           // weight of log consumption: 1 or survival(t)
    const std::vector<double>* f = nullptr; // extra source term per node (may be null)
    double slope = 0;                       // u_x at the top (and at the bottom when delta = 0)
};

struct HowardStats {
    int iterations = 0;
    double last_update = 0;
    bool converged = false;
};

class ReducedScheme {
public:
    ReducedScheme(const MarketParams& p, const ZGrid& g, SchemeSettings s = {})
        : mp_(p), g_(g), s_(s) {
        a1_ = p.alpha - p.r - p.eta * p.rho * p.sigma;
        d2_ = 0.5 * p.eta * p.eta * (1 - p.rho * p.rho);
        drift0_ = p.eta * p.eta + p.r - p.mu + p.delta;
        constrained_ = p.delta > 0;
        n_ = g.size();
        q_cap0_ = (p.delta + drift0_ * g.z[0]) / g.z[0];
    }

    int size() const { return n_; }
    const ZGrid& grid() const { return g_; }
    bool constrained() const { return constrained_; }

    double diffusion(double p) const {
        const double u = mp_.sigma * p - mp_.eta * mp_.rho;
        return 0.5 * u * u + d2_;
    }

    // Coefficients of u_{i-1}-u_i, u_{i+1}-u_i and the constant part of the
    // convection/diffusion operator at node i under controls (p, q).
    void coeffs(int i, double p, double q, double slope, double& lo, double& up, double& cst) const {
        const double dx = g_.dx;
        const double z = g_.z[i];
        if (i == 0 && constrained_) {
            const double b0 = drift0_ + mp_.delta / z - q;
            lo = 0;
            up = b0 / (dx * (1 + dx / 2));
            cst = 0;
            return;
        }
        const double D = diffusion(p);
        const double beta = drift0_ + mp_.delta / z + a1_ * p - q - D;
        if (i == n_ - 1) {
            lo = 2 * D / (dx * dx);
            up = 0;
            cst = 2 * D * slope / dx + beta * slope;
            return;
        }
        if (i == 0) {
            lo = 0;
            up = 2 * D / (dx * dx);
            cst = -2 * D * slope / dx + beta * slope;
            return;
        }
        lo = up = D / (dx * dx);
        cst = 0;
        if (std::abs(beta) * dx <= 2 * D && z >= s_.z_central) {
            lo -= beta / (2 * dx);
            up += beta / (2 * dx);
        } else if (beta > 0) {
            up += beta / dx;
        } else {
            lo -= beta / dx;
        }
    }

    double hamiltonian_residual(const std::vector<double>& u, int i, double p, double q, const StepSpec& st) const {
        double lo, up, cst;
        coeffs(i, p, q, st.slope, lo, up, cst);
        const double ui = u[i];
        const double um = i > 0 ? u[i - 1] : ui;
        const double upv = i + 1 < n_ ? u[i + 1] : ui;
        return -st.a0 * ui + lo * (um - ui) + up * (upv - ui) + cst + st.w * std::log(q * g_.z[i]) +
               (st.f ? (*st.f)[i] : 0.0);
    }

    // Pointwise maximizers of the Hamiltonian for given derivative estimates.
    void maximizer(double ux, double uxx, double w, double& p, double& q) const {
        q = ux > 0 ? std::clamp(w / ux, s_.qmin, s_.qmax) : s_.qmax;
        const double den = uxx - ux;
        const double sig2 = mp_.sigma * mp_.sigma;
        if (den < 0) {
            p = std::clamp(mp_.eta * mp_.rho / mp_.sigma - a1_ * ux / (sig2 * den), -s_.pmax, s_.pmax);
        } else {
            const double hp = diffusion(s_.pmax) * den + a1_ * s_.pmax * ux;
            const double hm = diffusion(-s_.pmax) * den - a1_ * s_.pmax * ux;
            p = hp >= hm ? s_.pmax : -s_.pmax;
        }
    }

    // Discrete first/second x-derivatives at node i consistent with the boundary closures.
    void derivatives(const std::vector<double>& u, int i, double slope, double& ux, double& uxx) const {
        const double dx = g_.dx;
        if (i == n_ - 1) {
            ux = slope;
            uxx = 2 * (u[i - 1] - u[i] + dx * slope) / (dx * dx);
        } else if (i == 0) {
            if (constrained_) {
                ux = (u[1] - u[0]) / (dx * (1 + dx / 2));
                uxx = ux;
            } else {
                ux = slope;
                uxx = 2 * (u[1] - u[0] - dx * slope) / (dx * dx);
            }
        } else {
            ux = (u[i + 1] - u[i - 1]) / (2 * dx);
            uxx = (u[i + 1] - 2 * u[i] + u[i - 1]) / (dx * dx);
        }
    }

    // Policy improvement. With `force` the central-difference maximizers are
    // taken unconditionally; otherwise a node switches policy only when a
    // candidate strictly increases its discrete Hamiltonian. Candidates are the
    // maximizers built from central, forward and backward differences. The
    // strict-improvement rule keeps Howard's iteration monotone and rules out
    // cycling where the upwind direction depends on the control itself.
    void improve(const std::vector<double>& u, std::vector<double>& p, std::vector<double>& q, const StepSpec& st,
                 bool force) const {
        const double dx = g_.dx;
        for (int i = 0; i < n_; ++i) {
            if (i == 0 && constrained_) {
                double ux, uxx;
                derivatives(u, 0, st.slope, ux, uxx);
                p[0] = 0;
                const double cap = std::max(std::min(q_cap0_, s_.qmax), s_.qmin);
                q[0] = ux > 0 ? std::clamp(st.w / ux, s_.qmin, cap) : cap;
                continue;
            }
            double ux, uxx, cp, cq;
            derivatives(u, i, st.slope, ux, uxx);
            maximizer(ux, uxx, st.w, cp, cq);
            if (force) {
                p[i] = cp;
                q[i] = cq;
                continue;
            }
            double best = hamiltonian_residual(u, i, p[i], q[i], st);
            const double eps = 1e-13 * (1 + st.a0 * std::abs(u[i]));
            auto consider = [&](double pp, double qq) {
                const double gval = hamiltonian_residual(u, i, pp, qq, st);
                if (gval > best + eps) {
                    best = gval;
                    p[i] = pp;
                    q[i] = qq;
                }
            };
            consider(cp, cq);
            if (i > 0 && i < n_ - 1) {
                maximizer((u[i + 1] - u[i]) / dx, uxx, st.w, cp, cq);
                consider(cp, cq);
                maximizer((u[i] - u[i - 1]) / dx, uxx, st.w, cp, cq);
                consider(cp, cq);
            }
        }
    }

    // Solves the linear system for frozen (p, q).
    void evaluate_policy(std::vector<double>& u, const std::vector<double>& p, const std::vector<double>& q,
                         const StepSpec& st) const {
        lo_.resize(n_);
        di_.resize(n_);
        up_.resize(n_);
        for (int i = 0; i < n_; ++i) {
            double lo, up, cst;
            coeffs(i, p[i], q[i], st.slope, lo, up, cst);
            lo_[i] = -lo;
            up_[i] = -up;
            di_[i] = st.a0 + lo + up;
            u[i] = cst + st.w * std::log(q[i] * g_.z[i]) + (st.f ? (*st.f)[i] : 0.0);
        }
        solve_tridiagonal(lo_, di_, up_, u);
    }

    // Howard's policy iteration from the iterate u with starting policy (p, q).
    HowardStats howard(std::vector<double>& u, std::vector<double>& p, std::vector<double>& q, const StepSpec& st,
                       double tol, int max_iter, bool init_policy) const {
        HowardStats stats;
        if (init_policy) improve(u, p, q, st, true);
        std::vector<double> un(n_);
        for (int it = 1; it <= max_iter; ++it) {
            un = u;
            evaluate_policy(un, p, q, st);
            double dv = 0;
            for (int i = 0; i < n_; ++i) dv = std::max(dv, std::abs(un[i] - u[i]));
            u.swap(un);
            improve(u, p, q, st, false);
            stats.iterations = it;
            stats.last_update = dv;
            if (dv < tol) {
                stats.converged = true;
                break;
            }
        }
        return stats;
    }

    double a1() const { return a1_; }
    double d2() const { return d2_; }

private:
    MarketParams mp_;
    const ZGrid& g_;
    SchemeSettings s_;
    double a1_, d2_, drift0_, q_cap0_;
    bool constrained_;
    int n_;
    mutable std::vector<double> lo_, di_, up_;
};

}  // namespace illiq
