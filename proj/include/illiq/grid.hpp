#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "market_model.hpp"

namespace illiq {

// Log-uniform grid in z = l/h. The reporting range [z_min, z_max] carries
// `n` nodes; `buffer` (below) and `buffer_top` (above) extra nodes with the
// same log-spacing move the artificial boundaries away from the reported range.
struct ZGrid {
    double z_min = 1e-2;
    double z_max = 1e4;
    int n = 2000;
    int buffer = 0;
    int buffer_top = 0;
    double x0 = 0;  // log z of node 0 (lowest buffer node)
    double dx = 0;
    std::vector<double> z;

    static ZGrid log_uniform(double z_min, double z_max, int n, double buffer_decades = 0.0,
                             double top_decades = 0.0) {
        if (!(n >= 3)) throw DomainError("grid needs at least 3 nodes");
        if (!(z_min > 0) || !(z_max > z_min)) throw DomainError("grid needs 0 < z_min < z_max");
        if (!(buffer_decades >= 0) || !(top_decades >= 0)) throw DomainError("buffer decades must be >= 0");
        ZGrid g;
        g.z_min = z_min;
        g.z_max = z_max;
        g.n = n;
        g.dx = std::log(z_max / z_min) / (n - 1);
        g.buffer = static_cast<int>(std::lround(buffer_decades * std::log(10.0) / g.dx));
        g.buffer_top = static_cast<int>(std::lround(top_decades * std::log(10.0) / g.dx));
        g.x0 = std::log(z_min) - g.buffer * g.dx;
        g.z.resize(g.size());
        for (int i = 0; i < g.size(); ++i) g.z[i] = std::exp(g.x0 + i * g.dx);
        // pin the reporting end points exactly
        g.z[g.buffer] = z_min;
        g.z[g.report_end() - 1] = z_max;
        return g;
    }

    int size() const { return buffer + n + buffer_top; }
    int report_begin() const { return buffer; }
    int report_end() const { return buffer + n; }  // one past the last reporting node
    double x(int i) const { return x0 + i * dx; }
    double z_lowest() const { return z.front(); }

    // Cell index j and fraction s so that log z = x(j) + s dx, clamped to the grid.
    void locate(double zq, int& j, double& s) const {
        const double u = (std::log(zq) - x0) / dx;
        if (u <= 0) {
            j = 0;
            s = 0;
            return;
        }
        if (u >= size() - 1) {
            j = size() - 2;
            s = 1;
            return;
        }
        j = std::min(static_cast<int>(u), size() - 2);
        s = u - j;
    }

    bool contains(double zq) const { return zq >= z.front() * (1 - 1e-12) && zq <= z.back() * (1 + 1e-12); }
};

inline double lerp_on_grid(const ZGrid& g, const std::vector<double>& f, double zq) {
    int j;
    double s;
    g.locate(zq, j, s);
    return f[j] + s * (f[j + 1] - f[j]);
}

// Shape-preserving (Fritsch-Carlson) cubic Hermite interpolation of f over
// log z on a uniform log grid.
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    MonotoneCubic(const ZGrid& g, std::vector<double> f) : g_(&g), f_(std::move(f)), m_(f_.size()) {
        const int n = static_cast<int>(f_.size());
        const double h = g.dx;
        std::vector<double> del(n - 1);
        for (int i = 0; i + 1 < n; ++i) del[i] = (f_[i + 1] - f_[i]) / h;
        m_[0] = del[0];
        m_[n - 1] = del[n - 2];
        for (int i = 1; i + 1 < n; ++i) {
            if (del[i - 1] * del[i] <= 0)
                m_[i] = 0;
            else
                m_[i] = 2.0 / (1.0 / del[i - 1] + 1.0 / del[i]);  // harmonic mean
        }
        for (int i = 0; i + 1 < n; ++i) {
            if (del[i] == 0) {
                m_[i] = m_[i + 1] = 0;
                continue;
            }
            const double a = m_[i] / del[i], b = m_[i + 1] / del[i];
            const double r2 = a * a + b * b;
            if (r2 > 9) {
                const double tau = 3.0 / std::sqrt(r2);
                m_[i] = tau * a * del[i];
                m_[i + 1] = tau * b * del[i];
            }
        }
    }

    double operator()(double zq) const {
        int j;
        double s;
        g_->locate(zq, j, s);
        const double h = g_->dx;
        const double s2 = s * s, s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * f_[j] + (s3 - 2 * s2 + s) * h * m_[j] + (-2 * s3 + 3 * s2) * f_[j + 1] +
               (s3 - s2) * h * m_[j + 1];
    }

private:
    const ZGrid* g_ = nullptr;
    std::vector<double> f_;
    std::vector<double> m_;
};

// Thomas algorithm for lo[i] x[i-1] + di[i] x[i] + up[i] x[i+1] = rhs[i].
// The systems assembled by the solvers are strictly diagonally dominant
// M-matrices, so no pivoting is needed.
inline void solve_tridiagonal(const std::vector<double>& lo, const std::vector<double>& di,
                              const std::vector<double>& up, std::vector<double>& rhs) {
    const int n = static_cast<int>(di.size());
    std::vector<double> c(n);
    double beta = di[0];
    rhs[0] /= beta;
    for (int i = 1; i < n; ++i) {
        c[i] = up[i - 1] / beta;
        beta = di[i] - lo[i] * c[i];
        rhs[i] = (rhs[i] - lo[i] * rhs[i - 1]) / beta;
    }
    for (int i = n - 2; i >= 0; --i) rhs[i] -= c[i + 1] * rhs[i + 1];
}

}  // namespace illiq
